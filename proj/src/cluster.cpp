#include "meaeq/cluster.hpp"

#include "meaeq/error.hpp"
#include "meaeq/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

namespace meaeq {

namespace {

template <typename A, typename B>
double cosine_distance_impl(std::span<const A> u, std::span<const B> v) {
    if (u.size() != v.size()) {
        fail(ErrorCode::Shape, "cosine distance between vectors of dim " + std::to_string(u.size()) + " and " +
                                   std::to_string(v.size()));
    }
    double dot = 0.0, nu = 0.0, nv = 0.0;
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double a = u[i];
        const double b = v[i];
        dot += a * b;
        nu += a * a;
        nv += b * b;
    }
    if (nu == 0.0 || nv == 0.0) fail(ErrorCode::DegenerateVector, "cosine distance of a zero vector");
    const double cos = std::clamp(dot / (std::sqrt(nu) * std::sqrt(nv)), -1.0, 1.0);
    return 1.0 - cos;
}

double squared_distance(std::span<const float> p, const std::vector<double>& c) {
    double s = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double d = static_cast<double>(p[i]) - c[i];
        s += d * d;
    }
    return s;
}

} // namespace

double cosine_distance(std::span<const float> u, std::span<const float> v) {
    return cosine_distance_impl(u, v);
}

double cosine_distance(std::span<const float> u, std::span<const double> v) {
    return cosine_distance_impl(u, v);
}

double cosine_distance(const Embedding& u, const Embedding& v) {
    return cosine_distance_impl(std::span<const float>(u.values), std::span<const float>(v.values));
}

Embedding l2_normalized(const Embedding& e) {
    double n2 = 0.0;
    for (float x : e.values) n2 += static_cast<double>(x) * x;
    if (n2 == 0.0) fail(ErrorCode::DegenerateVector, "cannot normalize a zero embedding");
    const double inv = 1.0 / std::sqrt(n2);
    Embedding out;
    out.values.reserve(e.dim());
    for (float x : e.values) out.values.push_back(static_cast<float>(x * inv));
    return out;
}

ClusterModel kmeans(std::span<const Embedding> points, std::size_t k, std::size_t max_iterations,
                    std::uint64_t seed, std::span<const SentenceId> ids) {
    const std::size_t n = points.size();
    if (k == 0) fail(ErrorCode::InvalidK, "k must be >= 1");
    if (k > n) {
        fail(ErrorCode::KTooLarge, "k=" + std::to_string(k) + " exceeds the " + std::to_string(n) + " points");
    }
    if (max_iterations == 0) fail(ErrorCode::Config, "k-means needs at least one iteration");
    if (!ids.empty() && ids.size() != n) fail(ErrorCode::Shape, "ids and points differ in length");
    const std::size_t d = points.front().dim();
    for (const auto& p : points) {
        if (p.dim() != d) fail(ErrorCode::Shape, "k-means points must share one dimension");
    }

    auto id_of = [&](std::size_t i) -> SentenceId { return ids.empty() ? i : ids[i]; };

    // Positions sorted by id; all order-sensitive work walks this list.
    std::vector<std::size_t> by_id(n);
    std::iota(by_id.begin(), by_id.end(), std::size_t{0});
    std::sort(by_id.begin(), by_id.end(), [&](std::size_t a, std::size_t b) { return id_of(a) < id_of(b); });

    Rng rng(seed);
    auto picks = draw_without_replacement(n, k, rng);
    std::sort(picks.begin(), picks.end());

    ClusterModel model;
    model.centroids.reserve(k);
    for (auto rank : picks) {
        const auto& p = points[by_id[rank]].values;
        model.centroids.emplace_back(p.begin(), p.end());
    }
    model.assignment.assign(n, 0);

    std::vector<std::size_t> previous;
    std::vector<std::vector<double>> sums(k, std::vector<double>(d));
    std::vector<std::size_t> counts(k);

    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        for (std::size_t i = 0; i < n; ++i) {
            const std::span<const float> p(points[i].values);
            std::size_t best = 0;
            double best_d = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double dist = squared_distance(p, model.centroids[c]);
                if (dist < best_d) {
                    best_d = dist;
                    best = c;
                }
            }
            model.assignment[i] = best;
        }
        ++model.iterations_run;
        const bool converged = !previous.empty() && previous == model.assignment;

        if (!converged) {
            for (auto& s : sums) std::fill(s.begin(), s.end(), 0.0);
            std::fill(counts.begin(), counts.end(), 0);
            for (auto i : by_id) {
                const auto c = model.assignment[i];
                ++counts[c];
                for (std::size_t j = 0; j < d; ++j) sums[c][j] += points[i].values[j];
            }
            for (std::size_t c = 0; c < k; ++c) {
                if (counts[c] == 0) continue;
                for (std::size_t j = 0; j < d; ++j) {
                    model.centroids[c][j] = sums[c][j] / static_cast<double>(counts[c]);
                }
            }
        }

        double inertia = 0.0;
        for (auto i : by_id) {
            inertia += squared_distance(points[i].values, model.centroids[model.assignment[i]]);
        }
        model.inertia_trace.push_back(inertia);
        model.inertia = inertia;

        if (converged) break;
        previous = model.assignment;
    }
    return model;
}

ReductionResult select_representatives(const ClusterModel& model, std::span<const Embedding> points,
                                       std::span<const SentenceId> ids) {
    if (points.size() != model.assignment.size() || ids.size() != points.size()) {
        fail(ErrorCode::Shape, "cluster model is inconsistent with the supplied points");
    }
    const std::size_t k = model.k();
    std::vector<bool> found(k, false);
    std::vector<RepresentativeChoice> best(k);

    for (std::size_t i = 0; i < points.size(); ++i) {
        const auto c = model.assignment[i];
        if (c >= k) fail(ErrorCode::Shape, "assignment index out of range");
        double dist = 0.0;
        try {
            dist = cosine_distance(std::span<const float>(points[i].values),
                                   std::span<const double>(model.centroids[c]));
        } catch (const Error& e) {
            if (e.code() == ErrorCode::DegenerateVector) {
                throw DegenerateCentroid(c, "cluster " + std::to_string(c) + ": " + e.what());
            }
            throw;
        }
        auto& b = best[c];
        if (!found[c] || dist < b.distance_to_centroid || (dist == b.distance_to_centroid && ids[i] < b.id)) {
            found[c] = true;
            b = RepresentativeChoice{c, ids[i], dist};
        }
    }

    ReductionResult result;
    std::vector<SentenceId> chosen;
    std::vector<std::size_t> positions;
    for (std::size_t c = 0; c < k; ++c) {
        if (!found[c]) continue;
        result.per_cluster_choice.push_back(best[c]);
        chosen.push_back(best[c].id);
    }
    for (std::size_t i = 0; i < ids.size(); ++i) {
        if (std::find(chosen.begin(), chosen.end(), ids[i]) != chosen.end()) positions.push_back(i);
    }
    std::sort(chosen.begin(), chosen.end());
    result.representatives = QueryPool(std::move(chosen), PoolStage::Reduced);
    result.objective_value = drc_objective(positions, points).value;
    result.iterations_run = model.iterations_run;
    result.inertia = model.inertia;
    return result;
}

ObjectiveValue drc_objective(std::span<const std::size_t> subset, std::span<const Embedding> embeddings) {
    if (subset.size() < 2) return ObjectiveValue{0.0, true};
    double total = 0.0;
    for (std::size_t a = 0; a < subset.size(); ++a) {
        for (std::size_t b = a + 1; b < subset.size(); ++b) {
            total += cosine_distance(embeddings[subset[a]], embeddings[subset[b]]);
        }
    }
    return ObjectiveValue{total, false};
}

std::uint64_t binomial(std::uint64_t n, std::uint64_t k) {
    if (k > n) return 0;
    k = std::min(k, n - k);
    std::uint64_t r = 1;
    for (std::uint64_t i = 1; i <= k; ++i) {
        // r * (n - k + i) / i stays exact; saturate instead of overflowing.
        const std::uint64_t num = n - k + i;
        if (r > std::numeric_limits<std::uint64_t>::max() / num) return std::numeric_limits<std::uint64_t>::max();
        r = r * num / i;
    }
    return r;
}

BestSubset brute_force_best_subset(std::span<const Embedding> embeddings, std::size_t k) {
    const std::size_t n = embeddings.size();
    if (k == 0 || k > n) fail(ErrorCode::InvalidK, "subset size must lie in [1, n]");
    if (binomial(n, k) > kBruteForceGuard) {
        fail(ErrorCode::TooLarge, "C(" + std::to_string(n) + ", " + std::to_string(k) + ") exceeds the " +
                                      std::to_string(kBruteForceGuard) + " subset guard");
    }

    // Pairwise distance table, then lexicographic enumeration of combinations.
    std::vector<double> dist(n * n, 0.0);
    for (std::size_t a = 0; a < n; ++a) {
        for (std::size_t b = a + 1; b < n; ++b) {
            dist[a * n + b] = dist[b * n + a] = cosine_distance(embeddings[a], embeddings[b]);
        }
    }

    std::vector<std::size_t> comb(k);
    std::iota(comb.begin(), comb.end(), std::size_t{0});
    BestSubset best{comb, -1.0};
    for (;;) {
        double total = 0.0;
        for (std::size_t a = 0; a < k; ++a) {
            for (std::size_t b = a + 1; b < k; ++b) total += dist[comb[a] * n + comb[b]];
        }
        if (total > best.objective) best = BestSubset{comb, total};

        std::size_t i = k;
        while (i > 0 && comb[i - 1] == n - k + (i - 1)) --i;
        if (i == 0) break;
        ++comb[i - 1];
        for (std::size_t j = i; j < k; ++j) comb[j] = comb[j - 1] + 1;
    }
    return best;
}

ReductionResult reduce_points(std::span<const Embedding> embeddings, std::span<const SentenceId> ids,
                              std::size_t k, std::size_t max_iterations, std::uint64_t seed) {
    if (k > embeddings.size()) {
        fail(ErrorCode::ShortPool, "pool of " + std::to_string(embeddings.size()) +
                                       " cannot supply k=" + std::to_string(k) + " representatives");
    }
    if (ids.size() != embeddings.size()) fail(ErrorCode::Shape, "reduce_points needs one id per embedding");
    std::vector<Embedding> normalized;
    normalized.reserve(embeddings.size());
    for (const auto& e : embeddings) normalized.push_back(l2_normalized(e));

    const auto model = kmeans(normalized, k, max_iterations, seed, ids);
    auto result = select_representatives(model, normalized, ids);

    // Report the objective on the caller's vectors, not the rounded unit copies.
    std::vector<std::size_t> positions;
    for (const auto& choice : result.per_cluster_choice) {
        positions.push_back(static_cast<std::size_t>(
            std::find(ids.begin(), ids.end(), choice.id) - ids.begin()));
    }
    std::sort(positions.begin(), positions.end());
    result.objective_value = drc_objective(positions, embeddings).value;
    return result;
}

ReductionResult reduce(const QueryPool& pool, const CorpusStore& store, const Embedder& embedder,
                       std::size_t k, std::size_t max_iterations, std::uint64_t seed) {
    if (k > pool.size()) {
        fail(ErrorCode::ShortPool, "pool of " + std::to_string(pool.size()) + " cannot supply k=" +
                                       std::to_string(k) + " representatives");
    }
    const auto sentences = pool.resolve(store);
    const auto embeddings = embedder.embed_batch(sentences);
    return reduce_points(embeddings, pool.ids(), k, max_iterations, seed);
}

void save_reduction(const std::filesystem::path& path, const ReductionResult& result) {
    std::ostringstream os;
    for (const auto& c : result.per_cluster_choice) {
        os << nlohmann::json{{"cluster", c.cluster}, {"id", c.id}, {"distance_to_centroid", c.distance_to_centroid}}
                  .dump()
           << '\n';
    }
    os << nlohmann::json{{"objective_value", result.objective_value},
                         {"iterations_run", result.iterations_run},
                         {"inertia", result.inertia}}
              .dump()
       << '\n';
    write_file(path, os.str());
}

ReductionResult load_reduction(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    ReductionResult result;
    std::vector<SentenceId> ids;
    bool footer = false;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            if (rec.contains("objective_value")) {
                result.objective_value = rec.at("objective_value").get<double>();
                result.iterations_run = rec.at("iterations_run").get<std::size_t>();
                result.inertia = rec.at("inertia").get<double>();
                footer = true;
                continue;
            }
            RepresentativeChoice c{rec.at("cluster").get<std::size_t>(), rec.at("id").get<SentenceId>(),
                                   rec.at("distance_to_centroid").get<double>()};
            ids.push_back(c.id);
            result.per_cluster_choice.push_back(c);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ": " + e.what());
        }
    }
    if (!footer) fail(ErrorCode::Format, path.string() + ": missing reduction footer record");
    std::sort(ids.begin(), ids.end());
    result.representatives = QueryPool(std::move(ids), PoolStage::Reduced);
    return result;
}

} // namespace meaeq
