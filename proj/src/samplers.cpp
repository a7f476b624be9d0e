#include "meaeq/samplers.hpp"

#include "meaeq/error.hpp"
#include "meaeq/hash.hpp"
#include "meaeq/random.hpp"

#include "json.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace meaeq {

std::size_t compute_budget(const BudgetSpec& spec) {
    std::size_t k = 0;
    if (spec.mode == BudgetMode::Absolute) {
        k = spec.absolute_k;
    } else {
        if (!(spec.rate > 0.0 && spec.rate <= 1.0)) fail(ErrorCode::Config, "budget rate must lie in (0,1]");
        // The relative nudge keeps exact products such as 0.003 * 40000 from
        // landing one ulp under the integer.
        const double raw = spec.rate * static_cast<double>(spec.base_size);
        k = static_cast<std::size_t>(std::floor(raw * (1.0 + 1e-12)));
    }
    if (k == 0) fail(ErrorCode::ZeroBudget, "query budget resolves to 0");
    return k;
}

QueryPool random_sample(const QueryPool& pool, std::size_t k, std::uint64_t seed) {
    if (k == 0) fail(ErrorCode::ZeroBudget, "cannot sample 0 queries");
    if (k > pool.size()) {
        fail(ErrorCode::ShortPool, "pool of " + std::to_string(pool.size()) + " cannot supply k=" + std::to_string(k));
    }
    Rng rng(seed);
    std::vector<SentenceId> ids;
    ids.reserve(k);
    for (auto pos : draw_without_replacement(pool.size(), k, rng)) ids.push_back(pool.ids()[pos]);
    std::sort(ids.begin(), ids.end());
    return QueryPool(std::move(ids), pool.stage());
}

double entropy(std::span<const double> probs) {
    if (probs.empty()) fail(ErrorCode::InvalidDistribution, "empty probability vector");
    double total = 0.0;
    double h = 0.0;
    for (double p : probs) {
        if (!(p >= 0.0 && p <= 1.0)) fail(ErrorCode::InvalidDistribution, "probability outside [0,1]");
        total += p;
        if (p > 0.0) h -= p * std::log(p);
    }
    if (std::abs(total - 1.0) > 1e-6) fail(ErrorCode::InvalidDistribution, "probabilities do not sum to 1");
    return std::max(h, 0.0);
}

std::vector<std::size_t> al_quotas(std::size_t k, const ALConfig& cfg) {
    if (cfg.rounds < 1) fail(ErrorCode::Config, "active learning needs at least one round");
    if (!(cfg.seed_fraction > 0.0 && cfg.seed_fraction <= 1.0)) {
        fail(ErrorCode::Config, "seed_fraction must lie in (0,1]");
    }
    if (k == 0) fail(ErrorCode::ZeroBudget, "cannot sample 0 queries");
    if (cfg.rounds == 1) return {k};

    const auto first = static_cast<std::size_t>(std::floor(static_cast<double>(k) * cfg.seed_fraction * (1.0 + 1e-12)));
    const std::size_t later = cfg.rounds - 1;
    const std::size_t rest = k - std::min(first, k);
    const std::size_t per = rest / later;
    if (first == 0 || per == 0) {
        fail(ErrorCode::Config, "budget k=" + std::to_string(k) + " cannot fill " + std::to_string(cfg.rounds) +
                                    " rounds with seed_fraction " + std::to_string(cfg.seed_fraction));
    }
    std::vector<std::size_t> quotas{first};
    for (std::size_t r = 0; r < later; ++r) quotas.push_back(per);
    quotas.back() += rest - per * later;
    return quotas;
}

ActiveLearningResult al_loop(const QueryPool& pool, const CorpusStore& store, std::size_t k, const ALConfig& cfg,
                             ALStrategy strategy, const Victim& victim, QueryLedger& ledger,
                             const Embedder& embedder, std::size_t num_classes, const TrainHyper& hyper,
                             std::uint64_t seed) {
    if (k > pool.size()) {
        fail(ErrorCode::ShortPool, "pool of " + std::to_string(pool.size()) + " cannot supply k=" + std::to_string(k));
    }
    const auto quotas = al_quotas(k, cfg);

    std::unordered_map<SentenceId, Embedding> embedding_of;
    if (strategy == ALStrategy::Uncertainty && quotas.size() > 1) {
        const auto sentences = pool.resolve(store);
        auto embeddings = embedder.embed_batch(sentences);
        for (std::size_t i = 0; i < sentences.size(); ++i) embedding_of.emplace(sentences[i].id, std::move(embeddings[i]));
    }

    ActiveLearningResult result;
    std::vector<SentenceId> selected;
    std::unordered_set<SentenceId> taken;

    for (std::size_t round = 0; round < quotas.size(); ++round) {
        std::vector<SentenceId> remaining;
        remaining.reserve(pool.size() - taken.size());
        for (auto id : pool.ids()) {
            if (!taken.contains(id)) remaining.push_back(id);
        }
        const QueryPool remaining_pool(std::move(remaining), pool.stage());

        std::vector<SentenceId> picks;
        if (round == 0 || strategy == ALStrategy::Random) {
            const auto round_seed = round == 0 ? seed : derive_seed(seed, round);
            picks = random_sample(remaining_pool, quotas[round], round_seed).ids();
        } else {
            std::vector<std::pair<double, SentenceId>> ranked;
            ranked.reserve(remaining_pool.size());
            for (auto id : remaining_pool.ids()) {
                const auto pred = predict(result.student, embedding_of.at(id));
                ranked.emplace_back(entropy(pred.probabilities), id);
            }
            std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
                return a.first != b.first ? a.first > b.first : a.second < b.second;
            });
            for (std::size_t i = 0; i < quotas[round]; ++i) picks.push_back(ranked[i].second);
        }

        std::vector<Sentence> queries;
        queries.reserve(picks.size());
        for (auto id : picks) queries.push_back(store.at(id));
        try {
            const auto responses = query_victim(victim, queries, ledger);
            for (std::size_t i = 0; i < queries.size(); ++i) {
                result.pairs.push_back(LabeledPair{queries[i], responses[i].label});
            }
        } catch (const Error& e) {
            throw Error(e.code(), "active learning round " + std::to_string(round + 1) + ": " + e.what());
        }
        for (auto id : picks) {
            taken.insert(id);
            selected.push_back(id);
        }
        result.student = train_student_or_constant(result.pairs, embedder, num_classes, hyper);
    }

    result.queries = QueryPool(std::move(selected), pool.stage());
    return result;
}

MeaeqSelection meaeq_sample(const QueryPool& original, const CorpusStore& store, const EntailmentScorer& scorer,
                            const Embedder& embedder, const FilterConfig& filter_cfg, std::size_t k,
                            std::size_t max_iterations, std::uint64_t seed) {
    if (k == 0) fail(ErrorCode::ZeroBudget, "cannot sample 0 queries");
    const auto scores = score_pool(original, store, scorer, filter_cfg.prompt);
    const auto filtered = filter_task_relevant(original, scores, filter_cfg);

    MeaeqSelection out;
    out.filter = filter_report(original, filtered);
    out.reduction = reduce(filtered, store, embedder, k, max_iterations, seed);

    auto ids = out.reduction.representatives.ids();
    if (ids.size() < k) {
        const std::unordered_set<SentenceId> chosen(ids.begin(), ids.end());
        std::vector<SentenceId> rest;
        for (auto id : filtered.ids()) {
            if (!chosen.contains(id)) rest.push_back(id);
        }
        out.topped_up = k - ids.size();
        const auto extra = random_sample(QueryPool(std::move(rest), PoolStage::Filtered), out.topped_up,
                                         derive_seed(seed, 0x746f7075ULL));
        ids.insert(ids.end(), extra.ids().begin(), extra.ids().end());
        std::sort(ids.begin(), ids.end());
    }
    out.queries = filtered.advanced(std::move(ids), PoolStage::Reduced);
    return out;
}

void save_query_set(const std::filesystem::path& path, const QuerySet& set) {
    char digest[17];
    std::snprintf(digest, sizeof digest, "%016llx", static_cast<unsigned long long>(set.header.config_digest));
    std::ostringstream os;
    os << nlohmann::json{{"strategy", set.header.strategy},
                         {"seed", set.header.seed},
                         {"k", set.header.k},
                         {"config_digest", digest}}
              .dump()
       << '\n';
    for (std::size_t i = 0; i < set.queries.size(); ++i) {
        os << nlohmann::json{{"rank", i}, {"id", set.queries[i].id}, {"text", set.queries[i].text}}.dump() << '\n';
    }
    write_file(path, os.str());
}

QuerySet load_query_set(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    QuerySet set;
    std::string line;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            if (header) {
                header = false;
                set.header.strategy = rec.at("strategy").get<std::string>();
                set.header.seed = rec.at("seed").get<std::uint64_t>();
                set.header.k = rec.at("k").get<std::size_t>();
                set.header.config_digest = std::stoull(rec.at("config_digest").get<std::string>(), nullptr, 16);
                continue;
            }
            if (rec.at("rank").get<std::size_t>() != set.queries.size()) {
                fail(ErrorCode::Format, path.string() + ": ranks must be sequential");
            }
            set.queries.push_back(Sentence{rec.at("id").get<SentenceId>(), rec.at("text").get<std::string>(), 0});
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ": " + e.what());
        }
    }
    if (header) fail(ErrorCode::Format, path.string() + ": missing query set header");
    if (set.queries.size() != set.header.k) {
        fail(ErrorCode::Format, path.string() + ": header k disagrees with the number of queries");
    }
    return set;
}

} // namespace meaeq
