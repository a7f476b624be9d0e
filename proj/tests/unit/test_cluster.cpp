#include "doctest.h"
#include "support/support.hpp"

#include "meaeq/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

using namespace meaeq;
using testing::error_code_of;
using testing::gaussian_points;

namespace {

Embedding v2(float x, float y) { return Embedding{{x, y}}; }

double reference_cosine(const Embedding& a, const Embedding& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.dim(); ++i) {
        dot += double(a.values[i]) * b.values[i];
        na += double(a.values[i]) * a.values[i];
        nb += double(b.values[i]) * b.values[i];
    }
    return 1.0 - dot / std::sqrt(na * nb);
}

double sq_dist(const Embedding& p, const std::vector<double>& c) {
    double s = 0;
    for (std::size_t i = 0; i < c.size(); ++i) s += (p.values[i] - c[i]) * (p.values[i] - c[i]);
    return s;
}

} // namespace

TEST_CASE("cosine distance examples") {
    const auto v = v2(0.3f, -2.f);
    CHECK(cosine_distance(v, v) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(cosine_distance(v2(1, 0), v2(0, 1)) == doctest::Approx(1.0));
    CHECK(cosine_distance(v2(1, 0), v2(-1, 0)) == doctest::Approx(2.0));
    CHECK(error_code_of([] { cosine_distance(v2(0, 0), v2(1, 0)); }) == ErrorCode::DegenerateVector);
    CHECK(error_code_of([] { cosine_distance(v2(1, 0), Embedding{{1, 0, 0}}); }) == ErrorCode::Shape);
}

TEST_CASE("two separated pairs form two clusters") {
    const std::vector<Embedding> pts{v2(0, 1), v2(0, 0.9f), v2(5, 0), v2(5.1f, 0)};
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto m = kmeans(pts, 2, 300, seed);
        CHECK(m.assignment[0] == m.assignment[1]);
        CHECK(m.assignment[2] == m.assignment[3]);
        CHECK(m.assignment[0] != m.assignment[2]);
    }
}

TEST_CASE("k equal to n and k equal to 1") {
    const auto pts = gaussian_points(9, 3, 1);
    const auto all = kmeans(pts, 9, 300, 4);
    CHECK(all.inertia == doctest::Approx(0.0));
    auto a = all.assignment;
    std::sort(a.begin(), a.end());
    CHECK(std::unique(a.begin(), a.end()) == a.end());

    const auto one = kmeans(pts, 1, 300, 4);
    for (std::size_t d = 0; d < 3; ++d) {
        double mean = 0;
        for (const auto& p : pts) mean += p.values[d];
        CHECK(one.centroids[0][d] == doctest::Approx(mean / 9.0));
    }
    CHECK(error_code_of([&] { kmeans(pts, 0, 300, 0); }) == ErrorCode::InvalidK);
    CHECK(error_code_of([&] { kmeans(pts, 10, 300, 0); }) == ErrorCode::KTooLarge);
}

TEST_CASE("inertia trace is non-increasing and matches the final assignment") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto pts = gaussian_points(200, 8, 100 + seed);
        const auto m = kmeans(pts, 6, 300, seed);
        REQUIRE(!m.inertia_trace.empty());
        for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1]);
        double inertia = 0;
        for (std::size_t i = 0; i < pts.size(); ++i) inertia += sq_dist(pts[i], m.centroids[m.assignment[i]]);
        CHECK(m.inertia == doctest::Approx(inertia));
    }
}

TEST_CASE("input order does not matter given ids") {
    const auto pts = gaussian_points(40, 5, 8);
    std::vector<SentenceId> ids(40);
    for (std::size_t i = 0; i < 40; ++i) ids[i] = 1000 + i;
    std::vector<std::size_t> perm(40);
    for (std::size_t i = 0; i < 40; ++i) perm[i] = (i * 17) % 40;
    std::vector<Embedding> shuffled;
    std::vector<SentenceId> shuffled_ids;
    for (auto p : perm) {
        shuffled.push_back(pts[p]);
        shuffled_ids.push_back(ids[p]);
    }
    const auto a = reduce_points(pts, ids, 5, 300, 3);
    const auto b = reduce_points(shuffled, shuffled_ids, 5, 300, 3);
    CHECK(a.representatives.ids() == b.representatives.ids());
    CHECK(a.objective_value == doctest::Approx(b.objective_value));
}

TEST_CASE("representative selection") {
    ClusterModel single;
    single.centroids = {{2.0, 2.0}};
    single.assignment = {0};
    const std::vector<Embedding> one{v2(3, 1)};
    const std::vector<SentenceId> one_id{4};
    CHECK(select_representatives(single, one, one_id).representatives.ids() == std::vector<SentenceId>{4});

    ClusterModel m;
    m.centroids = {{0.95, 0.05}};
    m.assignment = {0, 0};
    const std::vector<Embedding> pts{v2(1, 0), v2(0.9f, 0.1f)};
    const std::vector<SentenceId> ids{0, 1};
    const auto c = Embedding{{0.95f, 0.05f}};
    const SentenceId nearer = reference_cosine(pts[0], c) < reference_cosine(pts[1], c) ? 0 : 1;
    CHECK(select_representatives(m, pts, ids).representatives.ids() == std::vector<SentenceId>{nearer});

    ClusterModel sym;
    sym.centroids = {{1.0, 0.0}};
    sym.assignment = {0, 0};
    const std::vector<Embedding> mirrored{v2(1, 0.5f), v2(1, -0.5f)};
    const std::vector<SentenceId> mirrored_ids{9, 3};
    CHECK(select_representatives(sym, mirrored, mirrored_ids).representatives.ids() == std::vector<SentenceId>{3});

    ClusterModel zero;
    zero.centroids = {{0.0, 0.0}};
    zero.assignment = {0};
    CHECK(error_code_of([&] { select_representatives(zero, one, one_id); }) == ErrorCode::DegenerateVector);
}

TEST_CASE("objective examples") {
    const std::vector<Embedding> pair{v2(1, 0), v2(0.6f, 0.8f)};
    const std::vector<std::size_t> both{0, 1};
    CHECK(drc_objective(both, pair).value == doctest::Approx(0.4));
    const std::vector<Embedding> axes{Embedding{{1, 0, 0}}, Embedding{{0, 1, 0}}, Embedding{{0, 0, 1}}};
    const std::vector<std::size_t> three{0, 1, 2};
    CHECK(drc_objective(three, axes).value == doctest::Approx(3.0));
    const std::vector<std::size_t> lone{1};
    CHECK(drc_objective(lone, axes).degenerate);

    const auto pts = gaussian_points(6, 4, 12);
    const std::vector<std::size_t> all{0, 1, 2, 3, 4, 5};
    double loop = 0;
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = i + 1; j < 6; ++j) loop += reference_cosine(pts[i], pts[j]);
    CHECK(drc_objective(all, pts).value == doctest::Approx(loop));
}

TEST_CASE("exhaustive optimum") {
    const auto three = gaussian_points(3, 4, 1);
    CHECK(brute_force_best_subset(three, 3).members == std::vector<std::size_t>{0, 1, 2});

    std::vector<Embedding> circle;
    for (double deg : {0.0, 5.0, 120.0, 240.0}) {
        const double r = deg * std::numbers::pi / 180.0;
        circle.push_back(v2(static_cast<float>(std::cos(r)), static_cast<float>(std::sin(r))));
    }
    double best = -1;
    std::vector<std::size_t> best_set;
    for (std::size_t skip = 0; skip < 4; ++skip) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < 4; ++i)
            if (i != skip) s.push_back(i);
        const auto v = drc_objective(s, circle).value;
        if (v > best + 1e-12) {
            best = v;
            best_set = s;
        }
    }
    const auto got = brute_force_best_subset(circle, 3);
    CHECK(got.members == best_set);
    CHECK(got.objective == doctest::Approx(best));
    CHECK(std::count(got.members.begin(), got.members.end(), 2) == 1);
    CHECK(std::count(got.members.begin(), got.members.end(), 3) == 1);

    const auto ten = gaussian_points(10, 5, 77);
    std::vector<SentenceId> ids(10);
    for (std::size_t i = 0; i < 10; ++i) ids[i] = i;
    const auto drc = reduce_points(ten, ids, 3, 300, 1);
    CHECK(drc.objective_value <= brute_force_best_subset(ten, 3).objective + 1e-9);

    CHECK(binomial(30, 15) == 155117520ULL);
    CHECK(error_code_of([] { brute_force_best_subset(gaussian_points(40, 2, 1), 10); }) == ErrorCode::TooLarge);
}

TEST_CASE("reduction picks one member per keyword group") {
    // Three tight groups far apart on different axes.
    std::vector<Embedding> pts;
    std::vector<SentenceId> ids;
    const auto noise = gaussian_points(30, 3, 5);
    for (std::size_t i = 0; i < 30; ++i) {
        Embedding e{{0.05f * noise[i].values[0], 0.05f * noise[i].values[1], 0.05f * noise[i].values[2]}};
        e.values[i / 10] += 1.0f;
        pts.push_back(e);
        ids.push_back(i);
    }
    const auto r = reduce_points(pts, ids, 3, 300, 2);
    REQUIRE(r.representatives.size() == 3);
    std::vector<std::size_t> groups;
    for (auto id : r.representatives.ids()) groups.push_back(id / 10);
    std::sort(groups.begin(), groups.end());
    CHECK(groups == std::vector<std::size_t>{0, 1, 2});
}

TEST_CASE("k equal to 1 picks the point nearest the global mean direction") {
    const auto pts = gaussian_points(25, 4, 31);
    std::vector<SentenceId> ids(25);
    for (std::size_t i = 0; i < 25; ++i) ids[i] = i;
    std::vector<double> mean(4, 0.0);
    for (const auto& p : pts) {
        const auto n = l2_normalized(p);
        for (std::size_t d = 0; d < 4; ++d) mean[d] += n.values[d] / 25.0;
    }
    Embedding m{{float(mean[0]), float(mean[1]), float(mean[2]), float(mean[3])}};
    SentenceId best = 0;
    for (SentenceId i = 1; i < 25; ++i) {
        if (reference_cosine(pts[i], m) < reference_cosine(pts[best], m)) best = i;
    }
    CHECK(reduce_points(pts, ids, 1, 300, 0).representatives.ids() == std::vector<SentenceId>{best});
}

TEST_CASE("k equal to the pool returns the pool") {
    const auto pts = gaussian_points(8, 3, 2);
    std::vector<SentenceId> ids{3, 1, 4, 15, 9, 2, 6, 5};
    const auto r = reduce_points(pts, ids, 8, 300, 0);
    auto sorted = ids;
    std::sort(sorted.begin(), sorted.end());
    CHECK(r.representatives.ids() == sorted);
    CHECK(error_code_of([&] { reduce_points(pts, ids, 9, 300, 0); }) == ErrorCode::ShortPool);
}

TEST_CASE("reduction persists") {
    testing::TempDir dir;
    const auto pts = gaussian_points(30, 4, 6);
    std::vector<SentenceId> ids(30);
    for (std::size_t i = 0; i < 30; ++i) ids[i] = 2 * i;
    const auto r = reduce_points(pts, ids, 4, 300, 1);
    save_reduction(dir / "r.jsonl", r);
    const auto back = load_reduction(dir / "r.jsonl");
    CHECK(back.representatives.ids() == r.representatives.ids());
    CHECK(back.objective_value == r.objective_value);
    CHECK(back.iterations_run == r.iterations_run);
}
