#include "doctest.h"
#include "support/support.hpp"

#include "meaeq/eval.hpp"

#include <cmath>
#include <map>
#include <sstream>

using namespace meaeq;
using testing::error_code_of;

TEST_CASE("agreement examples") {
    const std::vector<ClassIndex> a{0, 1, 1, 0}, b{0, 1, 0, 0}, c{1, 0, 0, 1};
    CHECK(agreement(a, a) == 1.0);
    CHECK(agreement(a, c) == 0.0);
    CHECK(agreement(a, b) == 0.75);
    CHECK(accuracy(std::vector<ClassIndex>{1, 1}, std::vector<ClassIndex>{0, 0}) == 0.0);
    CHECK(accuracy(a, a) == 1.0);
    CHECK(error_code_of([&] { agreement(a, std::vector<ClassIndex>{0}); }) == ErrorCode::Shape);
    CHECK(error_code_of([] { agreement({}, {}); }) == ErrorCode::Shape);
}

TEST_CASE("aggregate uses population statistics") {
    const std::vector<double> v{0.5, 0.7, 0.9};
    const auto a = aggregate(v);
    CHECK(a.mean == doctest::Approx(0.7));
    CHECK(a.std == doctest::Approx(std::sqrt((0.04 + 0.0 + 0.04) / 3.0)));
    CHECK(a.max == 0.9);
    const std::vector<double> same(10, 0.42);
    CHECK(aggregate(same).std == 0.0);
    CHECK(std::isnan(aggregate({}).mean));
}

TEST_CASE("cell format") {
    CHECK(format_cell(Aggregate{0.758, 0.045, 0.797}) == "75.8 ± 4.5 (79.7)");
    const std::vector<double> one{0.9};
    CHECK(format_cell(aggregate(one)) == "90.0 ± 0.0 (90.0)");
    CHECK(format_cell(aggregate({})) == "n/a");
}

TEST_CASE("csv report round-trips") {
    auto r = make_report("meaeq", 191, {{3, 0.81, 0.72}, {1, 0.7512345678901234, 0.69}}, {{2, "victim down"}}, 0xabcULL);
    CHECK(r.per_seed.front().seed == 1);
    CHECK_FALSE(r.complete());
    const auto csv = emit_report(r, ReportFormat::Csv);
    const auto back = parse_report_csv(csv);
    CHECK(back.strategy == r.strategy);
    CHECK(back.k == r.k);
    CHECK(back.per_seed == r.per_seed);
    CHECK(back.failures == r.failures);
    CHECK(back.agreement == r.agreement);
    CHECK(back.config_digest == r.config_digest);
}

TEST_CASE("markdown marks incomplete runs") {
    const auto full = make_report("rs", 60, {{0, 0.8, 0.7}}, {}, 0);
    const auto partial = make_report("rs", 60, {{0, 0.8, 0.7}}, {{1, "boom"}}, 0);
    CHECK(emit_report(full, ReportFormat::Markdown).find("incomplete") == std::string::npos);
    CHECK(emit_report(partial, ReportFormat::Markdown).find("[incomplete 1/2 seeds]") != std::string::npos);
    const std::vector<MetricsReport> rows{full, partial};
    const auto table = render_markdown_table(rows);
    CHECK(table.rfind("| Strategy | Queries (k) | Agreement (%) | Accuracy (%) |", 0) == 0);
}

TEST_CASE("json report round-trips") {
    testing::TempDir dir;
    const auto r = make_report("al-us", 30, {{0, 0.61, 0.6}, {1, 0.67, 0.66}}, {}, 77);
    save_report_json(dir / "r.json", r);
    const auto back = load_report_json(dir / "r.json");
    CHECK(back.per_seed == r.per_seed);
    CHECK(back.agreement == r.agreement);
    CHECK(back.strategy == "al-us");
}

TEST_CASE("word frequency") {
    const std::vector<Sentence> one{{0, "hate hate speech", 0}};
    const auto top = top_frequent_words(one, 10, {});
    REQUIRE(top.size() == 2);
    CHECK(top[0] == std::pair<std::string, std::size_t>{"hate", 2});
    CHECK(top[1] == std::pair<std::string, std::size_t>{"speech", 1});
    const std::vector<Sentence> stop{{0, "the and of", 0}};
    CHECK(top_frequent_words(stop, 10, default_stopwords()).empty());
}

TEST_CASE("word frequency matches an independent count") {
    Rng rng(11);
    const std::vector<std::string> vocab{"Alpha", "beta", "gamma", "the", "delta", "eps", "zeta", "of", "eta"};
    std::vector<Sentence> pool;
    for (SentenceId i = 0; i < 1000; ++i) {
        std::string s;
        const auto n = 1 + rng.below(8);
        for (std::size_t j = 0; j < n; ++j) s += vocab[rng.below(vocab.size())] + (j % 2 ? ", " : " ");
        pool.push_back({i, s, 0});
    }
    const std::set<std::string> stop{"the", "of"};
    std::map<std::string, std::size_t> counts;
    for (const auto& s : pool) {
        std::istringstream in(s.text);
        std::string w;
        while (in >> w) {
            if (w.back() == ',') w.pop_back();
            for (auto& c : w) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            if (!stop.contains(w)) ++counts[w];
        }
    }
    std::vector<std::pair<std::string, std::size_t>> expected(counts.begin(), counts.end());
    std::stable_sort(expected.begin(), expected.end(), [](auto& a, auto& b) { return a.second > b.second; });
    CHECK(top_frequent_words(pool, 100, stop) == expected);
    expected.resize(3);
    CHECK(top_frequent_words(pool, 3, stop) == expected);
}

TEST_CASE("labeled records round-trip and labels are range-checked") {
    testing::TempDir dir;
    const std::vector<LabeledPair> pairs{{{4, "x y", 0}, 1}, {{9, "z", 0}, 0}};
    save_labeled(dir / "l.jsonl", pairs);
    const auto back = load_labeled(dir / "l.jsonl", 2);
    REQUIRE(back.size() == 2);
    CHECK(back[0].query.id == 4);
    CHECK(back[0].label == 1);
    CHECK(error_code_of([&] { load_labeled(dir / "l.jsonl", 1); }) != std::nullopt);
}

TEST_CASE("strategy names") {
    CHECK(parse_strategy("meaeq") == Strategy::Meaeq);
    CHECK(parse_strategy("al-rs") == Strategy::ActiveRandom);
    CHECK(to_string(Strategy::ActiveUncertainty) == "al-us");
    CHECK(error_code_of([] { parse_strategy("x"); }) == ErrorCode::Config);
}
