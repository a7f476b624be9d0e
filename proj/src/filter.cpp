#include "meaeq/filter.hpp"

#include "meaeq/error.hpp"

#include "json.hpp"

#include <algorithm>
#include <sstream>
#include <unordered_set>

namespace meaeq {

QueryPool filter_task_relevant(const QueryPool& pool, const ScoreTable& scores, const FilterConfig& cfg) {
    if (!(cfg.epsilon >= 0.0 && cfg.epsilon <= 1.0)) {
        fail(ErrorCode::Config, "epsilon must lie in [0,1]");
    }
    std::vector<SentenceId> kept;
    double max_seen = 0.0;
    for (auto id : pool.ids()) {
        auto it = scores.find(id);
        if (it == scores.end()) {
            fail(ErrorCode::MissingScore, "no entailment score for sentence id " + std::to_string(id));
        }
        const double p = it->second.p_entailment;
        max_seen = std::max(max_seen, p);
        if (p >= cfg.epsilon) kept.push_back(id);
    }
    if (kept.empty()) {
        std::ostringstream msg;
        msg << "no sentence reached epsilon=" << cfg.epsilon << " (max p_entailment " << max_seen << ")";
        throw EmptyFilterResult(max_seen, msg.str());
    }
    return pool.advanced(std::move(kept), PoolStage::Filtered);
}

ScoreTable score_pool(const QueryPool& pool, const CorpusStore& store, const EntailmentScorer& scorer,
                      const PromptTemplate& prompt) {
    const auto sentences = pool.resolve(store);
    const auto scores = scorer.score_batch(sentences, prompt);
    ScoreTable out;
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        validate(scores[i]);
        out.emplace(sentences[i].id, scores[i]);
    }
    return out;
}

FilterReport filter_report(const QueryPool& before, const QueryPool& after) {
    std::unordered_set<SentenceId> base(before.ids().begin(), before.ids().end());
    for (auto id : after.ids()) {
        if (!base.contains(id)) {
            fail(ErrorCode::Inconsistent, "filtered pool id " + std::to_string(id) + " is not in the source pool");
        }
    }
    FilterReport r;
    r.kept = after.size();
    r.dropped = before.size() - after.size();
    r.keep_ratio = before.empty() ? 0.0 : static_cast<double>(r.kept) / static_cast<double>(before.size());
    return r;
}

void save_filtered_pool(const std::filesystem::path& path, const QueryPool& pool, const ScoreTable& scores) {
    auto ids = pool.ids();
    std::sort(ids.begin(), ids.end());
    std::ostringstream os;
    for (auto id : ids) {
        auto it = scores.find(id);
        if (it == scores.end()) fail(ErrorCode::MissingScore, "no score for id " + std::to_string(id));
        os << nlohmann::json{{"id", id}, {"p_entailment", it->second.p_entailment}}.dump() << '\n';
    }
    write_file(path, os.str());
}

QueryPool load_filtered_pool(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::vector<SentenceId> ids;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        try {
            ids.push_back(nlohmann::json::parse(line).at("id").get<SentenceId>());
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ": " + e.what());
        }
    }
    if (ids.empty()) fail(ErrorCode::Format, path.string() + ": filtered pool is empty");
    return QueryPool(std::move(ids), PoolStage::Filtered);
}

} // namespace meaeq
