#pragma once

#include "meaeq/backends.hpp"
#include "meaeq/pool.hpp"

#include <filesystem>
#include <map>

namespace meaeq {

inline constexpr double kDefaultEpsilon = 0.95;

struct FilterConfig {
    double epsilon = kDefaultEpsilon;
    PromptTemplate prompt;
};

using ScoreTable = std::map<SentenceId, EntailmentScores>;

/// Task Relevance Filter: keeps the ids whose entailment probability against
/// the task prompt is >= epsilon, in pool order.
QueryPool filter_task_relevant(const QueryPool& pool, const ScoreTable& scores, const FilterConfig& cfg);

// Scores every pool sentence against the prompt.
ScoreTable score_pool(const QueryPool& pool, const CorpusStore& store, const EntailmentScorer& scorer,
                      const PromptTemplate& prompt);

struct FilterReport {
    std::size_t kept = 0;
    std::size_t dropped = 0;
    double keep_ratio = 0.0;
};

FilterReport filter_report(const QueryPool& before, const QueryPool& after);

// Line-delimited {id, p_entailment}, sorted by id.
void save_filtered_pool(const std::filesystem::path& path, const QueryPool& pool, const ScoreTable& scores);
QueryPool load_filtered_pool(const std::filesystem::path& path);

} // namespace meaeq
