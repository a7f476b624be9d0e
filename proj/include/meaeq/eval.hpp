#pragma once

#include "meaeq/config.hpp"
#include "meaeq/samplers.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <set>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace meaeq {

// Fraction of positions where the two label lists agree. Throws Shape on a
// length mismatch or empty input.
double agreement(std::span<const ClassIndex> victim_labels, std::span<const ClassIndex> student_labels);

// agreement() with the gold labels in place of the victim's.
double accuracy(std::span<const ClassIndex> student_labels, std::span<const ClassIndex> gold_labels);

// Labeled records {id, text, label}, one JSON object per line. Used for the
// victim's training data and the evaluation set.
std::vector<LabeledPair> load_labeled(const std::filesystem::path& path, std::size_t num_classes);
void save_labeled(const std::filesystem::path& path, std::span<const LabeledPair> pairs);

struct SeedMetrics {
    std::uint64_t seed = 0;
    double agreement = 0.0;
    double accuracy = 0.0;
    bool operator==(const SeedMetrics&) const = default;
};

struct SeedFailure {
    std::uint64_t seed = 0;
    std::string message;
    bool operator==(const SeedFailure&) const = default;
};

// Population statistics (divide by n). NaN when there are no values.
struct Aggregate {
    double mean = 0.0;
    double std = 0.0;
    double max = 0.0;
    bool operator==(const Aggregate&) const = default;
};

Aggregate aggregate(std::span<const double> values);

struct MetricsReport {
    std::string strategy;
    std::size_t k = 0;
    std::vector<SeedMetrics> per_seed;  // sorted by seed
    std::vector<SeedFailure> failures;  // sorted by seed
    Aggregate agreement;
    Aggregate accuracy;
    std::uint64_t config_digest = 0;

    bool complete() const noexcept { return failures.empty(); }
};

// Sorts by seed and fills the aggregates.
MetricsReport make_report(std::string strategy, std::size_t k, std::vector<SeedMetrics> per_seed,
                          std::vector<SeedFailure> failures, std::uint64_t config_digest);

enum class ReportFormat { Csv, Markdown };

// "{mean:.1f} ± {std:.1f} ({max:.1f})" in percent.
std::string format_cell(const Aggregate& a);

std::string emit_report(const MetricsReport& report, ReportFormat format);
// Table with one row per report (strategies x budgets).
std::string render_markdown_table(std::span<const MetricsReport> reports);
MetricsReport parse_report_csv(std::string_view csv);

void save_report_json(const std::filesystem::path& path, const MetricsReport& report);
MetricsReport load_report_json(const std::filesystem::path& path);

std::set<std::string> default_stopwords();
std::set<std::string> load_stopwords(const std::filesystem::path& path);

// Lower-cased tokens split on anything that is not an ASCII letter, digit or
// a UTF-8 continuation byte.
std::vector<std::string> word_tokens(std::string_view text);

// Most frequent non-stopword tokens: descending count, ties alphabetical.
std::vector<std::pair<std::string, std::size_t>> top_frequent_words(std::span<const Sentence> queries, std::size_t n,
                                                                    const std::set<std::string>& stopwords);

enum class Strategy { RandomSampling, ActiveRandom, ActiveUncertainty, Meaeq };

Strategy parse_strategy(std::string_view name);
std::string_view to_string(Strategy s) noexcept;

struct StrategyConfig {
    Strategy strategy = Strategy::Meaeq;
    FilterConfig filter;
    std::size_t iterations = kDefaultIterations;
    ALConfig al;
};

/// Everything a run needs, already materialized.
struct ExperimentContext {
    std::shared_ptr<const CorpusStore> store;
    std::shared_ptr<const EntailmentScorer> scorer;
    std::shared_ptr<const Embedder> embedder;
    std::shared_ptr<const Victim> victim;
    std::vector<LabeledPair> eval;
    TaskSpec task;
};

struct SeedOutcome {
    std::vector<Sentence> queries;
    std::vector<LabeledPair> pairs;
    StudentModel student;
};

// One seed: select -> query under a fresh ledger of size k -> train -> return.
SeedOutcome attack_once(const ExperimentContext& ctx, const StrategyConfig& strategy, std::size_t k,
                        const TrainHyper& student_hyper, std::uint64_t seed);

// Agreement with the victim and accuracy against gold on the eval set.
SeedMetrics evaluate_student(const ExperimentContext& ctx, const StudentModel& student, std::uint64_t seed);

/// Runs every seed; a failing seed is recorded in the report rather than
/// aborting the others.
MetricsReport run_experiment(const ExperimentContext& ctx, const StrategyConfig& strategy, std::size_t k,
                             const TrainHyper& student_hyper, std::span<const std::uint64_t> seeds,
                             std::uint64_t config_digest = 0);

/// Fully resolved experiment file.
struct ExperimentConfig {
    Config raw;
    StrategyConfig strategy;
    BudgetSpec budget;
    TrainHyper student;
    TrainHyper victim_hyper;
    std::vector<std::uint64_t> seeds;
};

ExperimentConfig resolve_experiment(const Config& cfg);
ExperimentContext build_context(const Config& cfg);
MetricsReport run_experiment(const Config& cfg);

TaskSpec task_from_config(const Config& cfg);
TrainHyper hyper_from_config(const Config& cfg, const std::string& section, const TrainHyper& defaults);
std::shared_ptr<const CorpusStore> store_from_config(const Config& cfg);
std::shared_ptr<const EntailmentScorer> scorer_from_config(const Config& cfg);
std::shared_ptr<const Embedder> embedder_from_config(const Config& cfg);
std::shared_ptr<const Victim> victim_from_config(const Config& cfg, std::shared_ptr<const Embedder> embedder,
                                                 const TaskSpec& task);

} // namespace meaeq
