#pragma once

#include "meaeq/cluster.hpp"
#include "meaeq/filter.hpp"
#include "meaeq/pool.hpp"
#include "meaeq/student.hpp"
#include "meaeq/victim.hpp"

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace meaeq {

enum class BudgetMode { Rate, Absolute };

struct BudgetSpec {
    BudgetMode mode = BudgetMode::Absolute;
    double rate = 0.0;
    std::size_t absolute_k = 0;
    std::size_t base_size = 0;
};

/// Absolute mode returns absolute_k; rate mode returns floor(rate * base_size).
/// Throws ZeroBudget when the result is 0.
std::size_t compute_budget(const BudgetSpec& spec);

/// Uniform draw of k ids without replacement, returned sorted by id.
QueryPool random_sample(const QueryPool& pool, std::size_t k, std::uint64_t seed);

/// Shannon entropy in nats with 0 log 0 = 0. Throws InvalidDistribution
/// unless every component is in [0,1] and the sum is 1 within 1e-6.
double entropy(std::span<const double> probs);

struct ALConfig {
    std::size_t rounds = 5;
    double seed_fraction = 0.2;
};

enum class ALStrategy { Random, Uncertainty };

// Per-round quotas summing to k: round 1 takes floor(k * seed_fraction)
// (all of k when rounds == 1), the rest is split evenly with the remainder
// going to the last round. Throws Config when any quota would be 0.
std::vector<std::size_t> al_quotas(std::size_t k, const ALConfig& cfg);

struct ActiveLearningResult {
    QueryPool queries;  // selection order, round by round
    StudentModel student;
    std::vector<LabeledPair> pairs;
};

/// Active-learning baseline. Round 1 is a uniform draw; later rounds pick
/// uniformly (Random) or by highest predictive entropy of the current
/// student, ties to the smaller id (Uncertainty). The student is retrained on
/// every label collected so far after each round.
ActiveLearningResult al_loop(const QueryPool& pool, const CorpusStore& store, std::size_t k, const ALConfig& cfg,
                             ALStrategy strategy, const Victim& victim, QueryLedger& ledger,
                             const Embedder& embedder, std::size_t num_classes, const TrainHyper& hyper,
                             std::uint64_t seed);

struct MeaeqSelection {
    QueryPool queries;  // stage reduced, exactly k ids, sorted by id
    FilterReport filter;
    ReductionResult reduction;
    std::size_t topped_up = 0;  // ids added because clusters came out empty
};

/// Task Relevance Filter followed by clustering-based data reduction.
/// When k-means leaves clusters empty the shortfall is drawn uniformly
/// (seeded) from the unselected filtered ids so exactly k ids come back.
MeaeqSelection meaeq_sample(const QueryPool& original, const CorpusStore& store, const EntailmentScorer& scorer,
                            const Embedder& embedder, const FilterConfig& filter_cfg, std::size_t k,
                            std::size_t max_iterations, std::uint64_t seed);

struct QuerySetHeader {
    std::string strategy;
    std::uint64_t seed = 0;
    std::size_t k = 0;
    std::uint64_t config_digest = 0;
};

struct QuerySet {
    QuerySetHeader header;
    std::vector<Sentence> queries;  // rank order
};

// Header record {strategy, seed, k, config_digest} followed by one
// {rank, id, text} record per query.
void save_query_set(const std::filesystem::path& path, const QuerySet& set);
QuerySet load_query_set(const std::filesystem::path& path);

} // namespace meaeq
