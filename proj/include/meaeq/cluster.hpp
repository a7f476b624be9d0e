#pragma once

#include "meaeq/backends.hpp"
#include "meaeq/pool.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace meaeq {

inline constexpr std::size_t kDefaultIterations = 300;

// 1 - cos(u, v), clamped to [0, 2]. Throws DegenerateVector on a zero vector
// and Shape on a dimension mismatch.
double cosine_distance(std::span<const float> u, std::span<const float> v);
double cosine_distance(std::span<const float> u, std::span<const double> v);
double cosine_distance(const Embedding& u, const Embedding& v);

Embedding l2_normalized(const Embedding& e);

struct ClusterModel {
    std::vector<std::vector<double>> centroids;
    std::vector<std::size_t> assignment;  // per input point, in input order
    std::size_t iterations_run = 0;
    double inertia = 0.0;
    std::vector<double> inertia_trace;  // inertia after each iteration's update

    std::size_t k() const noexcept { return centroids.size(); }
};

/// Lloyd's k-means with Euclidean distance.
///
/// Initial centroids are k distinct points drawn by `seed` from the points
/// sorted by id, then ordered by id, so the result does not depend on input
/// order. Per-cluster sums run in id order. Assignment ties go to the lower
/// cluster index. Stops after `max_iterations` or when the assignment stops
/// changing; empty clusters keep their previous centroid.
///
/// `ids` defaults to the input positions when empty.
ClusterModel kmeans(std::span<const Embedding> points, std::size_t k, std::size_t max_iterations,
                    std::uint64_t seed, std::span<const SentenceId> ids = {});

struct RepresentativeChoice {
    std::size_t cluster = 0;
    SentenceId id = 0;
    double distance_to_centroid = 0.0;
};

struct ReductionResult {
    QueryPool representatives;  // stage reduced, sorted by id
    double objective_value = 0.0;
    std::vector<RepresentativeChoice> per_cluster_choice;  // cluster order, non-empty clusters only
    std::size_t iterations_run = 0;
    double inertia = 0.0;
};

/// Picks, in every non-empty cluster, the member with the smallest cosine
/// distance to the centroid (ties to the smaller id).
ReductionResult select_representatives(const ClusterModel& model, std::span<const Embedding> points,
                                       std::span<const SentenceId> ids);

struct ObjectiveValue {
    double value = 0.0;
    bool degenerate = false;  // fewer than two members
};

// Sum of pairwise cosine distances over the members (positions into `embeddings`).
ObjectiveValue drc_objective(std::span<const std::size_t> subset, std::span<const Embedding> embeddings);

struct BestSubset {
    std::vector<std::size_t> members;  // positions, ascending
    double objective = 0.0;
};

inline constexpr std::uint64_t kBruteForceGuard = 200000;

std::uint64_t binomial(std::uint64_t n, std::uint64_t k);

/// Exact maximizer of drc_objective over all size-k subsets; the
/// lexicographically smallest subset wins ties. Throws TooLarge when
/// C(n, k) exceeds kBruteForceGuard.
BestSubset brute_force_best_subset(std::span<const Embedding> embeddings, std::size_t k);

/// Normalizes, clusters with k-means, then selects one representative per
/// non-empty cluster.
ReductionResult reduce_points(std::span<const Embedding> embeddings, std::span<const SentenceId> ids,
                              std::size_t k, std::size_t max_iterations, std::uint64_t seed);

ReductionResult reduce(const QueryPool& pool, const CorpusStore& store, const Embedder& embedder,
                       std::size_t k, std::size_t max_iterations, std::uint64_t seed);

// Line-delimited {cluster, id, distance_to_centroid} plus a footer
// {objective_value, iterations_run, inertia}.
void save_reduction(const std::filesystem::path& path, const ReductionResult& result);
ReductionResult load_reduction(const std::filesystem::path& path);

} // namespace meaeq
