#pragma once

#include "meaeq/backends.hpp"
#include "meaeq/student.hpp"
#include "meaeq/task.hpp"

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

namespace meaeq {

/// Synthetic two-class extraction task with a known geometry.
///
/// Task-distribution points: class c in {0, 1} with equal probability,
/// x = mu_c + N(0, I_d), where mu_1 - mu_0 = separation * e0 and both means
/// sit `task_offset` along e1. A fraction `relevant_fraction` of the pool is
/// drawn from this distribution and its sentences contain `keyword`.
///
/// The rest of the pool is off-task text whose embeddings sit `offtask_offset`
/// along e2 and `offtask_shift` along -e0, so the victim labels almost all of
/// it as class 0 (the skew a random sample from a general corpus shows).
struct SynthOptions {
    std::size_t pool_size = 2000;
    double relevant_fraction = 0.1;
    std::size_t dim = 8;
    double separation = 3.0;
    double task_offset = 3.0;
    double offtask_offset = 3.0;
    double offtask_shift = 2.5;
    std::size_t victim_train_size = 500;
    std::size_t eval_size = 1000;
    std::string keyword = "hate";
    std::uint64_t seed = 7;
};

struct SyntheticTask {
    SynthOptions options;
    TaskSpec task;
    std::string corpus_text;  // one sentence per line
    CorpusStore store;
    std::vector<bool> relevant;            // per pool id
    std::vector<ClassIndex> latent_class;  // per pool id; meaningful for relevant ids only
    std::vector<LabeledPair> victim_train;  // ids follow the pool
    std::vector<LabeledPair> eval;          // ids follow victim_train
    std::shared_ptr<CachedBackend> embeddings;
    std::shared_ptr<HashingBackend> scorer;  // keyword rule over `keyword`
};

SyntheticTask make_synthetic_task(const SynthOptions& opts);

// corpus.txt, store.jsonl, embeddings.mqemb, victim_train.jsonl, eval.jsonl
// and experiment.ini (a ready-to-run MeaeQ configuration).
void write_synthetic_task(const SyntheticTask& task, const std::filesystem::path& dir);

} // namespace meaeq
