#pragma once

#include "meaeq/backends.hpp"

#include <optional>
#include <string>
#include <vector>

namespace meaeq {

struct TaskSpec {
    std::string name;
    std::size_t num_classes = 2;
    std::vector<std::string> label_names;
    PromptTemplate prompt;
    std::string chat_instruction;  // may contain "[batch_size]"

    void validate() const;
};

// Built-in tasks: hate_speech, sst2, imdb, ag_news.
std::optional<TaskSpec> builtin_task(const std::string& name);
std::vector<std::string> builtin_task_names();

// Train/validation split ratio (train parts : validation parts) used when
// carving a validation set out of a dataset's original training split.
struct SplitRatio {
    unsigned train = 9;
    unsigned validation = 1;
};
std::optional<SplitRatio> builtin_split_ratio(const std::string& task_name);

// Victim training-set size (the "x1" budget unit) and the base that rate
// budgets are computed from. The two differ for sst2 only: the standard
// query counts there (201 / 335 / 536) follow from a base of 67000, not from
// the 67349 training sentences.
struct DatasetSize {
    std::size_t train = 0;
    std::size_t budget_base = 0;
};
std::optional<DatasetSize> builtin_dataset_size(const std::string& task_name);

} // namespace meaeq
