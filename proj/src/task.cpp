#include "meaeq/task.hpp"

#include "meaeq/error.hpp"

namespace meaeq {

namespace {

constexpr const char* kHateSpeechInstruction =
    "You are now working as a hate speech detector. Next, I will give you [batch_size] sentences. "
    "You need to indicate whether it contains hate speech. If it contains hate speech, output \"Hate\", "
    "otherwise output \"Nohate\". The required format is one output per line and the beginning of each "
    "output is numbered sequentially. Sentences:";

constexpr const char* kSentimentInstruction =
    "You are now working as a movie review sentiment classifier. Next, I will give you [batch_size] "
    "sentences. You need to indicate the sentiment of each one. If it is positive, output \"Positive\", "
    "otherwise output \"Negative\". The required format is one output per line and the beginning of each "
    "output is numbered sequentially. Sentences:";

constexpr const char* kNewsInstruction =
    "You are now working as a news topic classifier. Next, I will give you [batch_size] sentences. "
    "You need to indicate the topic of each one by outputting one of \"World\", \"Sports\", \"Business\" "
    "or \"Sci/Tech\". The required format is one output per line and the beginning of each output is "
    "numbered sequentially. Sentences:";

} // namespace

void TaskSpec::validate() const {
    if (num_classes < 2) fail(ErrorCode::Config, "task '" + name + "' needs at least two classes");
    if (label_names.size() != num_classes) {
        fail(ErrorCode::Config, "task '" + name + "' has " + std::to_string(label_names.size()) +
                                    " label names for " + std::to_string(num_classes) + " classes");
    }
    if (prompt.hypothesis_text.empty()) fail(ErrorCode::Config, "task '" + name + "' has an empty prompt");
}

std::optional<TaskSpec> builtin_task(const std::string& name) {
    if (name == "hate_speech") {
        return TaskSpec{name, 2, {"Nohate", "Hate"}, {"This is a hate speech"}, kHateSpeechInstruction};
    }
    if (name == "sst2" || name == "imdb") {
        return TaskSpec{name, 2, {"Negative", "Positive"}, {"This is a movie review."}, kSentimentInstruction};
    }
    if (name == "ag_news") {
        return TaskSpec{name, 4, {"World", "Sports", "Business", "Sci/Tech"}, {"This is a news."}, kNewsInstruction};
    }
    return std::nullopt;
}

std::vector<std::string> builtin_task_names() { return {"hate_speech", "sst2", "imdb", "ag_news"}; }

std::optional<SplitRatio> builtin_split_ratio(const std::string& task_name) {
    if (task_name == "sst2") return SplitRatio{7, 1};
    if (task_name == "imdb" || task_name == "hate_speech") return SplitRatio{9, 1};
    if (task_name == "ag_news") return SplitRatio{4, 1};
    return std::nullopt;
}

std::optional<DatasetSize> builtin_dataset_size(const std::string& task_name) {
    if (task_name == "hate_speech") return DatasetSize{1914, 1914};
    if (task_name == "sst2") return DatasetSize{67349, 67000};
    if (task_name == "imdb") return DatasetSize{40000, 40000};
    if (task_name == "ag_news") return DatasetSize{120000, 120000};
    return std::nullopt;
}

} // namespace meaeq
