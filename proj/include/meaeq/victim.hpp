#pragma once

#include "meaeq/student.hpp"
#include "meaeq/task.hpp"

#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <span>
#include <string>
#include <vector>

namespace meaeq {

/// Black-box victim: returns hard labels and nothing else.
class Victim {
public:
    virtual ~Victim() = default;

    virtual std::size_t num_classes() const = 0;
    virtual std::vector<ClassIndex> classify(std::span<const Sentence> queries) const = 0;
};

/// In-process stand-in for a deployed model: a linear probe over embeddings
/// whose probabilities never leave the adapter.
class SimulatedVictim final : public Victim {
public:
    SimulatedVictim(StudentModel model, std::shared_ptr<const Embedder> embedder);

    std::size_t num_classes() const override { return model_.num_classes; }
    std::vector<ClassIndex> classify(std::span<const Sentence> queries) const override;

    const StudentModel& model() const noexcept { return model_; }

private:
    StudentModel model_;
    std::shared_ptr<const Embedder> embedder_;
};

struct RemoteVictimOptions {
    std::string base_url;
    std::string model_id;  // optional; sent when non-empty
    std::size_t num_classes = 2;
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff{200};
    std::size_t max_batch = 32;
};

// POST /classify {texts: [...]} -> {labels: [...]}.
class RemoteVictim final : public Victim {
public:
    explicit RemoteVictim(RemoteVictimOptions opts);

    std::size_t num_classes() const override { return opts_.num_classes; }
    std::vector<ClassIndex> classify(std::span<const Sentence> queries) const override;

private:
    RemoteVictimOptions opts_;
};

// Sends a formatted instruction, returns the model's raw reply.
using ChatTransport = std::function<std::string(const std::string& instruction)>;

inline constexpr std::size_t kDefaultChatBatch = 20;

class ChatVictim final : public Victim {
public:
    ChatVictim(TaskSpec task, ChatTransport transport, std::size_t max_batch = kDefaultChatBatch);

    std::size_t num_classes() const override { return task_.num_classes; }
    std::vector<ClassIndex> classify(std::span<const Sentence> queries) const override;

private:
    TaskSpec task_;
    ChatTransport transport_;
    std::size_t max_batch_;
};

struct VictimResponse {
    SentenceId query_id = 0;
    ClassIndex label = 0;
    std::chrono::nanoseconds latency{0};
};

/// Tracks spent queries against the budget k. All mutation is serialized.
class QueryLedger {
public:
    explicit QueryLedger(std::size_t budget_k) : budget_k_(budget_k) {}

    std::size_t spent() const;
    std::size_t budget() const noexcept { return budget_k_; }
    std::size_t remaining() const;
    std::vector<VictimResponse> log() const;

    // Fails with BudgetExhausted, leaving the ledger untouched, if n more
    // queries would exceed the budget.
    void check(std::size_t n) const;
    void record(std::span<const VictimResponse> responses);

private:
    std::size_t budget_k_;
    mutable std::mutex mutex_;
    std::vector<VictimResponse> log_;
};

inline constexpr std::size_t kDefaultDispatchBatch = 32;

/// Labels the queries through the victim, charging the ledger. The budget is
/// checked before any call; a victim failure raises VictimUnavailable with
/// the ledger reflecting the batches that did complete.
std::vector<VictimResponse> query_victim(const Victim& victim, std::span<const Sentence> queries,
                                         QueryLedger& ledger, std::size_t dispatch_batch = kDefaultDispatchBatch);

// Trains a simulated victim; every class must appear at least once.
std::unique_ptr<SimulatedVictim> make_simulated_victim(std::span<const LabeledPair> train_pairs,
                                                       std::shared_ptr<const Embedder> embedder,
                                                       std::size_t num_classes, const TrainHyper& hyper);

std::string format_chat_batch(const TaskSpec& task, std::span<const Sentence> queries,
                              std::size_t max_batch = kDefaultChatBatch);

std::vector<ClassIndex> parse_chat_response(std::string_view text, std::size_t n, const TaskSpec& task);

} // namespace meaeq
