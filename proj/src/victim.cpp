#include "meaeq/victim.hpp"

#include "meaeq/error.hpp"
#include "meaeq/wire.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <set>

namespace meaeq {

namespace {

bool is_space(char c) noexcept { return std::isspace(static_cast<unsigned char>(c)) != 0; }

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

bool iequals(std::string_view a, std::string_view b) noexcept {
    return a.size() == b.size() && std::equal(a.begin(), a.end(), b.begin(), [](char x, char y) {
               return std::tolower(static_cast<unsigned char>(x)) == std::tolower(static_cast<unsigned char>(y));
           });
}

std::string describe_prefix(const std::vector<ClassIndex>& labels, const TaskSpec& task) {
    std::string out = "[";
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (i) out += ", ";
        out += task.label_names[labels[i]];
    }
    return out + "]";
}

void check_labels(const std::vector<ClassIndex>& labels, std::size_t num_classes) {
    for (auto l : labels) {
        if (l >= num_classes) {
            fail(ErrorCode::VictimUnavailable, "victim returned label " + std::to_string(l) + " outside " +
                                                   std::to_string(num_classes) + " classes");
        }
    }
}

} // namespace

// ---------------------------------------------------------------------------

SimulatedVictim::SimulatedVictim(StudentModel model, std::shared_ptr<const Embedder> embedder)
    : model_(std::move(model)), embedder_(std::move(embedder)) {
    if (!embedder_) fail(ErrorCode::Config, "simulated victim needs an embedder");
}

std::vector<ClassIndex> SimulatedVictim::classify(std::span<const Sentence> queries) const {
    std::vector<ClassIndex> out;
    if (queries.empty()) return out;
    out.reserve(queries.size());
    for (const auto& e : embedder_->embed_batch(queries)) out.push_back(predict(model_, e).label);
    return out;
}

RemoteVictim::RemoteVictim(RemoteVictimOptions opts) : opts_(std::move(opts)) {
    if (opts_.max_batch == 0) fail(ErrorCode::Config, "max_batch must be >= 1");
    if (opts_.num_classes < 2) fail(ErrorCode::Config, "remote victim needs at least two classes");
}

std::vector<ClassIndex> RemoteVictim::classify(std::span<const Sentence> queries) const {
    std::vector<ClassIndex> out;
    out.reserve(queries.size());
    for (std::size_t start = 0; start < queries.size(); start += opts_.max_batch) {
        const auto n = std::min(opts_.max_batch, queries.size() - start);
        nlohmann::json req;
        req["texts"] = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) req["texts"].push_back(queries[start + i].text);
        if (!opts_.model_id.empty()) req["model_id"] = opts_.model_id;

        auto res = post_json_with_retry(opts_.base_url, "/classify", req.dump(), opts_.timeout, opts_.retries,
                                        opts_.backoff);
        if (!res.ok) fail(ErrorCode::VictimUnavailable, res.error);
        std::vector<ClassIndex> labels;
        try {
            labels = nlohmann::json::parse(res.body).at("labels").get<std::vector<ClassIndex>>();
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::VictimUnavailable, std::string("malformed /classify response: ") + e.what());
        }
        if (labels.size() != n) fail(ErrorCode::VictimUnavailable, "/classify returned the wrong number of labels");
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

ChatVictim::ChatVictim(TaskSpec task, ChatTransport transport, std::size_t max_batch)
    : task_(std::move(task)), transport_(std::move(transport)), max_batch_(max_batch) {
    task_.validate();
    if (!transport_) fail(ErrorCode::Config, "chat victim needs a transport");
    if (max_batch_ == 0) fail(ErrorCode::Config, "max_batch must be >= 1");
}

std::vector<ClassIndex> ChatVictim::classify(std::span<const Sentence> queries) const {
    std::vector<ClassIndex> out;
    out.reserve(queries.size());
    for (std::size_t start = 0; start < queries.size(); start += max_batch_) {
        const auto batch = queries.subspan(start, std::min(max_batch_, queries.size() - start));
        const auto reply = transport_(format_chat_batch(task_, batch, max_batch_));
        const auto labels = parse_chat_response(reply, batch.size(), task_);
        out.insert(out.end(), labels.begin(), labels.end());
    }
    return out;
}

// ---------------------------------------------------------------------------

std::size_t QueryLedger::spent() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

std::size_t QueryLedger::remaining() const {
    std::lock_guard lock(mutex_);
    return budget_k_ - log_.size();
}

std::vector<VictimResponse> QueryLedger::log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

void QueryLedger::check(std::size_t n) const {
    std::lock_guard lock(mutex_);
    if (log_.size() + n > budget_k_) {
        fail(ErrorCode::BudgetExhausted, "query budget exhausted: " + std::to_string(log_.size()) + " spent + " +
                                             std::to_string(n) + " requested > k=" + std::to_string(budget_k_));
    }
}

void QueryLedger::record(std::span<const VictimResponse> responses) {
    std::lock_guard lock(mutex_);
    if (log_.size() + responses.size() > budget_k_) {
        fail(ErrorCode::BudgetExhausted, "ledger would exceed its budget");
    }
    log_.insert(log_.end(), responses.begin(), responses.end());
}

std::vector<VictimResponse> query_victim(const Victim& victim, std::span<const Sentence> queries,
                                         QueryLedger& ledger, std::size_t dispatch_batch) {
    ledger.check(queries.size());
    if (dispatch_batch == 0) dispatch_batch = queries.size();

    std::vector<VictimResponse> out;
    out.reserve(queries.size());
    for (std::size_t start = 0; start < queries.size(); start += dispatch_batch) {
        const auto batch = queries.subspan(start, std::min(dispatch_batch, queries.size() - start));
        const auto t0 = std::chrono::steady_clock::now();
        std::vector<ClassIndex> labels;
        try {
            labels = victim.classify(batch);
            if (labels.size() != batch.size()) {
                fail(ErrorCode::VictimUnavailable, "victim returned " + std::to_string(labels.size()) +
                                                       " labels for " + std::to_string(batch.size()) + " queries");
            }
            check_labels(labels, victim.num_classes());
        } catch (const Error& e) {
            throw Error(ErrorCode::VictimUnavailable, std::string(e.what()) + " (ledger spent " +
                                                          std::to_string(ledger.spent()) + " of " +
                                                          std::to_string(ledger.budget()) + ")");
        }
        const auto latency = (std::chrono::steady_clock::now() - t0) / static_cast<long>(batch.size());

        std::vector<VictimResponse> responses;
        responses.reserve(batch.size());
        for (std::size_t i = 0; i < batch.size(); ++i) {
            responses.push_back(VictimResponse{batch[i].id, labels[i], latency});
        }
        ledger.record(responses);
        out.insert(out.end(), responses.begin(), responses.end());
    }
    return out;
}

std::unique_ptr<SimulatedVictim> make_simulated_victim(std::span<const LabeledPair> train_pairs,
                                                       std::shared_ptr<const Embedder> embedder,
                                                       std::size_t num_classes, const TrainHyper& hyper) {
    std::set<ClassIndex> present;
    for (const auto& p : train_pairs) present.insert(p.label);
    for (ClassIndex c = 0; c < num_classes; ++c) {
        if (!present.contains(c)) {
            fail(ErrorCode::DegenerateTraining, "victim training data has no example of class " + std::to_string(c));
        }
    }
    auto model = train_student(train_pairs, *embedder, num_classes, hyper);
    return std::make_unique<SimulatedVictim>(std::move(model), std::move(embedder));
}

// ---------------------------------------------------------------------------

std::string format_chat_batch(const TaskSpec& task, std::span<const Sentence> queries, std::size_t max_batch) {
    if (queries.empty()) fail(ErrorCode::InvalidBatch, "chat batch is empty");
    if (queries.size() > max_batch) {
        fail(ErrorCode::InvalidBatch, "chat batch of " + std::to_string(queries.size()) + " exceeds max " +
                                          std::to_string(max_batch));
    }
    if (task.chat_instruction.empty()) fail(ErrorCode::Config, "task '" + task.name + "' has no chat instruction");

    std::string instruction = task.chat_instruction;
    const std::string placeholder = "[batch_size]";
    for (auto pos = instruction.find(placeholder); pos != std::string::npos;
         pos = instruction.find(placeholder, pos)) {
        const auto n = std::to_string(queries.size());
        instruction.replace(pos, placeholder.size(), n);
        pos += n.size();
    }
    for (std::size_t i = 0; i < queries.size(); ++i) {
        instruction += '\n';
        instruction += std::to_string(i + 1) + ". " + queries[i].text;
    }
    return instruction;
}

std::vector<ClassIndex> parse_chat_response(std::string_view text, std::size_t n, const TaskSpec& task) {
    if (n == 0) fail(ErrorCode::InvalidBatch, "expected response count must be >= 1");
    std::vector<ClassIndex> labels;

    auto parse_error = [&](const std::string& why) {
        fail(ErrorCode::Parse, why + "; recovered prefix " + describe_prefix(labels, task));
    };

    std::size_t pos = 0;
    while (pos < text.size()) {
        auto nl = text.find('\n', pos);
        if (nl == std::string_view::npos) nl = text.size();
        auto line = trim(text.substr(pos, nl - pos));
        pos = nl + 1;
        if (line.empty()) continue;

        std::size_t i = 0;
        if (line[i] == '(' || line[i] == '[') ++i;
        const std::size_t digits_start = i;
        while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
        if (i == digits_start) continue;  // preamble or commentary line
        const auto index = std::stoull(std::string(line.substr(digits_start, i - digits_start)));
        if (i < line.size() && (line[i] == ')' || line[i] == ']')) ++i;
        if (i < line.size() && (line[i] == '.' || line[i] == ':' || line[i] == '-')) ++i;

        auto token = trim(line.substr(i));
        while (!token.empty() && (token.front() == '"' || token.front() == '\'' || token.front() == '`')) {
            token.remove_prefix(1);
        }
        while (!token.empty() && (token.back() == '"' || token.back() == '\'' || token.back() == '`' ||
                                  token.back() == '.')) {
            token.remove_suffix(1);
        }
        token = trim(token);

        if (labels.size() == n) parse_error("more than " + std::to_string(n) + " numbered outputs");
        if (index != labels.size() + 1) {
            parse_error("missing index " + std::to_string(labels.size() + 1) + " (found " + std::to_string(index) + ")");
        }
        auto it = std::find_if(task.label_names.begin(), task.label_names.end(),
                               [&](const std::string& name) { return iequals(name, token); });
        if (it == task.label_names.end()) {
            parse_error("unknown label '" + std::string(token) + "' at index " + std::to_string(index));
        }
        labels.push_back(static_cast<ClassIndex>(it - task.label_names.begin()));
    }
    if (labels.size() != n) {
        parse_error("expected " + std::to_string(n) + " outputs, found " + std::to_string(labels.size()));
    }
    return labels;
}

} // namespace meaeq
