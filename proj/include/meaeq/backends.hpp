#pragma once

#include "meaeq/corpus.hpp"

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

namespace meaeq {

/// Three-way NLI output for one (premise, hypothesis) pair.
struct EntailmentScores {
    double p_neutral = 0.0;
    double p_entailment = 0.0;
    double p_contradiction = 0.0;

    bool operator==(const EntailmentScores&) const = default;
};

// Throws InvalidDistribution when a component leaves [0,1] or the sum is off by > 1e-6.
void validate(const EntailmentScores& scores);

struct Embedding {
    std::vector<float> values;

    std::size_t dim() const noexcept { return values.size(); }
    bool operator==(const Embedding&) const = default;
};

struct PromptTemplate {
    std::string hypothesis_text;
};

PromptTemplate make_prompt(std::string hypothesis_text);

class EntailmentScorer {
public:
    virtual ~EntailmentScorer() = default;

    virtual EntailmentScores score(const Sentence& premise, const PromptTemplate& hypothesis) const = 0;

    // Element i equals score(premises[i], hypothesis).
    virtual std::vector<EntailmentScores> score_batch(std::span<const Sentence> premises,
                                                      const PromptTemplate& hypothesis) const;
};

class Embedder {
public:
    virtual ~Embedder() = default;

    virtual std::size_t dim() const = 0;
    virtual Embedding embed(const Sentence& sentence) const = 0;

    // Element i equals embed(sentences[i]); errors name the offending index.
    virtual std::vector<Embedding> embed_batch(std::span<const Sentence> sentences) const;
};

/// Deterministic, dependency-free backend for tests and synthetic runs.
///
/// Embeddings: a 64-bit PRNG seeded with fnv1a(text) ^ seed draws `dim`
/// standard-normal values which are then L2-normalized.
/// Scores: p_entailment is 0.99 when the premise contains any keyword
/// (ASCII case-insensitive substring), 0.01 otherwise; the rest of the mass
/// is split evenly between neutral and contradiction.
class HashingBackend final : public EntailmentScorer, public Embedder {
public:
    static constexpr double kHit = 0.99;
    static constexpr double kMiss = 0.01;

    HashingBackend(std::size_t dim, std::uint64_t seed, std::vector<std::string> keywords = {});

    std::size_t dim() const override { return dim_; }
    Embedding embed(const Sentence& sentence) const override;
    EntailmentScores score(const Sentence& premise, const PromptTemplate& hypothesis) const override;

    const std::vector<std::string>& keywords() const noexcept { return keywords_; }
    bool matches_keyword(std::string_view text) const;

private:
    std::size_t dim_;
    std::uint64_t seed_;
    std::vector<std::string> keywords_;  // stored lower-cased
};

/// Serves precomputed scores and embeddings keyed by sentence id. The cache
/// files are the interchange format with the inference sidecar.
class CachedBackend final : public EntailmentScorer, public Embedder {
public:
    CachedBackend() = default;
    CachedBackend(std::map<SentenceId, EntailmentScores> scores,
                  std::unordered_map<SentenceId, Embedding> embeddings);

    static CachedBackend load(const std::optional<std::filesystem::path>& score_cache,
                              const std::optional<std::filesystem::path>& embedding_cache);

    std::size_t dim() const override { return dim_; }
    Embedding embed(const Sentence& sentence) const override;
    EntailmentScores score(const Sentence& premise, const PromptTemplate& hypothesis) const override;

    const std::map<SentenceId, EntailmentScores>& scores() const noexcept { return scores_; }
    std::size_t embedding_count() const noexcept { return embeddings_.size(); }

private:
    std::map<SentenceId, EntailmentScores> scores_;
    std::unordered_map<SentenceId, Embedding> embeddings_;
    std::size_t dim_ = 0;
};

struct HttpOptions {
    std::string base_url = "http://127.0.0.1:8765";
    std::chrono::milliseconds timeout{30000};
    int retries = 2;
    std::chrono::milliseconds backoff{200};
    std::size_t max_batch = 32;
};

// Resolves the sidecar base URL from MEAEQ_SIDECAR_URL, falling back to `fallback`.
std::string sidecar_url_from_env(const std::string& fallback);

/// Client for the inference sidecar (/nli, /nli_batch, /embed). In-flight
/// requests are bounded by a counting semaphore so the client may be shared
/// by several workers.
class HttpBackend final : public EntailmentScorer, public Embedder {
public:
    static constexpr std::ptrdiff_t kMaxInFlight = 4;

    explicit HttpBackend(HttpOptions opts);
    ~HttpBackend() override;

    std::size_t dim() const override;
    Embedding embed(const Sentence& sentence) const override;
    std::vector<Embedding> embed_batch(std::span<const Sentence> sentences) const override;
    EntailmentScores score(const Sentence& premise, const PromptTemplate& hypothesis) const override;
    std::vector<EntailmentScores> score_batch(std::span<const Sentence> premises,
                                              const PromptTemplate& hypothesis) const override;

private:
    std::string post(const std::string& endpoint, const std::string& body) const;

    HttpOptions opts_;
    mutable std::counting_semaphore<kMaxInFlight> in_flight_{kMaxInFlight};
    mutable std::mutex dim_mutex_;
    mutable std::size_t dim_ = 0;
};

// Score cache: one JSON record per line {id, p_neutral, p_entailment, p_contradiction},
// written in id order with round-trip (17 significant digit) precision.
void write_score_cache(const std::filesystem::path& path,
                       const std::map<SentenceId, EntailmentScores>& scores);
std::map<SentenceId, EntailmentScores> read_score_cache(const std::filesystem::path& path);

// Embedding cache: "MQEMB1\0\0", u32 dim, u64 count, then per record u64 id
// followed by dim f32 values. All little-endian.
void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<std::pair<SentenceId, Embedding>>& records);
std::vector<std::pair<SentenceId, Embedding>> read_embedding_cache(const std::filesystem::path& path);

} // namespace meaeq
