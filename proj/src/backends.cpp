#include "meaeq/backends.hpp"

#include "meaeq/error.hpp"
#include "meaeq/hash.hpp"
#include "meaeq/wire.hpp"

#include "json.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdlib>
#include <random>
#include <sstream>

namespace meaeq {

namespace {

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return out;
}

EntailmentScores keyword_scores(bool hit) {
    const double p = hit ? HashingBackend::kHit : HashingBackend::kMiss;
    const double rest = (1.0 - p) / 2.0;
    return EntailmentScores{rest, p, rest};
}

constexpr char kEmbeddingMagic[8] = {'M', 'Q', 'E', 'M', 'B', '1', '\0', '\0'};

} // namespace

void validate(const EntailmentScores& s) {
    for (double p : {s.p_neutral, s.p_entailment, s.p_contradiction}) {
        if (!(p >= 0.0 && p <= 1.0)) {
            fail(ErrorCode::InvalidDistribution, "entailment probability outside [0,1]");
        }
    }
    if (std::abs(s.p_neutral + s.p_entailment + s.p_contradiction - 1.0) > 1e-6) {
        fail(ErrorCode::InvalidDistribution, "entailment probabilities do not sum to 1");
    }
}

PromptTemplate make_prompt(std::string hypothesis_text) {
    if (hypothesis_text.empty()) fail(ErrorCode::Config, "prompt hypothesis must be non-empty");
    return PromptTemplate{std::move(hypothesis_text)};
}

std::vector<EntailmentScores> EntailmentScorer::score_batch(std::span<const Sentence> premises,
                                                            const PromptTemplate& hypothesis) const {
    std::vector<EntailmentScores> out;
    out.reserve(premises.size());
    for (const auto& p : premises) out.push_back(score(p, hypothesis));
    return out;
}

std::vector<Embedding> Embedder::embed_batch(std::span<const Sentence> sentences) const {
    if (sentences.empty()) fail(ErrorCode::Shape, "embed_batch requires a non-empty batch");
    std::vector<Embedding> out;
    out.reserve(sentences.size());
    for (std::size_t i = 0; i < sentences.size(); ++i) {
        try {
            out.push_back(embed(sentences[i]));
        } catch (const Error& e) {
            throw Error(e.code(), "batch index " + std::to_string(i) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

HashingBackend::HashingBackend(std::size_t dim, std::uint64_t seed, std::vector<std::string> keywords)
    : dim_(dim), seed_(seed) {
    if (dim_ < 2) fail(ErrorCode::Config, "embedding dimension must be >= 2");
    for (auto& k : keywords) {
        if (!k.empty()) keywords_.push_back(lower_ascii(k));
    }
}

bool HashingBackend::matches_keyword(std::string_view text) const {
    const auto lowered = lower_ascii(text);
    return std::any_of(keywords_.begin(), keywords_.end(),
                       [&](const std::string& k) { return lowered.find(k) != std::string::npos; });
}

Embedding HashingBackend::embed(const Sentence& sentence) const {
    std::mt19937_64 rng(fnv1a64(sentence.text) ^ seed_);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::vector<double> v(dim_);
    double norm2 = 0.0;
    for (auto& x : v) {
        x = normal(rng);
        norm2 += x * x;
    }
    const double inv = 1.0 / std::sqrt(norm2);
    Embedding e;
    e.values.resize(dim_);
    for (std::size_t i = 0; i < dim_; ++i) e.values[i] = static_cast<float>(v[i] * inv);
    return e;
}

EntailmentScores HashingBackend::score(const Sentence& premise, const PromptTemplate&) const {
    return keyword_scores(matches_keyword(premise.text));
}

// ---------------------------------------------------------------------------

CachedBackend::CachedBackend(std::map<SentenceId, EntailmentScores> scores,
                             std::unordered_map<SentenceId, Embedding> embeddings)
    : scores_(std::move(scores)), embeddings_(std::move(embeddings)) {
    for (const auto& [id, s] : scores_) validate(s);
    for (const auto& [id, e] : embeddings_) {
        if (dim_ == 0) dim_ = e.dim();
        if (e.dim() != dim_) fail(ErrorCode::Shape, "embedding cache mixes dimensions");
    }
}

CachedBackend CachedBackend::load(const std::optional<std::filesystem::path>& score_cache,
                                  const std::optional<std::filesystem::path>& embedding_cache) {
    std::map<SentenceId, EntailmentScores> scores;
    std::unordered_map<SentenceId, Embedding> embeddings;
    if (score_cache) scores = read_score_cache(*score_cache);
    if (embedding_cache) {
        for (auto& [id, e] : read_embedding_cache(*embedding_cache)) embeddings.emplace(id, std::move(e));
    }
    return CachedBackend(std::move(scores), std::move(embeddings));
}

Embedding CachedBackend::embed(const Sentence& sentence) const {
    auto it = embeddings_.find(sentence.id);
    if (it == embeddings_.end()) {
        fail(ErrorCode::MissingScore, "no cached embedding for sentence id " + std::to_string(sentence.id));
    }
    return it->second;
}

EntailmentScores CachedBackend::score(const Sentence& premise, const PromptTemplate&) const {
    auto it = scores_.find(premise.id);
    if (it == scores_.end()) {
        fail(ErrorCode::MissingScore, "no cached score for sentence id " + std::to_string(premise.id));
    }
    return it->second;
}

// ---------------------------------------------------------------------------

std::string sidecar_url_from_env(const std::string& fallback) {
    const char* env = std::getenv("MEAEQ_SIDECAR_URL");
    return (env != nullptr && *env != '\0') ? std::string(env) : fallback;
}

HttpBackend::HttpBackend(HttpOptions opts) : opts_(std::move(opts)) {
    if (opts_.max_batch == 0) fail(ErrorCode::Config, "max_batch must be >= 1");
}

HttpBackend::~HttpBackend() = default;

std::string HttpBackend::post(const std::string& endpoint, const std::string& body) const {
    in_flight_.acquire();
    struct Release {
        std::counting_semaphore<kMaxInFlight>& s;
        ~Release() { s.release(); }
    } release{in_flight_};

    auto result = post_json_with_retry(opts_.base_url, endpoint, body, opts_.timeout, opts_.retries,
                                       opts_.backoff);
    if (!result.ok) fail(ErrorCode::Backend, result.error);
    return result.body;
}

std::size_t HttpBackend::dim() const {
    {
        std::lock_guard lock(dim_mutex_);
        if (dim_ != 0) return dim_;
    }
    // Probe once; the sidecar reports its dimension with every response.
    Sentence probe{0, "dimension probe", 0};
    return embed(probe).dim();
}

Embedding HttpBackend::embed(const Sentence& sentence) const {
    return embed_batch(std::span<const Sentence>(&sentence, 1)).front();
}

namespace {

// Runs `read` over the parsed body; schema violations become Backend errors.
template <class F>
void read_response(const std::string& endpoint, const std::string& body, F&& read) {
    try {
        read(nlohmann::json::parse(body));
    } catch (const nlohmann::json::exception& e) {
        fail(ErrorCode::Backend, "malformed " + endpoint + " response: " + e.what());
    }
}

EntailmentScores scores_from(const nlohmann::json& r) {
    EntailmentScores s{r.at("neutral").get<double>(), r.at("entailment").get<double>(),
                       r.at("contradiction").get<double>()};
    validate(s);
    return s;
}

} // namespace

std::vector<Embedding> HttpBackend::embed_batch(std::span<const Sentence> sentences) const {
    if (sentences.empty()) fail(ErrorCode::Shape, "embed_batch requires a non-empty batch");
    std::vector<Embedding> out;
    out.reserve(sentences.size());
    for (std::size_t start = 0; start < sentences.size(); start += opts_.max_batch) {
        const auto n = std::min(opts_.max_batch, sentences.size() - start);
        nlohmann::json req;
        req["texts"] = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) req["texts"].push_back(sentences[start + i].text);

        try {
            std::size_t dim = 0;
            read_response("/embed", post("/embed", req.dump()), [&](const nlohmann::json& resp) {
                dim = resp.at("dim").get<std::size_t>();
                const auto& vectors = resp.at("vectors");
                if (vectors.size() != n) fail(ErrorCode::Backend, "/embed returned wrong number of vectors");
                for (const auto& row : vectors) {
                    Embedding e{row.get<std::vector<float>>()};
                    if (e.dim() != dim || dim < 2) fail(ErrorCode::Backend, "/embed row length disagrees with dim");
                    out.push_back(std::move(e));
                }
            });
            std::lock_guard lock(dim_mutex_);
            if (dim_ == 0) dim_ = dim;
            if (dim_ != dim) fail(ErrorCode::Backend, "/embed dimension changed between calls");
        } catch (const Error& e) {
            throw Error(e.code(), "batch index " + std::to_string(start) + ": " + e.what());
        }
    }
    return out;
}

EntailmentScores HttpBackend::score(const Sentence& premise, const PromptTemplate& hypothesis) const {
    nlohmann::json req = {{"premise", premise.text}, {"hypothesis", hypothesis.hypothesis_text}};
    EntailmentScores s;
    read_response("/nli", post("/nli", req.dump()), [&](const nlohmann::json& resp) { s = scores_from(resp); });
    return s;
}

std::vector<EntailmentScores> HttpBackend::score_batch(std::span<const Sentence> premises,
                                                       const PromptTemplate& hypothesis) const {
    std::vector<EntailmentScores> out;
    out.reserve(premises.size());
    for (std::size_t start = 0; start < premises.size(); start += opts_.max_batch) {
        const auto n = std::min(opts_.max_batch, premises.size() - start);
        nlohmann::json req;
        req["pairs"] = nlohmann::json::array();
        for (std::size_t i = 0; i < n; ++i) {
            req["pairs"].push_back(
                {{"premise", premises[start + i].text}, {"hypothesis", hypothesis.hypothesis_text}});
        }
        try {
            read_response("/nli_batch", post("/nli_batch", req.dump()), [&](const nlohmann::json& resp) {
                const auto& results = resp.at("results");
                if (results.size() != n) fail(ErrorCode::Backend, "/nli_batch returned wrong number of results");
                for (const auto& r : results) out.push_back(scores_from(r));
            });
        } catch (const Error& e) {
            throw Error(e.code(), "batch index " + std::to_string(start) + ": " + e.what());
        }
    }
    return out;
}

// ---------------------------------------------------------------------------

void write_score_cache(const std::filesystem::path& path,
                       const std::map<SentenceId, EntailmentScores>& scores) {
    std::ostringstream os;
    for (const auto& [id, s] : scores) {
        nlohmann::json rec = {{"id", id},
                              {"p_neutral", s.p_neutral},
                              {"p_entailment", s.p_entailment},
                              {"p_contradiction", s.p_contradiction}};
        os << rec.dump() << '\n';
    }
    write_file(path, os.str());
}

std::map<SentenceId, EntailmentScores> read_score_cache(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::map<SentenceId, EntailmentScores> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        try {
            auto rec = nlohmann::json::parse(line);
            EntailmentScores s{rec.at("p_neutral").get<double>(), rec.at("p_entailment").get<double>(),
                               rec.at("p_contradiction").get<double>()};
            validate(s);
            out[rec.at("id").get<SentenceId>()] = s;
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return out;
}

void write_embedding_cache(const std::filesystem::path& path,
                           const std::vector<std::pair<SentenceId, Embedding>>& records) {
    const std::size_t dim = records.empty() ? 0 : records.front().second.dim();
    ByteWriter w;
    w.bytes(std::string_view(kEmbeddingMagic, sizeof kEmbeddingMagic));
    w.u32(static_cast<std::uint32_t>(dim));
    w.u64(records.size());
    for (const auto& [id, e] : records) {
        if (e.dim() != dim) fail(ErrorCode::Shape, "embedding cache records must share one dimension");
        w.u64(id);
        for (float x : e.values) w.f32(x);
    }
    write_file(path, w.str());
}

std::vector<std::pair<SentenceId, Embedding>> read_embedding_cache(const std::filesystem::path& path) {
    const auto data = read_file(path);
    ByteReader r(data);
    if (r.bytes(sizeof kEmbeddingMagic) != std::string_view(kEmbeddingMagic, sizeof kEmbeddingMagic)) {
        fail(ErrorCode::Format, path.string() + ": bad embedding cache magic");
    }
    const auto dim = r.u32();
    const auto count = r.u64();
    std::vector<std::pair<SentenceId, Embedding>> out;
    out.reserve(count);
    for (std::uint64_t i = 0; i < count; ++i) {
        const auto id = r.u64();
        Embedding e;
        e.values.resize(dim);
        for (auto& x : e.values) {
            x = r.f32();
            if (!std::isfinite(x)) fail(ErrorCode::Format, path.string() + ": non-finite embedding value");
        }
        out.emplace_back(id, std::move(e));
    }
    if (!r.done()) fail(ErrorCode::Format, path.string() + ": trailing bytes after embedding records");
    return out;
}

} // namespace meaeq
