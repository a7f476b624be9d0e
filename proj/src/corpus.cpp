#include "meaeq/corpus.hpp"

#include "meaeq/error.hpp"
#include "meaeq/hash.hpp"

#include "json.hpp"

#include <cctype>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <unordered_set>

namespace meaeq {

namespace {

bool is_space(char c) noexcept {
    return std::isspace(static_cast<unsigned char>(c)) != 0;
}

std::string_view trim(std::string_view s) noexcept {
    while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
    while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
    return s;
}

std::string digest_hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

} // namespace

CorpusStore::CorpusStore(std::vector<Sentence> sentences, std::uint64_t source_digest)
    : sentences_(std::move(sentences)), source_digest_(source_digest) {}

const Sentence& CorpusStore::at(SentenceId id) const {
    if (id >= sentences_.size()) {
        fail(ErrorCode::NotFound, "sentence id " + std::to_string(id) + " out of range (size " +
                                      std::to_string(sentences_.size()) + ")");
    }
    return sentences_[id];
}

std::size_t count_tokens(std::string_view text) noexcept {
    std::size_t n = 0;
    bool in_token = false;
    for (char c : text) {
        if (is_space(c)) {
            in_token = false;
        } else if (!in_token) {
            in_token = true;
            ++n;
        }
    }
    return n;
}

std::vector<std::string> split_sentences(std::string_view line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    for (std::size_t i = 0; i + 1 < line.size(); ++i) {
        const char c = line[i];
        if ((c == '.' || c == '!' || c == '?') && is_space(line[i + 1])) {
            auto piece = trim(line.substr(start, i + 1 - start));
            if (!piece.empty()) out.emplace_back(piece);
            start = i + 1;
        }
    }
    auto tail = trim(line.substr(std::min(start, line.size())));
    if (!tail.empty()) out.emplace_back(tail);
    return out;
}

bool is_heading_line(std::string_view line) noexcept {
    auto t = trim(line);
    return !t.empty() && t.front() == '=' && t.back() == '=';
}

CorpusStore ingest_text(std::string_view contents, const IngestOptions& opts) {
    if (opts.min_tokens < 1 || opts.max_tokens < opts.min_tokens) {
        fail(ErrorCode::Config, "ingest requires 1 <= min_tokens <= max_tokens");
    }

    std::vector<Sentence> sentences;
    std::unordered_set<std::string> seen;
    std::uint64_t line_no = 0;
    std::size_t pos = 0;
    while (pos <= contents.size()) {
        auto nl = contents.find('\n', pos);
        if (nl == std::string_view::npos) nl = contents.size();
        auto line = contents.substr(pos, nl - pos);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);

        if (!is_heading_line(line)) {
            for (auto& piece : split_sentences(line)) {
                const auto n = count_tokens(piece);
                if (n < opts.min_tokens || n > opts.max_tokens) continue;
                if (opts.dedup && !seen.insert(piece).second) continue;
                sentences.push_back(Sentence{sentences.size(), std::move(piece), line_no});
            }
        }
        ++line_no;
        pos = nl + 1;
    }

    if (sentences.empty()) {
        fail(ErrorCode::EmptyCorpus, "no sentences retained from corpus");
    }
    return CorpusStore(std::move(sentences), fnv1a64(contents));
}

CorpusStore ingest(const std::filesystem::path& path, const IngestOptions& opts) {
    return ingest_text(read_file(path), opts);
}

const Sentence& sentence_by_id(const CorpusStore& store, SentenceId id) {
    return store.at(id);
}

void save_store(const CorpusStore& store, const std::filesystem::path& path) {
    std::ostringstream os;
    os << nlohmann::json{{"source_digest", digest_hex(store.source_digest())},
                         {"size", store.size()}}
              .dump()
       << '\n';
    for (const auto& s : store.sentences()) {
        nlohmann::json rec = {{"id", s.id}, {"source_line", s.source_line}, {"text", s.text}};
        os << rec.dump() << '\n';
    }
    write_file(path, os.str());
}

CorpusStore load_store(const std::filesystem::path& path) {
    std::istringstream in(read_file(path));
    std::string line;
    std::uint64_t digest = 0;
    std::vector<Sentence> sentences;
    bool header = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json rec;
        try {
            rec = nlohmann::json::parse(line);
        } catch (const nlohmann::json::exception& e) {
            fail(ErrorCode::Format, path.string() + ": " + e.what());
        }
        if (header) {
            header = false;
            if (rec.contains("source_digest")) {
                digest = std::stoull(rec.at("source_digest").get<std::string>(), nullptr, 16);
                continue;
            }
        }
        Sentence s{rec.at("id").get<SentenceId>(), rec.at("text").get<std::string>(),
                   rec.value("source_line", std::uint64_t{0})};
        if (s.id != sentences.size()) {
            fail(ErrorCode::Format, path.string() + ": ids must be dense and ordered");
        }
        sentences.push_back(std::move(s));
    }
    if (sentences.empty()) fail(ErrorCode::EmptyCorpus, path.string() + ": store is empty");
    return CorpusStore(std::move(sentences), digest);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) fail(ErrorCode::Io, "cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) fail(ErrorCode::Io, "cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) fail(ErrorCode::Io, "write failed for " + path.string());
}

} // namespace meaeq
