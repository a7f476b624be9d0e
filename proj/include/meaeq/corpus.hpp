#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace meaeq {

using SentenceId = std::uint64_t;

struct Sentence {
    SentenceId id = 0;
    std::string text;
    std::uint64_t source_line = 0;  // 0-based line of the source file

    bool operator==(const Sentence&) const = default;
};

struct IngestOptions {
    std::size_t min_tokens = 5;
    std::size_t max_tokens = 128;
    bool dedup = true;
};

/// Immutable, ordered collection of candidate query sentences (the original
/// pool). Sentence ids are dense ordinals 0..size()-1 in source order.
class CorpusStore {
public:
    CorpusStore() = default;
    CorpusStore(std::vector<Sentence> sentences, std::uint64_t source_digest);

    const std::vector<Sentence>& sentences() const noexcept { return sentences_; }
    std::size_t size() const noexcept { return sentences_.size(); }
    std::uint64_t source_digest() const noexcept { return source_digest_; }

    const Sentence& at(SentenceId id) const;

    bool operator==(const CorpusStore&) const = default;

private:
    std::vector<Sentence> sentences_;
    std::uint64_t source_digest_ = 0;
};

std::size_t count_tokens(std::string_view text) noexcept;

// Splits one source line on '.', '!' or '?' followed by whitespace.
std::vector<std::string> split_sentences(std::string_view line);

bool is_heading_line(std::string_view line) noexcept;

CorpusStore ingest_text(std::string_view contents, const IngestOptions& opts = {});
CorpusStore ingest(const std::filesystem::path& path, const IngestOptions& opts = {});

const Sentence& sentence_by_id(const CorpusStore& store, SentenceId id);

// Line-delimited {id, source_line, text} records; the digest is stored in a
// leading header record so a reload is identical to the original store.
void save_store(const CorpusStore& store, const std::filesystem::path& path);
CorpusStore load_store(const std::filesystem::path& path);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

} // namespace meaeq
