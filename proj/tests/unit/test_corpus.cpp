#include "doctest.h"
#include "support/support.hpp"

#include "meaeq/corpus.hpp"

using namespace meaeq;
using testing::error_code_of;

TEST_CASE("heading lines are dropped") {
    const auto store = ingest_text("= Heading =\nA real sentence here .\n", IngestOptions{3, 128, true});
    REQUIRE(store.size() == 1);
    CHECK(store.at(0).text == "A real sentence here .");
    CHECK(store.at(0).source_line == 1);
}

TEST_CASE("empty corpus is rejected") {
    CHECK(error_code_of([] { ingest_text(""); }) == ErrorCode::EmptyCorpus);
    CHECK(error_code_of([] { ingest_text("too short\n"); }) == ErrorCode::EmptyCorpus);
}

TEST_CASE("duplicates collapse when dedup is on") {
    std::string text;
    for (int i = 0; i < 10; ++i) text += "the same five token line\n";
    CHECK(ingest_text(text, IngestOptions{5, 128, true}).size() == 1);
    CHECK(ingest_text(text, IngestOptions{5, 128, false}).size() == 10);
}

TEST_CASE("sentence_by_id bounds") {
    const auto store = ingest_text("one two three four five .\nsix seven eight nine ten .\na b c d e f .\n");
    REQUIRE(store.size() == 3);
    CHECK(sentence_by_id(store, 0).text == "one two three four five .");
    CHECK(sentence_by_id(store, 2).text == "a b c d e f .");
    CHECK(error_code_of([&] { sentence_by_id(store, 3); }) == ErrorCode::NotFound);
}

TEST_CASE("splitting on sentence-final punctuation") {
    const auto parts = split_sentences("First one here. Second? Third! tail without stop");
    REQUIRE(parts.size() == 4);
    CHECK(parts[0] == "First one here.");
    CHECK(parts[1] == "Second?");
    CHECK(parts[3] == "tail without stop");
    // No whitespace after the dot: not a boundary.
    CHECK(split_sentences("version 1.5 is out").size() == 1);
}

TEST_CASE("min_tokens is monotone and bad bounds are rejected") {
    std::string text;
    for (int n = 1; n <= 12; ++n) {
        for (int i = 0; i < n; ++i) text += "w" + std::to_string(n) + "_" + std::to_string(i) + " ";
        text += ".\n";
    }
    std::size_t prev = SIZE_MAX;
    for (std::size_t m = 1; m <= 12; ++m) {
        const auto size = ingest_text(text, IngestOptions{m, 128, true}).size();
        CHECK(size <= prev);
        prev = size;
    }
    CHECK(error_code_of([&] { ingest_text(text, IngestOptions{0, 10, true}); }) == ErrorCode::Config);
    CHECK(error_code_of([&] { ingest_text(text, IngestOptions{5, 4, true}); }) == ErrorCode::Config);
}

TEST_CASE("ingest is idempotent and the store round-trips through disk") {
    testing::TempDir dir;
    write_file(dir / "c.txt", "alpha beta gamma delta epsilon .\n= H =\nzeta eta theta iota kappa . lambda mu nu xi omicron !\n");
    const auto a = ingest(dir / "c.txt");
    const auto b = ingest(dir / "c.txt");
    CHECK(a == b);
    CHECK(a.source_digest() != 0);
    save_store(a, dir / "store.jsonl");
    CHECK(load_store(dir / "store.jsonl") == a);
    CHECK(error_code_of([&] { ingest(dir / "missing.txt"); }) == ErrorCode::Io);
}

TEST_CASE("store with gaps in ids is rejected") {
    testing::TempDir dir;
    write_file(dir / "s.jsonl", "{\"id\":0,\"text\":\"a\"}\n{\"id\":2,\"text\":\"b\"}\n");
    CHECK(error_code_of([&] { load_store(dir / "s.jsonl"); }) == ErrorCode::Format);
}
