#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "fmgram/ingest.hpp"
#include "oracles.hpp"

using namespace fmgram;

namespace {

std::vector<RawDocument> docs_of(std::initializer_list<std::string> texts) {
    std::vector<RawDocument> d;
    for (const auto& t : texts) d.push_back({t, {}});
    return d;
}

// Splits a blob at 0xFF separators, dropping the trailing sentinel.
std::vector<std::string> split_blob(const std::string& blob) {
    std::vector<std::string> out;
    std::string cur;
    for (size_t i = 0; i + 1 < blob.size(); ++i) {
        if (static_cast<uint8_t>(blob[i]) == 0xFF) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(blob[i]);
        }
    }
    return out;
}

}  // namespace

TEST(Sanitize, PlainTextIsUnchanged) { EXPECT_EQ(sanitize_document("hello"), "hello"); }

TEST(Sanitize, ReservedBytesBecomeReplacementChar) {
    EXPECT_EQ(sanitize_document("a\xFF" "b"), "a\xEF\xBF\xBD" "b");
    EXPECT_EQ(sanitize_document(std::string("\0", 1)), "\xEF\xBF\xBD");
}

TEST(Sanitize, RandomBytesLoseEveryReservedByte) {
    std::mt19937_64 rng(1);
    std::string raw(1 << 20, '\0');
    for (auto& c : raw) c = static_cast<char>(rng() & 0xFF);
    uint64_t reserved = 0;
    for (char c : raw) reserved += static_cast<uint8_t>(c) == 0 || static_cast<uint8_t>(c) == 0xFF;
    std::string out = sanitize_document(raw);
    for (char c : out) ASSERT_TRUE(static_cast<uint8_t>(c) != 0 && static_cast<uint8_t>(c) != 0xFF);
    EXPECT_EQ(out.size(), raw.size() + 2 * reserved);
}

TEST(BuildBlob, TwoDocumentLayout) {
    auto b = build_blob(docs_of({"ab", "c"}));
    EXPECT_EQ(b.text.bytes, std::string("ab\xFF" "c\xFF\0", 6));
    EXPECT_EQ(std::vector<uint64_t>(b.offsets.starts().begin(), b.offsets.starts().end()),
              (std::vector<uint64_t>{0, 3}));
    EXPECT_EQ(b.text.doc_count, 2u);
    EXPECT_EQ(b.offsets.length(0), 2u);
    EXPECT_EQ(b.offsets.length(1), 1u);
}

TEST(BuildBlob, BananaSingleDocument) {
    auto b = build_blob(docs_of({"banana"}));
    EXPECT_EQ(b.text.bytes, std::string("banana\xFF\0", 8));
    EXPECT_EQ(b.text.bytes.size(), 8u);
    EXPECT_EQ(b.offsets.start(0), 0u);
    EXPECT_EQ(b.offsets.doc_of(5), 0u);
}

TEST(BuildBlob, EmptyCorpusIsAnError) {
    try {
        build_blob({});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptyCorpus);
    }
}

TEST(BuildBlob, RandomDocumentsRoundTrip) {
    std::mt19937_64 rng(2);
    std::vector<RawDocument> docs;
    std::vector<std::string> texts;
    for (int i = 0; i < 1000; ++i) {
        std::string raw(std::uniform_int_distribution<int>(0, 300)(rng), '\0');
        for (auto& c : raw) c = static_cast<char>(rng() & 0xFF);
        texts.push_back(sanitize_document(raw));
        docs.push_back({texts.back(), {{"id", std::to_string(i)}, {"note", "line\nbreak"}}});
    }
    auto b = build_blob(docs);
    const auto& blob = b.text.bytes;
    EXPECT_EQ(split_blob(blob), texts);
    EXPECT_EQ(std::count(blob.begin(), blob.end(), '\0'), 1);
    EXPECT_EQ(blob.back(), '\0');
    EXPECT_EQ(static_cast<uint64_t>(std::count(blob.begin(), blob.end(), static_cast<char>(0xFF))), b.text.doc_count);
    // Stored offsets equal those recomputed from the blob.
    EXPECT_TRUE(OffsetTable::from_blob(blob) == b.offsets);
    for (uint64_t i = 1; i < docs.size(); ++i) ASSERT_EQ(static_cast<uint8_t>(blob[b.offsets.start(i) - 1]), 0xFF);
    // Metadata records are single-line JSON objects in the same layout.
    auto metas = split_blob(b.meta.bytes);
    ASSERT_EQ(metas.size(), docs.size());
    for (size_t i = 0; i < metas.size(); ++i) {
        ASSERT_EQ(metas[i].find('\n'), std::string::npos);
        ASSERT_EQ(parse_metadata(metas[i]), docs[i].meta);
    }
}

TEST(BuildBlob, DocOfFindsEnclosingDocument) {
    auto b = build_blob(docs_of({"abc", "", "de", "f"}));
    // blob: a b c FF | FF | d e FF | f FF 00
    std::vector<uint64_t> expect = {0, 0, 0, 0, 1, 2, 2, 2, 3, 3};
    for (uint64_t p = 0; p < expect.size(); ++p) EXPECT_EQ(b.offsets.doc_of(p), expect[p]) << p;
    EXPECT_EQ(b.offsets.length(1), 0u);
    EXPECT_THROW(b.offsets.doc_of(10), Error);
}

TEST(OffsetTable, SerializedLayout) {
    auto b = build_blob(docs_of({"ab", "c"}));
    std::string bytes = b.offsets.serialize();
    ASSERT_EQ(bytes.size(), 4u + 4 + 8 + 16);
    EXPECT_EQ(bytes.substr(0, 4), "FGMO");
    EXPECT_EQ(get_u32(bytes.data() + 4), 1u);
    EXPECT_EQ(get_u64(bytes.data() + 8), 2u);
    EXPECT_EQ(get_u64(bytes.data() + 16), 0u);
    EXPECT_EQ(get_u64(bytes.data() + 24), 3u);
    EXPECT_TRUE(OffsetTable::deserialize(bytes, 6) == b.offsets);
    EXPECT_THROW(OffsetTable::deserialize("FGMX" + bytes.substr(4), 6), Error);
}

TEST(PlanShards, GreedyPacking) {
    std::vector<uint64_t> sizes = {10, 10, 10};
    auto plan = plan_shards(sizes, 25);
    ASSERT_EQ(plan.shard_count(), 2u);
    EXPECT_EQ(plan.assignments[0], (std::pair<uint64_t, uint64_t>{0, 2}));
    EXPECT_EQ(plan.assignments[1], (std::pair<uint64_t, uint64_t>{2, 3}));
}

TEST(PlanShards, OversizedDocument) {
    std::vector<uint64_t> sizes = {30};
    try {
        plan_shards(sizes, 25);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DocTooLarge);
    }
}

TEST(PlanShards, RandomSizesPartitionInOrder) {
    std::mt19937_64 rng(3);
    std::vector<uint64_t> sizes(10'000);
    for (auto& s : sizes) s = std::uniform_int_distribution<uint64_t>(0, 5000)(rng);
    const uint64_t target = 20'000;
    auto plan = plan_shards(sizes, target);
    uint64_t next = 0;
    for (size_t k = 0; k < plan.assignments.size(); ++k) {
        auto [b, e] = plan.assignments[k];
        ASSERT_EQ(b, next);
        ASSERT_LT(b, e);
        uint64_t total = std::accumulate(sizes.begin() + b, sizes.begin() + e, uint64_t{0});
        ASSERT_LE(total, target);
        // Greedy: the following document would not have fit.
        if (e < sizes.size()) ASSERT_GT(total + sizes[e], target);
        next = e;
    }
    EXPECT_EQ(next, sizes.size());
}

TEST(Jsonl, ParsesTextAndMeta) {
    auto path = std::filesystem::temp_directory_path() / "fmgram_ingest_test.jsonl";
    {
        std::ofstream out(path);
        out << R"({"text":"hello\u0000world","meta":{"source":"x","id":7}})" << "\n\n";
        out << R"({"text":"second"})" << "\n";
    }
    auto docs = read_jsonl(path.string());
    ASSERT_EQ(docs.size(), 2u);
    EXPECT_EQ(docs[0].text, "hello\xEF\xBF\xBDworld");
    EXPECT_EQ(docs[0].meta.at("source"), "x");
    EXPECT_EQ(docs[0].meta.at("id"), "7");
    EXPECT_TRUE(docs[1].meta.empty());
    {
        std::ofstream out(path);
        out << R"({"txt":"oops"})" << "\n";
    }
    try {
        read_jsonl(path.string());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MalformedInput);
        EXPECT_NE(std::string(e.what()).find(":1:"), std::string::npos);
    }
    std::filesystem::remove(path);
}
