// Corpus ingestion: sanitizing documents, laying them out as a blob with
// 0xFF separators and a 0x00 sentinel, document offsets and shard plans.
#pragma once

#include <fstream>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "fmgram/common.hpp"
#include "fmgram/word_array.hpp"

namespace fmgram {

using Metadata = std::map<std::string, std::string>;

struct RawDocument {
    Bytes text;
    Metadata meta;
};

inline constexpr std::string_view kReplacementChar = "\xEF\xBF\xBD";

/// Replaces each 0x00 and 0xFF byte with U+FFFD; other bytes pass through.
inline Bytes sanitize_document(ByteView raw) {
    Bytes out;
    out.reserve(raw.size());
    for (char ch : raw) {
        auto b = static_cast<uint8_t>(ch);
        if (b == kSentinel || b == kSeparator)
            out += kReplacementChar;
        else
            out.push_back(ch);
    }
    return out;
}

inline bool has_reserved_byte(ByteView s) {
    return std::any_of(s.begin(), s.end(), [](char ch) {
        auto b = static_cast<uint8_t>(ch);
        return b == kSentinel || b == kSeparator;
    });
}

/// Metadata as a single-line JSON object with sorted keys.
inline Bytes serialize_metadata(const Metadata& meta) {
    nlohmann::json j = nlohmann::json::object();
    for (const auto& [k, v] : meta) j[k] = v;
    return sanitize_document(j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace));
}

inline Metadata parse_metadata(ByteView line) {
    Metadata m;
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (!j.is_object()) return m;
    for (auto& [k, v] : j.items()) m[k] = v.is_string() ? v.get<std::string>() : v.dump();
    return m;
}

/// Start position of every document in a blob.
class OffsetTable {
public:
    OffsetTable() = default;
    OffsetTable(std::vector<uint64_t> starts, uint64_t blob_size)
        : starts_(std::move(starts)), blob_size_(blob_size) {}
    OffsetTable(WordArray starts, uint64_t blob_size) : starts_(std::move(starts)), blob_size_(blob_size) {}

    /// Recomputed from the blob alone: 0 and every position after a 0xFF.
    static OffsetTable from_blob(ByteView blob) {
        std::vector<uint64_t> s;
        if (blob.size() < 2) return OffsetTable(std::move(s), blob.size());
        s.push_back(0);
        for (uint64_t i = 0; i + 2 < blob.size(); ++i)
            if (static_cast<uint8_t>(blob[i]) == kSeparator) s.push_back(i + 1);
        return OffsetTable(std::move(s), blob.size());
    }

    uint64_t size() const { return starts_.size(); }
    uint64_t blob_size() const { return blob_size_; }
    uint64_t start(uint64_t doc) const { return starts_[doc]; }
    std::span<const uint64_t> starts() const { return starts_.span(); }

    /// Length of document `doc`, excluding its separator.
    uint64_t length(uint64_t doc) const {
        if (doc >= size()) throw Error(Errc::OutOfBounds, "document " + std::to_string(doc));
        uint64_t end = doc + 1 < size() ? starts_[doc + 1] : blob_size_ - 1;
        return end - 1 - starts_[doc];
    }

    /// Document enclosing blob position `pos`, by binary search.
    uint64_t doc_of(uint64_t pos) const {
        auto s = starts_.span();
        auto it = std::upper_bound(s.begin(), s.end(), pos);
        if (it == s.begin() || pos + 1 >= blob_size_) throw Error(Errc::OutOfBounds, "position " + std::to_string(pos));
        return static_cast<uint64_t>(it - s.begin()) - 1;
    }

    /// Little-endian "FGMO" layout: magic, u32 version, u64 count, starts.
    Bytes serialize() const {
        Bytes out = "FGMO";
        put_u32(out, 1);
        put_u64(out, size());
        for (uint64_t i = 0; i < size(); ++i) put_u64(out, starts_[i]);
        return out;
    }

    /// Parses the FGMO layout; the starts are borrowed from `data` when it
    /// is 8-byte aligned, which mapped index sections always are.
    static OffsetTable deserialize(ByteView data, uint64_t blob_size) {
        if (data.size() < 16 || data.substr(0, 4) != "FGMO") throw Error(Errc::BadMagic, "offset table");
        if (get_u32(data.data() + 4) != 1) throw Error(Errc::VersionMismatch, "offset table version");
        uint64_t count = get_u64(data.data() + 8);
        if (count > (data.size() - 16) / 8) throw Error(Errc::LengthMismatch, "offset table truncated");
        const char* p = data.data() + 16;
        if (reinterpret_cast<uintptr_t>(p) % alignof(uint64_t) == 0)
            return OffsetTable(WordArray::borrow({reinterpret_cast<const uint64_t*>(p), count}), blob_size);
        std::vector<uint64_t> s(count);
        for (uint64_t i = 0; i < count; ++i) s[i] = get_u64(p + 8 * i);
        return OffsetTable(std::move(s), blob_size);
    }

    bool operator==(const OffsetTable& o) const {
        return blob_size_ == o.blob_size_ && std::ranges::equal(starts(), o.starts());
    }

private:
    WordArray starts_;
    uint64_t blob_size_ = 0;
};

struct CorpusBlob {
    Bytes bytes;
    uint64_t doc_count = 0;
};

struct BuiltBlobs {
    CorpusBlob text;
    OffsetTable offsets;
    CorpusBlob meta;
    OffsetTable meta_offsets;
};

namespace detail {

template <class Get>
std::pair<CorpusBlob, OffsetTable> layout(uint64_t count, Get get) {
    uint64_t total = 1;
    for (uint64_t i = 0; i < count; ++i) total += get(i).size() + 1;
    CorpusBlob blob;
    blob.bytes.reserve(total);
    blob.doc_count = count;
    std::vector<uint64_t> starts;
    starts.reserve(count);
    for (uint64_t i = 0; i < count; ++i) {
        starts.push_back(blob.bytes.size());
        blob.bytes += get(i);
        blob.bytes.push_back(static_cast<char>(kSeparator));
    }
    blob.bytes.push_back(static_cast<char>(kSentinel));
    return {std::move(blob), OffsetTable(std::move(starts), total)};
}

}  // namespace detail

/// doc1 0xFF doc2 0xFF ... docD 0xFF 0x00, plus the same layout over the
/// per-document metadata JSON.
inline BuiltBlobs build_blob(std::span<const RawDocument> docs) {
    if (docs.empty()) throw Error(Errc::EmptyCorpus, "no documents to index");
    for (size_t i = 0; i < docs.size(); ++i)
        if (has_reserved_byte(docs[i].text))
            throw Error(Errc::MalformedInput, "document " + std::to_string(i) + " is not sanitized");
    BuiltBlobs out;
    std::tie(out.text, out.offsets) = detail::layout(docs.size(), [&](uint64_t i) -> ByteView { return docs[i].text; });
    std::vector<Bytes> metas;
    metas.reserve(docs.size());
    for (const auto& d : docs) metas.push_back(serialize_metadata(d.meta));
    std::tie(out.meta, out.meta_offsets) = detail::layout(docs.size(), [&](uint64_t i) -> ByteView { return metas[i]; });
    return out;
}

struct ShardPlan {
    uint64_t target_shard_bytes = 0;
    /// Half-open document ranges, one per shard, in corpus order.
    std::vector<std::pair<uint64_t, uint64_t>> assignments;
    uint64_t shard_count() const { return assignments.size(); }
};

inline constexpr uint64_t kDefaultShardBytes = uint64_t{512} << 20;

/// Greedy sequential packing; a shard closes when the next document would
/// push it past the target.
inline ShardPlan plan_shards(std::span<const uint64_t> doc_sizes, uint64_t target) {
    if (target == 0) throw Error(Errc::MalformedInput, "target shard size must be positive");
    ShardPlan plan{target, {}};
    uint64_t begin = 0, fill = 0;
    for (uint64_t i = 0; i < doc_sizes.size(); ++i) {
        if (doc_sizes[i] > target)
            throw Error(Errc::DocTooLarge, "document " + std::to_string(i) + " has " + std::to_string(doc_sizes[i]) +
                                               " bytes, shard target is " + std::to_string(target));
        if (i > begin && fill + doc_sizes[i] > target) {
            plan.assignments.emplace_back(begin, i);
            begin = i;
            fill = 0;
        }
        fill += doc_sizes[i];
    }
    if (begin < doc_sizes.size()) plan.assignments.emplace_back(begin, doc_sizes.size());
    return plan;
}

/// Parses one JSON Lines record: required string "text", optional object
/// "meta" whose non-string values are kept as their JSON text.
inline RawDocument parse_document_line(ByteView line) {
    auto j = nlohmann::json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object()) throw Error(Errc::MalformedInput, "line is not a JSON object");
    auto t = j.find("text");
    if (t == j.end() || !t->is_string()) throw Error(Errc::MalformedInput, "missing string field \"text\"");
    RawDocument d;
    d.text = sanitize_document(t->get_ref<const std::string&>());
    if (auto m = j.find("meta"); m != j.end()) {
        if (!m->is_object()) throw Error(Errc::MalformedInput, "\"meta\" must be an object");
        for (auto& [k, v] : m->items()) d.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
    }
    return d;
}

/// Reads every document of a JSON Lines file, skipping blank lines.
inline std::vector<RawDocument> read_jsonl(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(Errc::IoError, "cannot open " + path);
    std::vector<RawDocument> docs;
    std::string line;
    uint64_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            docs.push_back(parse_document_line(line));
        } catch (const Error& e) {
            throw Error(Errc::MalformedInput, path + ":" + std::to_string(lineno) + ": " + e.what());
        }
    }
    return docs;
}

}  // namespace fmgram
