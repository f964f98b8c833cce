// On-disk shard files and corpus directories.
//
// A shard file is a 4096-byte header page (magic "FGMI", geometry and a
// section table) followed by twelve page-aligned sections. Opening a shard
// maps the file and parses only the header page; each sub-index is
// materialized on first use, borrowing its arrays from the mapping.
#pragma once

#include <fcntl.h>
#include <sys/mman.h>
#include <sys/stat.h>
#include <unistd.h>

#include <array>
#include <filesystem>
#include <fstream>
#include <memory>
#include <mutex>

#include <json.hpp>

#include "fmgram/fm_index.hpp"
#include "fmgram/ingest.hpp"

namespace fmgram {

/// Both FM-indexes of one shard plus their document offsets.
struct FmShard {
    FmIndex text;
    FmIndex meta;
    OffsetTable offsets;
    OffsetTable meta_offsets;

    uint64_t doc_count() const { return offsets.size(); }
};

/// Builds a shard. The step timer sees each step twice: once for the
/// text index and once for the metadata index.
inline FmShard build_shard(std::span<const RawDocument> docs, const FmOptions& opt = {},
                           const StepTimer& timer = {}) {
    BuiltBlobs blobs = build_blob(docs);
    FmShard s;
    s.text = FmIndex::build(blobs.text.bytes, opt, timer);
    s.offsets = std::move(blobs.offsets);
    Bytes().swap(blobs.text.bytes);
    s.meta = FmIndex::build(blobs.meta.bytes, opt, timer);
    s.meta_offsets = std::move(blobs.meta_offsets);
    return s;
}

inline constexpr std::array<std::string_view, 12> kSectionNames = {
    "wavelet",      "ctable",         "ssa_marks",       "ssa_values", "sisa",
    "offsets",      "meta_wavelet",   "meta_ctable",     "meta_ssa_marks",
    "meta_ssa_values", "meta_sisa",   "meta_offsets"};

inline constexpr uint32_t kFormatVersion = 1;
inline constexpr uint64_t kPageBytes = 4096;
inline constexpr uint64_t kHeaderBytes = 36;
inline constexpr uint64_t kSectionEntryBytes = 40;

struct SectionEntry {
    std::string name;
    uint64_t offset = 0;
    uint64_t length = 0;
    uint64_t checksum = 0;
};

struct ShardManifest {
    uint32_t format_version = kFormatVersion;
    uint64_t shard_id = 0;
    uint64_t n = 0;
    uint64_t doc_count = 0;
    uint32_t sa_rate = 0;
    uint32_t isa_rate = 0;
    std::vector<SectionEntry> sections;

    const SectionEntry& section(std::string_view name) const {
        for (const auto& s : sections)
            if (s.name == name) return s;
        throw Error(Errc::MalformedInput, "shard has no section '" + std::string(name) + "'");
    }
    uint64_t file_bytes() const {
        return sections.empty() ? kPageBytes : sections.back().offset + sections.back().length;
    }
};

namespace detail {

inline Bytes words_to_bytes(const std::vector<uint64_t>& w) {
    return Bytes(reinterpret_cast<const char*>(w.data()), w.size() * 8);
}

inline uint64_t round_up(uint64_t x, uint64_t to) { return (x + to - 1) / to * to; }

}  // namespace detail

/// The complete file image of a shard, and its manifest.
inline std::pair<Bytes, ShardManifest> encode_shard(const FmShard& shard, uint64_t shard_id = 0) {
    FmSections t = shard.text.save(), m = shard.meta.save();
    std::array<Bytes, 12> payload = {
        detail::words_to_bytes(t.wavelet),    detail::words_to_bytes(t.ctable),
        detail::words_to_bytes(t.ssa_marks),  detail::words_to_bytes(t.ssa_values),
        detail::words_to_bytes(t.sisa),       shard.offsets.serialize(),
        detail::words_to_bytes(m.wavelet),    detail::words_to_bytes(m.ctable),
        detail::words_to_bytes(m.ssa_marks),  detail::words_to_bytes(m.ssa_values),
        detail::words_to_bytes(m.sisa),       shard.meta_offsets.serialize()};

    ShardManifest man;
    man.shard_id = shard_id;
    man.n = shard.text.size();
    man.doc_count = shard.doc_count();
    man.sa_rate = shard.text.sa_rate();
    man.isa_rate = shard.text.isa_rate();
    uint64_t pos = kPageBytes;
    for (size_t k = 0; k < payload.size(); ++k) {
        pos = detail::round_up(pos, kPageBytes);
        man.sections.push_back({std::string(kSectionNames[k]), pos, payload[k].size(), checksum64(payload[k])});
        pos += payload[k].size();
    }

    Bytes file = "FGMI";
    put_u32(file, man.format_version);
    put_u64(file, man.n);
    put_u64(file, man.doc_count);
    put_u32(file, man.sa_rate);
    put_u32(file, man.isa_rate);
    put_u32(file, static_cast<uint32_t>(man.sections.size()));
    for (const auto& s : man.sections) {
        char name[16] = {};
        std::memcpy(name, s.name.data(), std::min<size_t>(s.name.size(), 16));
        file.append(name, 16);
        put_u64(file, s.offset);
        put_u64(file, s.length);
        put_u64(file, s.checksum);
    }
    for (size_t k = 0; k < payload.size(); ++k) {
        file.resize(man.sections[k].offset, '\0');
        file += payload[k];
    }
    return {std::move(file), std::move(man)};
}

/// Writes the shard next to `path` and renames it into place.
inline ShardManifest serialize_shard(const FmShard& shard, const std::filesystem::path& path, uint64_t shard_id = 0) {
    auto [file, man] = encode_shard(shard, shard_id);
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(Errc::IoError, "cannot create " + tmp.string());
        out.write(file.data(), static_cast<std::streamsize>(file.size()));
        if (!out) throw Error(Errc::IoError, "short write to " + tmp.string() + " in section data");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(Errc::IoError, "cannot publish " + path.string() + ": " + ec.message());
    return man;
}

/// Parses the header page of a shard file.
inline ShardManifest parse_manifest(ByteView header, uint64_t file_size, uint64_t shard_id = 0) {
    if (header.size() < kHeaderBytes || header.substr(0, 4) != "FGMI") throw Error(Errc::BadMagic, "not a shard file");
    ShardManifest m;
    m.format_version = get_u32(header.data() + 4);
    if (m.format_version != kFormatVersion)
        throw Error(Errc::VersionMismatch, "shard format " + std::to_string(m.format_version) + ", expected " +
                                               std::to_string(kFormatVersion));
    m.shard_id = shard_id;
    m.n = get_u64(header.data() + 8);
    m.doc_count = get_u64(header.data() + 16);
    m.sa_rate = get_u32(header.data() + 24);
    m.isa_rate = get_u32(header.data() + 28);
    uint32_t count = get_u32(header.data() + 32);
    if (kHeaderBytes + count * kSectionEntryBytes > std::min<uint64_t>(header.size(), kPageBytes))
        throw Error(Errc::LengthMismatch, "section table exceeds the header page");
    uint64_t prev_end = kPageBytes;
    for (uint32_t k = 0; k < count; ++k) {
        const char* e = header.data() + kHeaderBytes + k * kSectionEntryBytes;
        SectionEntry s;
        s.name.assign(e, strnlen(e, 16));
        s.offset = get_u64(e + 16);
        s.length = get_u64(e + 24);
        s.checksum = get_u64(e + 32);
        if (s.offset < prev_end || s.offset % kPageBytes != 0 || s.length > file_size || s.offset > file_size - s.length)
            throw Error(Errc::LengthMismatch, "section '" + s.name + "' is out of place");
        prev_end = s.offset + s.length;
        m.sections.push_back(std::move(s));
    }
    return m;
}

/// Read-only private mapping of a whole file.
class MappedFile {
public:
    explicit MappedFile(const std::filesystem::path& path) {
        int fd = ::open(path.c_str(), O_RDONLY | O_CLOEXEC);
        if (fd < 0) throw Error(Errc::IoError, "cannot open " + path.string() + ": " + std::strerror(errno));
        struct stat st {};
        if (::fstat(fd, &st) != 0) {
            ::close(fd);
            throw Error(Errc::IoError, "cannot stat " + path.string());
        }
        size_ = static_cast<uint64_t>(st.st_size);
        if (size_ > 0) {
            void* p = ::mmap(nullptr, size_, PROT_READ, MAP_PRIVATE, fd, 0);
            if (p == MAP_FAILED) {
                ::close(fd);
                throw Error(Errc::IoError, "cannot map " + path.string() + ": " + std::strerror(errno));
            }
            data_ = static_cast<const char*>(p);
        }
        ::close(fd);
    }
    MappedFile(const MappedFile&) = delete;
    MappedFile& operator=(const MappedFile&) = delete;
    ~MappedFile() {
        if (data_) ::munmap(const_cast<char*>(data_), size_);
    }

    const char* data() const { return data_; }
    uint64_t size() const { return size_; }
    ByteView view() const { return {data_, size_}; }

private:
    const char* data_ = nullptr;
    uint64_t size_ = 0;
};

enum class VerifyMode {
    Lazy,   ///< check a section's checksum the first time it is materialized
    Eager,  ///< check every section while opening
    Trust,  ///< never check
};

/// An opened shard file. Safe to share between threads.
class IndexHandle {
public:
    static std::shared_ptr<IndexHandle> open(const std::filesystem::path& path, VerifyMode mode = VerifyMode::Lazy,
                                             uint64_t shard_id = 0) {
        std::shared_ptr<IndexHandle> h(new IndexHandle(path, mode));
        // The header is read with a plain file read so the mapping itself
        // stays untouched until a section is used.
        std::string header(std::min<uint64_t>(h->file_.size(), kPageBytes), '\0');
        std::ifstream in(path, std::ios::binary);
        if (!in.read(header.data(), static_cast<std::streamsize>(header.size())))
            throw Error(Errc::IoError, "cannot read header of " + path.string());
        h->manifest_ = parse_manifest(header, h->file_.size(), shard_id);
        for (auto name : kSectionNames) h->manifest_.section(name);
        if (mode == VerifyMode::Eager) h->verify();
        return h;
    }

    const ShardManifest& manifest() const { return manifest_; }
    const std::filesystem::path& path() const { return path_; }
    uint64_t shard_id() const { return manifest_.shard_id; }

    /// Bytes of a section exactly as stored.
    ByteView section_bytes(std::string_view name) const {
        const auto& s = manifest_.section(name);
        return file_.view().substr(s.offset, s.length);
    }

    /// Checks every section's checksum now.
    void verify() const {
        for (const auto& s : manifest_.sections) check(s);
    }

    const FmIndex& text() const {
        std::call_once(text_once_, [&] { text_ = load_fm(""); });
        return text_;
    }
    const FmIndex& meta() const {
        std::call_once(meta_once_, [&] { meta_ = load_fm("meta_"); });
        return meta_;
    }
    const OffsetTable& offsets() const {
        std::call_once(offsets_once_, [&] { offsets_ = load_offsets("offsets", manifest_.n); });
        return offsets_;
    }
    const OffsetTable& meta_offsets() const {
        std::call_once(meta_offsets_once_, [&] { meta_offsets_ = load_offsets("meta_offsets", meta().size()); });
        return meta_offsets_;
    }

    /// Text of one document via the text index.
    Bytes document(uint64_t doc) const {
        return text().reconstruct(offsets().start(doc), offsets().length(doc));
    }

    Metadata metadata(uint64_t doc) const {
        return parse_metadata(meta().reconstruct(meta_offsets().start(doc), meta_offsets().length(doc)));
    }

private:
    IndexHandle(std::filesystem::path path, VerifyMode mode) : path_(std::move(path)), mode_(mode), file_(path_) {}

    void check(const SectionEntry& s) const {
        if (checksum64(file_.view().substr(s.offset, s.length)) != s.checksum)
            throw Error(Errc::ChecksumMismatch, path_.string() + ": section '" + s.name + "'");
    }

    std::span<const uint64_t> words(const std::string& name) const {
        const auto& s = manifest_.section(name);
        if (mode_ == VerifyMode::Lazy) check(s);
        if (s.length % 8) throw Error(Errc::LengthMismatch, "section '" + name + "' is not word sized");
        return {reinterpret_cast<const uint64_t*>(file_.data() + s.offset), s.length / 8};
    }

    FmIndex load_fm(const std::string& prefix) const {
        FmIndex fm = FmIndex::load({words(prefix + "wavelet"), words(prefix + "ctable"), words(prefix + "ssa_marks"),
                                    words(prefix + "ssa_values"), words(prefix + "sisa")});
        if (prefix.empty() && fm.size() != manifest_.n)
            throw Error(Errc::LengthMismatch, path_.string() + ": header and text index disagree on n");
        return fm;
    }

    OffsetTable load_offsets(const std::string& name, uint64_t blob_size) const {
        const auto& s = manifest_.section(name);
        if (mode_ == VerifyMode::Lazy) check(s);
        OffsetTable t = OffsetTable::deserialize(section_bytes(name), blob_size);
        if (name == "offsets" && t.size() != manifest_.doc_count)
            throw Error(Errc::LengthMismatch, path_.string() + ": header and offsets disagree on document count");
        return t;
    }

    std::filesystem::path path_;
    VerifyMode mode_;
    MappedFile file_;
    ShardManifest manifest_;
    mutable std::once_flag text_once_, meta_once_, offsets_once_, meta_offsets_once_;
    mutable FmIndex text_, meta_;
    mutable OffsetTable offsets_, meta_offsets_;
};

struct CorpusShardInfo {
    uint64_t id = 0;
    std::string file;
    uint64_t n = 0;
    uint64_t doc_count = 0;
    uint64_t bytes = 0;
};

/// `manifest.json` of a corpus directory.
struct CorpusManifest {
    std::string name;
    uint32_t sa_rate = 32;
    uint32_t isa_rate = 64;
    uint64_t doc_count = 0;
    uint64_t input_bytes = 0;
    uint64_t shard_bytes = kDefaultShardBytes;
    std::vector<CorpusShardInfo> shards;

    uint64_t index_bytes() const {
        uint64_t b = 0;
        for (const auto& s : shards) b += s.bytes;
        return b;
    }

    nlohmann::json to_json() const {
        nlohmann::json j = {{"format", "fmgram-corpus"}, {"version", kFormatVersion}, {"name", name},
                            {"sa_rate", sa_rate},        {"isa_rate", isa_rate},     {"doc_count", doc_count},
                            {"input_bytes", input_bytes}, {"shard_bytes", shard_bytes}};
        j["shards"] = nlohmann::json::array();
        for (const auto& s : shards)
            j["shards"].push_back({{"id", s.id}, {"file", s.file}, {"n", s.n}, {"doc_count", s.doc_count}, {"bytes", s.bytes}});
        return j;
    }

    static CorpusManifest from_json(const nlohmann::json& j) {
        if (!j.is_object() || j.value("format", "") != "fmgram-corpus")
            throw Error(Errc::BadMagic, "not a corpus manifest");
        if (j.value("version", 0u) != kFormatVersion) throw Error(Errc::VersionMismatch, "corpus manifest version");
        CorpusManifest m;
        m.name = j.value("name", "");
        m.sa_rate = j.value("sa_rate", 32u);
        m.isa_rate = j.value("isa_rate", 64u);
        m.doc_count = j.value("doc_count", uint64_t{0});
        m.input_bytes = j.value("input_bytes", uint64_t{0});
        m.shard_bytes = j.value("shard_bytes", kDefaultShardBytes);
        for (const auto& s : j.at("shards"))
            m.shards.push_back({s.at("id").get<uint64_t>(), s.at("file").get<std::string>(), s.at("n").get<uint64_t>(),
                                s.at("doc_count").get<uint64_t>(), s.at("bytes").get<uint64_t>()});
        return m;
    }

    void save(const std::filesystem::path& dir) const {
        std::ofstream out(dir / "manifest.json", std::ios::trunc);
        if (!out) throw Error(Errc::IoError, "cannot write " + (dir / "manifest.json").string());
        out << to_json().dump(2) << "\n";
    }

    static CorpusManifest load(const std::filesystem::path& dir) {
        std::ifstream in(dir / "manifest.json");
        if (!in) throw Error(Errc::UnknownIndex, "no index at " + dir.string());
        auto j = nlohmann::json::parse(in, nullptr, false);
        if (j.is_discarded()) throw Error(Errc::MalformedInput, (dir / "manifest.json").string() + " is not JSON");
        return from_json(j);
    }
};

inline std::string shard_file_name(uint64_t id) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "shard-%05llu.fgm", static_cast<unsigned long long>(id));
    return buf;
}

struct BuildOptions {
    FmOptions fm;
    uint64_t shard_bytes = kDefaultShardBytes;
    std::string name;
    uint64_t input_bytes = 0;
    /// Also write text.blob, meta.blob, offsets.bin and meta_offsets.bin
    /// per shard under blobs/.
    bool keep_blobs = false;
};

/// Plans shards, builds and publishes each one, then writes the manifest.
inline CorpusManifest build_corpus(std::span<const RawDocument> docs, const std::filesystem::path& dir,
                                   const BuildOptions& opt, const StepTimer& timer = {}) {
    if (docs.empty()) throw Error(Errc::EmptyCorpus, "no documents to index");
    std::vector<uint64_t> sizes;
    sizes.reserve(docs.size());
    for (const auto& d : docs) sizes.push_back(d.text.size());
    ShardPlan plan = plan_shards(sizes, opt.shard_bytes);
    std::filesystem::create_directories(dir);

    CorpusManifest m;
    m.name = opt.name.empty() ? dir.filename().string() : opt.name;
    m.sa_rate = opt.fm.sa_rate;
    m.isa_rate = opt.fm.isa_rate;
    m.doc_count = docs.size();
    m.input_bytes = opt.input_bytes;
    m.shard_bytes = opt.shard_bytes;
    for (uint64_t s = 0; s < plan.shard_count(); ++s) {
        auto [b, e] = plan.assignments[s];
        auto slice = docs.subspan(b, e - b);
        if (opt.keep_blobs) {
            BuiltBlobs blobs = build_blob(slice);
            auto bdir = dir / "blobs" / ("shard-" + std::to_string(s));
            std::filesystem::create_directories(bdir);
            auto write = [&](const char* name, ByteView data) {
                std::ofstream out(bdir / name, std::ios::binary | std::ios::trunc);
                out.write(data.data(), static_cast<std::streamsize>(data.size()));
                if (!out) throw Error(Errc::IoError, "cannot write " + (bdir / name).string());
            };
            write("text.blob", blobs.text.bytes);
            write("meta.blob", blobs.meta.bytes);
            write("offsets.bin", blobs.offsets.serialize());
            write("meta_offsets.bin", blobs.meta_offsets.serialize());
        }
        FmShard shard = build_shard(slice, opt.fm, timer);
        std::string file = shard_file_name(s);
        ShardManifest sm = serialize_shard(shard, dir / file, s);
        m.shards.push_back({s, file, sm.n, sm.doc_count, sm.file_bytes()});
    }
    m.save(dir);
    return m;
}

}  // namespace fmgram
