// Corpus-level queries over a directory of shards: counting, document
// retrieval with chunked reconstruction, and the latency bench.
#pragma once

#include <chrono>
#include <filesystem>
#include <memory>
#include <optional>
#include <random>
#include <set>

#include <json.hpp>

#include "fmgram/index_store.hpp"
#include "fmgram/utf8.hpp"

namespace fmgram {

/// Cooperative per-request time limit.
class Deadline {
public:
    Deadline() = default;
    explicit Deadline(std::chrono::milliseconds budget) : at_(std::chrono::steady_clock::now() + budget) {}

    bool expired() const { return at_ && std::chrono::steady_clock::now() > *at_; }
    void check() const {
        if (expired()) throw Error(Errc::Timeout, "request exceeded its time limit");
    }

private:
    std::optional<std::chrono::steady_clock::time_point> at_;
};

struct QueryOptions {
    unsigned threads = default_threads();
    Deadline deadline;
    /// Ranks find_docs may examine per shard. Zero means rank_scan_limit(max_docs).
    uint64_t scan_limit = 0;
};

class CorpusIndex {
public:
    static std::shared_ptr<CorpusIndex> open(const std::filesystem::path& dir, VerifyMode mode = VerifyMode::Lazy,
                                             const std::string& name = {}) {
        if (!std::filesystem::is_directory(dir)) throw Error(Errc::UnknownIndex, "no index at " + dir.string());
        auto ci = std::make_shared<CorpusIndex>();
        ci->dir_ = dir;
        ci->manifest_ = CorpusManifest::load(dir);
        ci->name_ = !name.empty() ? name : !ci->manifest_.name.empty() ? ci->manifest_.name : dir.filename().string();
        for (const auto& s : ci->manifest_.shards) {
            try {
                ci->shards_.push_back(IndexHandle::open(dir / s.file, mode, s.id));
            } catch (const Error& e) {
                throw Error(Errc::ShardUnavailable, "shard " + std::to_string(s.id) + " (" + s.file + "): " + e.what());
            }
        }
        if (ci->shards_.empty()) throw Error(Errc::EmptyCorpus, dir.string() + " has no shards");
        return ci;
    }

    const std::string& name() const { return name_; }
    const std::filesystem::path& dir() const { return dir_; }
    const CorpusManifest& manifest() const { return manifest_; }
    size_t shard_count() const { return shards_.size(); }
    const IndexHandle& shard(size_t s) const { return *shards_[s]; }
    uint64_t total_bytes() const {
        uint64_t n = 0;
        for (const auto& s : manifest_.shards) n += s.n;
        return n;
    }

private:
    std::string name_;
    std::filesystem::path dir_;
    CorpusManifest manifest_;
    std::vector<std::shared_ptr<IndexHandle>> shards_;
};

/// Rejects empty queries and anything that is not UTF-8 free of 0x00.
inline void validate_query(ByteView q) {
    if (q.empty()) throw Error(Errc::EmptyQuery, "query is empty");
    if (q.find('\0') != ByteView::npos) throw Error(Errc::InvalidQuery, "query contains a 0x00 byte");
    if (!utf8::valid(q)) throw Error(Errc::InvalidQuery, "query is not valid UTF-8");
}

struct CountResult {
    uint64_t total = 0;
    std::vector<uint64_t> per_shard;
    double latency_ms = 0;
};

namespace detail {

template <class Fn>
void for_each_shard(const CorpusIndex& ci, unsigned threads, Fn fn) {
    parallel_for(ci.shard_count(), std::min<unsigned>(std::max(1u, threads), static_cast<unsigned>(ci.shard_count())),
                 [&](uint64_t s) {
                     try {
                         fn(s);
                     } catch (const Error& e) {
                         if (e.code() == Errc::Timeout || e.code() == Errc::EmptyQuery ||
                             e.code() == Errc::InvalidQuery || e.code() == Errc::ShardUnavailable)
                             throw;
                         throw Error(Errc::ShardUnavailable, "shard " + std::to_string(s) + ": " + e.what());
                     }
                 });
}

inline double ms_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace detail

/// Count without UTF-8 validation; `q` must not contain 0x00.
inline CountResult count_bytes(const CorpusIndex& ci, ByteView q, const QueryOptions& opt = {}) {
    auto t0 = std::chrono::steady_clock::now();
    opt.deadline.check();
    CountResult r;
    r.per_shard.assign(ci.shard_count(), 0);
    detail::for_each_shard(ci, opt.threads, [&](uint64_t s) { r.per_shard[s] = ci.shard(s).text().count(q); });
    for (auto c : r.per_shard) r.total += c;
    r.latency_ms = detail::ms_since(t0);
    return r;
}

/// Occurrences of `q` in every shard, searched concurrently.
inline CountResult count(const CorpusIndex& ci, ByteView q, const QueryOptions& opt = {}) {
    validate_query(q);
    return count_bytes(ci, q, opt);
}

/// Chunks for reconstructing a d-byte document: ten near-equal chunks when
/// d >= 1000, otherwise 100-byte chunks with a shorter last one.
inline std::vector<std::pair<uint64_t, uint64_t>> chunk_plan(uint64_t d) {
    std::vector<std::pair<uint64_t, uint64_t>> out;
    if (d >= 1000) {
        for (uint64_t k = 0; k < 10; ++k) out.emplace_back(d * k / 10, d * (k + 1) / 10 - d * k / 10);
    } else {
        for (uint64_t off = 0; off < d; off += 100) out.emplace_back(off, std::min<uint64_t>(100, d - off));
    }
    return out;
}

/// text[start, start + len), with chunks rebuilt concurrently.
inline Bytes reconstruct_document(const FmIndex& fm, uint64_t start, uint64_t len, unsigned threads = 10) {
    if (start > fm.size() || len > fm.size() - start)
        throw Error(Errc::OutOfBounds, "document span beyond text of " + std::to_string(fm.size()));
    auto plan = chunk_plan(len);
    Bytes out(len, '\0');
    parallel_for(plan.size(), std::min<unsigned>(std::max(1u, threads), static_cast<unsigned>(plan.size())),
                 [&](uint64_t k) {
                     auto [off, l] = plan[k];
                     Bytes part = fm.reconstruct(start + off, l);
                     std::copy(part.begin(), part.end(), out.begin() + static_cast<ptrdiff_t>(off));
                 });
    return out;
}

struct DocumentHit {
    uint64_t shard = 0;
    uint64_t doc = 0;
    uint64_t match_offset = 0;
    Bytes text;
    Metadata meta;
    uint64_t span_start = 0;
    uint64_t span_length = 0;
};

inline nlohmann::json hit_to_json(const DocumentHit& h) {
    nlohmann::json meta = nlohmann::json::object();
    for (const auto& [k, v] : h.meta) meta[k] = v;
    return {{"shard", h.shard},
            {"doc", h.doc},
            {"match_offset", h.match_offset},
            {"doc_text", h.text},
            {"metadata", meta}};
}

inline std::string dump_json(const nlohmann::json& j) {
    return j.dump(-1, ' ', false, nlohmann::json::error_handler_t::replace);
}

/// Ranks examined per shard while looking for distinct documents.
inline uint64_t rank_scan_limit(uint64_t max_docs) { return std::max<uint64_t>(1000, 64 * max_docs); }

/// Documents containing `q`. Shards take turns contributing their next
/// new document; within a shard ranks are visited in ascending order.
inline std::vector<DocumentHit> find_docs(const CorpusIndex& ci, ByteView q, uint64_t max_docs,
                                          const QueryOptions& opt = {}) {
    validate_query(q);
    if (max_docs == 0) throw Error(Errc::InvalidQuery, "max_docs must be at least 1");
    const size_t k = ci.shard_count();
    std::vector<SaRange> ranges(k);
    detail::for_each_shard(ci, opt.threads, [&](uint64_t s) { ranges[s] = ci.shard(s).text().find(q); });

    struct Found {
        uint64_t shard, doc, offset;
    };
    std::vector<Found> found;
    std::vector<std::map<uint64_t, size_t>> seen(k);
    std::vector<uint64_t> cursor(k);
    for (size_t s = 0; s < k; ++s) cursor[s] = ranges[s].lo;
    const uint64_t limit = opt.scan_limit ? opt.scan_limit : rank_scan_limit(max_docs);

    auto next_new_doc = [&](size_t s) {
        const auto& h = ci.shard(s);
        while (cursor[s] < ranges[s].hi && cursor[s] - ranges[s].lo < limit) {
            uint64_t rank = cursor[s]++;
            uint64_t pos;
            try {
                pos = h.text().locate(rank);
            } catch (const Error& e) {
                throw Error(Errc::ReconstructFailure,
                            "shard " + std::to_string(s) + " rank " + std::to_string(rank) + ": " + e.what());
            }
            uint64_t doc = h.offsets().doc_of(pos);
            uint64_t off = pos - h.offsets().start(doc);
            auto [it, fresh] = seen[s].try_emplace(doc, found.size());
            if (fresh) {
                found.push_back({s, doc, off});
                return true;
            }
            found[it->second].offset = std::min(found[it->second].offset, off);
        }
        return false;
    };

    bool progress = true;
    while (found.size() < max_docs && progress) {
        progress = false;
        for (size_t s = 0; s < k && found.size() < max_docs; ++s) {
            opt.deadline.check();
            progress |= next_new_doc(s);
        }
    }

    std::vector<DocumentHit> hits;
    hits.reserve(found.size());
    for (const auto& f : found) {
        opt.deadline.check();
        const auto& h = ci.shard(f.shard);
        DocumentHit hit;
        hit.shard = f.shard;
        hit.doc = f.doc;
        hit.match_offset = f.offset;
        hit.span_start = h.offsets().start(f.doc);
        hit.span_length = h.offsets().length(f.doc);
        try {
            hit.text = reconstruct_document(h.text(), hit.span_start, hit.span_length, opt.threads);
            hit.meta = h.metadata(f.doc);
        } catch (const Error& e) {
            if (e.code() == Errc::Timeout) throw;
            throw Error(Errc::ReconstructFailure,
                        "shard " + std::to_string(f.shard) + " doc " + std::to_string(f.doc) + ": " + e.what());
        }
        hits.push_back(std::move(hit));
    }
    return hits;
}

struct BenchSpec {
    std::vector<uint64_t> query_lengths = {1, 10, 100, 1000};
    std::vector<uint64_t> context_lengths = {10, 100, 1000};
    uint64_t trials = 100;
    uint64_t seed = 0;
    unsigned threads = default_threads();
};

struct BenchRow {
    std::string kind;  ///< "count" or "retrieve"
    uint64_t length = 0;
    uint64_t trials = 0;
    double mean_ms = 0;
};

namespace detail {

/// A random substring of one document, drawn by uniform blob position.
inline std::optional<Bytes> sample_query(const CorpusIndex& ci, uint64_t len, std::mt19937_64& rng) {
    uint64_t total = ci.total_bytes();
    for (int attempt = 0; attempt < 10'000; ++attempt) {
        uint64_t p = rng() % total;
        size_t s = 0;
        while (p >= ci.shard(s).manifest().n) p -= ci.shard(s).manifest().n, ++s;
        const auto& h = ci.shard(s);
        if (p + 1 >= h.manifest().n) continue;
        uint64_t doc = h.offsets().doc_of(p);
        uint64_t end = h.offsets().start(doc) + h.offsets().length(doc);
        if (p + len > end) continue;
        return h.text().reconstruct(p, len);
    }
    return std::nullopt;
}

}  // namespace detail

/// Mean latency of count per query length and of context retrieval per
/// context length, over queries sampled from the corpus itself.
inline std::vector<BenchRow> bench(const CorpusIndex& ci, const BenchSpec& spec) {
    if (spec.trials == 0 || (spec.query_lengths.empty() && spec.context_lengths.empty()))
        throw Error(Errc::EmptyCorpus, "bench has nothing to measure");
    std::mt19937_64 rng(spec.seed);
    QueryOptions opt{spec.threads, {}};
    std::vector<BenchRow> rows;
    for (uint64_t len : spec.query_lengths) {
        BenchRow row{"count", len, 0, 0};
        double sum = 0;
        for (uint64_t t = 0; t < spec.trials; ++t) {
            auto q = detail::sample_query(ci, len, rng);
            if (!q) break;
            sum += count_bytes(ci, *q, opt).latency_ms;
            ++row.trials;
        }
        row.mean_ms = row.trials ? sum / static_cast<double>(row.trials) : 0;
        rows.push_back(row);
    }
    for (uint64_t d : spec.context_lengths) {
        BenchRow row{"retrieve", d, 0, 0};
        double sum = 0;
        for (uint64_t t = 0; t < spec.trials; ++t) {
            auto q = detail::sample_query(ci, 10, rng);
            if (!q) break;
            auto t0 = std::chrono::steady_clock::now();
            for (size_t s = 0; s < ci.shard_count(); ++s) {
                const auto& fm = ci.shard(s).text();
                SaRange r = fm.find(*q);
                if (r.empty()) continue;
                uint64_t pos = fm.locate(r.lo);
                uint64_t start = pos > d / 2 ? pos - d / 2 : 0;
                uint64_t len = std::min<uint64_t>(d, fm.size() - start);
                reconstruct_document(fm, start, len, spec.threads);
                break;
            }
            sum += detail::ms_since(t0);
            ++row.trials;
        }
        row.mean_ms = row.trials ? sum / static_cast<double>(row.trials) : 0;
        rows.push_back(row);
    }
    return rows;
}

}  // namespace fmgram
