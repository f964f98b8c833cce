// Shared primitives: error type, byte strings, little-endian helpers,
// section checksums and a deterministic parallel-for.
#pragma once

#include <algorithm>
#include <bit>
#include <cstdint>
#include <cstring>
#include <exception>
#include <mutex>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <thread>
#include <vector>

namespace fmgram {

static_assert(std::endian::native == std::endian::little,
              "index files are memory-mapped in place; a little-endian host is required");

using Bytes = std::string;
using ByteView = std::string_view;

enum class Errc {
    EmptyCorpus,
    DocTooLarge,
    LengthMismatch,
    OutOfBounds,
    NotEnoughOccurrences,
    EmptyQuery,
    InvalidQuery,
    OutOfMemory,
    IoError,
    BadMagic,
    VersionMismatch,
    ChecksumMismatch,
    ShardUnavailable,
    ReconstructFailure,
    UnknownIndex,
    MalformedInput,
    Timeout,
};

inline const char* errc_name(Errc c) {
    switch (c) {
        case Errc::EmptyCorpus: return "EmptyCorpus";
        case Errc::DocTooLarge: return "DocTooLarge";
        case Errc::LengthMismatch: return "LengthMismatch";
        case Errc::OutOfBounds: return "OutOfBounds";
        case Errc::NotEnoughOccurrences: return "NotEnoughOccurrences";
        case Errc::EmptyQuery: return "EmptyQuery";
        case Errc::InvalidQuery: return "InvalidQuery";
        case Errc::OutOfMemory: return "OutOfMemory";
        case Errc::IoError: return "IoError";
        case Errc::BadMagic: return "BadMagic";
        case Errc::VersionMismatch: return "VersionMismatch";
        case Errc::ChecksumMismatch: return "ChecksumMismatch";
        case Errc::ShardUnavailable: return "ShardUnavailable";
        case Errc::ReconstructFailure: return "ReconstructFailure";
        case Errc::UnknownIndex: return "UnknownIndex";
        case Errc::MalformedInput: return "MalformedInput";
        case Errc::Timeout: return "Timeout";
    }
    return "Unknown";
}

class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what)
        : std::runtime_error(std::string(errc_name(code)) + ": " + what), code_(code) {}

    Errc code() const noexcept { return code_; }

private:
    Errc code_;
};

inline constexpr uint8_t kSeparator = 0xFF;
inline constexpr uint8_t kSentinel = 0x00;

/// Number of bits needed to represent values in [0, max_value].
inline unsigned bits_for(uint64_t max_value) {
    return max_value == 0 ? 1u : static_cast<unsigned>(std::bit_width(max_value));
}

inline void put_u32(std::string& out, uint32_t v) {
    char buf[4];
    std::memcpy(buf, &v, 4);
    out.append(buf, 4);
}

inline void put_u64(std::string& out, uint64_t v) {
    char buf[8];
    std::memcpy(buf, &v, 8);
    out.append(buf, 8);
}

inline uint32_t get_u32(const char* p) {
    uint32_t v;
    std::memcpy(&v, p, 4);
    return v;
}

inline uint64_t get_u64(const char* p) {
    uint64_t v;
    std::memcpy(&v, p, 8);
    return v;
}

/// 64-bit section checksum. Word-at-a-time multiply/xorshift mixing; the byte
/// tail is folded in with its length so truncation changes the result.
inline uint64_t checksum64(std::span<const char> data) {
    constexpr uint64_t kMul = 0x9E3779B97F4A7C15ull;
    uint64_t h = 0xCBF29CE484222325ull ^ (data.size() * kMul);
    size_t i = 0;
    for (; i + 8 <= data.size(); i += 8) {
        uint64_t w;
        std::memcpy(&w, data.data() + i, 8);
        w *= kMul;
        w ^= w >> 29;
        h = (h ^ w) * 0xBF58476D1CE4E5B9ull;
        h ^= h >> 32;
    }
    uint64_t tail = 0;
    if (i < data.size()) std::memcpy(&tail, data.data() + i, data.size() - i);
    h = (h ^ (tail * kMul) ^ (data.size() - i)) * 0x94D049BB133111EBull;
    h ^= h >> 31;
    return h;
}

inline unsigned default_threads() {
    unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : hc;
}

/// Splits [begin, end) into at most `threads` contiguous chunks and runs
/// fn(chunk_begin, chunk_end, chunk_index) on each. Chunk boundaries depend
/// only on (begin, end, threads); callers that need results independent of
/// the thread count must write to disjoint, position-determined outputs.
template <class Fn>
void parallel_chunks(uint64_t begin, uint64_t end, unsigned threads, Fn&& fn) {
    if (end <= begin) return;
    uint64_t total = end - begin;
    unsigned parts = static_cast<unsigned>(std::min<uint64_t>(std::max(1u, threads), total));
    if (parts == 1) {
        fn(begin, end, 0u);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(parts - 1);
    auto bound = [&](unsigned k) { return begin + total * k / parts; };
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto run = [&](unsigned k) {
        try {
            fn(bound(k), bound(k + 1), k);
        } catch (...) {
            std::lock_guard lock(failure_mu);
            if (!failure) failure = std::current_exception();
        }
    };
    for (unsigned k = 1; k < parts; ++k) pool.emplace_back(run, k);
    run(0);
    for (auto& t : pool) t.join();
    if (failure) std::rethrow_exception(failure);
}

/// Runs fn(i) for each i in [0, count) over up to `threads` workers.
template <class Fn>
void parallel_for(uint64_t count, unsigned threads, Fn&& fn) {
    parallel_chunks(0, count, threads, [&](uint64_t b, uint64_t e, unsigned) {
        for (uint64_t i = b; i < e; ++i) fn(i);
    });
}

}  // namespace fmgram
