// Static bitvectors with rank/select.
//
// PlainBits keeps the raw bits plus a two-level rank directory (64-bit
// absolute counts per 65536 bits, 16-bit relative counts per 1024 bits) and
// select samples every 8192 occurrences of each bit value. Directory plus
// samples cost about 2% of the raw bits.
//
// RrrBits splits the bits into 127-bit blocks, each stored as a 7-bit class
// (popcount) and an enumerative offset of ceil(log2 C(127, class)) bits.
// Superblocks every 64 blocks hold the absolute rank and the offset-stream
// pointer. Long runs and skewed densities compress well, which is what the
// node bitvectors of a BWT wavelet tree look like on natural text.
//
// BitVector picks whichever of the two is smaller for the given bits.
//
// All ranks are exclusive: rank(b, i) counts bit b in positions [0, i).
// select(b, k) is 1-based and returns the position of the k-th b.
#pragma once

#include <array>
#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "common.hpp"
#include "word_array.hpp"

namespace fmgram {

__extension__ using uint128 = unsigned __int128;

/// Position of the k-th (0-based) set bit of w; k < popcount(w).
inline unsigned select_in_word(uint64_t w, unsigned k) {
    for (unsigned byte = 0; byte < 8; ++byte) {
        unsigned pc = static_cast<unsigned>(std::popcount((w >> (byte * 8)) & 0xFF));
        if (k < pc) {
            uint64_t b = (w >> (byte * 8)) & 0xFF;
            for (unsigned j = 0; j < k; ++j) b &= b - 1;
            return byte * 8 + static_cast<unsigned>(std::countr_zero(b));
        }
        k -= pc;
    }
    return 64;
}

/// Growable raw bit array used while building.
class BitBuilder {
public:
    BitBuilder() = default;
    explicit BitBuilder(uint64_t size) : size_(size), words_((size + 63) / 64 + 1, 0) {}

    void push_back(bool b) {
        if ((size_ >> 6) + 1 >= words_.size()) words_.resize(words_.size() * 2 + 2, 0);
        if (b) words_[size_ >> 6] |= uint64_t{1} << (size_ & 63);
        ++size_;
    }
    void set(uint64_t i) { words_[i >> 6] |= uint64_t{1} << (i & 63); }
    bool get(uint64_t i) const { return (words_[i >> 6] >> (i & 63)) & 1; }
    uint64_t size() const { return size_; }
    std::vector<uint64_t>& words() { return words_; }
    const std::vector<uint64_t>& words() const { return words_; }

private:
    uint64_t size_ = 0;
    std::vector<uint64_t> words_ = std::vector<uint64_t>(2, 0);
};

class PlainBits {
public:
    static constexpr uint64_t kBlockBits = 1024;
    static constexpr uint64_t kSuperBits = 65536;
    static constexpr uint64_t kSelectSample = 8192;

    PlainBits() = default;

    PlainBits(const std::vector<uint64_t>& raw, uint64_t m) : size_(m) {
        uint64_t nwords = m / 64 + 1;
        std::vector<uint64_t> bits(nwords, 0);
        for (uint64_t w = 0; w < nwords && w < raw.size(); ++w) bits[w] = raw[w];
        if (m % 64) bits[m / 64] &= (uint64_t{1} << (m % 64)) - 1;
        else bits[m / 64] = 0;

        uint64_t nblocks = m / kBlockBits + 1;
        std::vector<uint64_t> l1(m / kSuperBits + 1, 0);
        std::vector<uint64_t> l2((nblocks + 3) / 4, 0);
        std::vector<uint64_t> sel1, sel0;
        uint64_t ones = 0;
        for (uint64_t blk = 0; blk < nblocks; ++blk) {
            uint64_t start = blk * kBlockBits;
            if (start % kSuperBits == 0) l1[start / kSuperBits] = ones;
            uint64_t rel = ones - l1[start / kSuperBits];
            l2[blk / 4] |= rel << (16 * (blk % 4));
            uint64_t zeros_before = start - ones;
            uint64_t w0 = start / 64;
            uint64_t block_ones = 0;
            for (uint64_t w = w0; w < w0 + 16 && w < nwords; ++w)
                block_ones += static_cast<uint64_t>(std::popcount(bits[w]));
            uint64_t block_len = std::min(kBlockBits, m - std::min(m, start));
            uint64_t block_zeros = block_len - block_ones;
            // Sample the block holding occurrence numbers k*8192+1.
            while (sel1.size() * kSelectSample < ones + block_ones &&
                   sel1.size() * kSelectSample >= ones)
                sel1.push_back(blk);
            while (sel0.size() * kSelectSample < zeros_before + block_zeros &&
                   sel0.size() * kSelectSample >= zeros_before)
                sel0.push_back(blk);
            ones += block_ones;
        }
        ones_ = ones;
        bits_ = WordArray(std::move(bits));
        l1_ = WordArray(std::move(l1));
        l2_ = WordArray(std::move(l2));
        sel1_ = WordArray(pack32(sel1));
        sel0_ = WordArray(pack32(sel0));
        nsel1_ = sel1.size();
        nsel0_ = sel0.size();
    }

    uint64_t size() const { return size_; }
    uint64_t ones() const { return ones_; }

    bool access(uint64_t i) const { return (bits_[i >> 6] >> (i & 63)) & 1; }

    uint64_t rank1(uint64_t i) const {
        uint64_t blk = i / kBlockBits;
        uint64_t r = block_rank1(blk);
        uint64_t w = blk * 16, end = i >> 6;
        for (; w < end; ++w) r += static_cast<uint64_t>(std::popcount(bits_[w]));
        if (i & 63) r += static_cast<uint64_t>(std::popcount(bits_[end] & ((uint64_t{1} << (i & 63)) - 1)));
        return r;
    }

    uint64_t select1(uint64_t k) const { return select_impl<true>(k); }
    uint64_t select0(uint64_t k) const { return select_impl<false>(k); }

    uint64_t stored_bits() const {
        return 64 * (bits_.size() + l1_.size() + l2_.size() + sel1_.size() + sel0_.size() + 10);
    }

    static uint64_t estimate_bits(uint64_t m) {
        return 64 * (m / 64 + 1 + m / kSuperBits + 1 + (m / kBlockBits + 4) / 4 + m / (2 * kSelectSample) + 14);
    }

    void save(WordWriter& w) const {
        w.put(size_);
        w.put(ones_);
        w.put(nsel1_);
        w.put(nsel0_);
        w.put_array(bits_.span());
        w.put_array(l1_.span());
        w.put_array(l2_.span());
        w.put_array(sel1_.span());
        w.put_array(sel0_.span());
    }

    static PlainBits load(WordReader& r) {
        PlainBits p;
        p.size_ = r.get();
        p.ones_ = r.get();
        p.nsel1_ = r.get();
        p.nsel0_ = r.get();
        p.bits_ = r.get_array();
        p.l1_ = r.get_array();
        p.l2_ = r.get_array();
        p.sel1_ = r.get_array();
        p.sel0_ = r.get_array();
        if (p.bits_.size() < p.size_ / 64 + 1 || p.l1_.size() < p.size_ / kSuperBits + 1 ||
            p.l2_.size() * 4 < p.size_ / kBlockBits + 1)
            throw Error(Errc::LengthMismatch, "plain bitvector directory too short");
        return p;
    }

private:
    static std::vector<uint64_t> pack32(const std::vector<uint64_t>& v) {
        std::vector<uint64_t> out((v.size() + 1) / 2, 0);
        for (size_t i = 0; i < v.size(); ++i) out[i / 2] |= (v[i] & 0xFFFFFFFFu) << (32 * (i % 2));
        return out;
    }
    static uint64_t unpack32(const WordArray& a, uint64_t i) { return (a[i / 2] >> (32 * (i % 2))) & 0xFFFFFFFFu; }

    uint64_t block_rank1(uint64_t blk) const {
        return l1_[blk * kBlockBits / kSuperBits] + ((l2_[blk / 4] >> (16 * (blk % 4))) & 0xFFFF);
    }

    template <bool Bit>
    uint64_t block_rank(uint64_t blk) const {
        uint64_t r1 = block_rank1(blk);
        return Bit ? r1 : blk * kBlockBits - r1;
    }

    template <bool Bit>
    uint64_t select_impl(uint64_t k) const {
        uint64_t total = Bit ? ones_ : size_ - ones_;
        if (k == 0 || k > total) throw Error(Errc::NotEnoughOccurrences, "select beyond bit count");
        const WordArray& samples = Bit ? sel1_ : sel0_;
        uint64_t nsamples = Bit ? nsel1_ : nsel0_;
        uint64_t j = (k - 1) / kSelectSample;
        uint64_t lo = unpack32(samples, j);
        uint64_t hi = j + 1 < nsamples ? unpack32(samples, j + 1) : size_ / kBlockBits;
        // Largest block in [lo, hi] whose starting rank is < k.
        while (lo < hi) {
            uint64_t mid = lo + (hi - lo + 1) / 2;
            if (block_rank<Bit>(mid) < k) lo = mid;
            else hi = mid - 1;
        }
        uint64_t rem = k - block_rank<Bit>(lo);
        for (uint64_t w = lo * 16;; ++w) {
            uint64_t word = Bit ? bits_[w] : ~bits_[w];
            uint64_t pc = static_cast<uint64_t>(std::popcount(word));
            if (rem <= pc) return w * 64 + select_in_word(word, static_cast<unsigned>(rem - 1));
            rem -= pc;
        }
    }

    uint64_t size_ = 0;
    uint64_t ones_ = 0;
    uint64_t nsel1_ = 0;
    uint64_t nsel0_ = 0;
    WordArray bits_;
    WordArray l1_;
    WordArray l2_;
    WordArray sel1_;
    WordArray sel0_;
};

namespace detail {

struct RrrTables {
    static constexpr unsigned kBlock = 127;
    // binom[n][k] = C(n, k) for n <= 127; by_class[k][n] is the same value.
    std::vector<std::array<uint128, kBlock + 1>> binom;
    std::vector<std::array<uint128, kBlock + 1>> by_class;
    std::array<uint8_t, kBlock + 1> width{};

    RrrTables() : binom(kBlock + 1), by_class(kBlock + 1) {
        for (unsigned n = 0; n <= kBlock; ++n) {
            binom[n].fill(0);
            binom[n][0] = 1;
            for (unsigned k = 1; k <= n; ++k) binom[n][k] = binom[n - 1][k - 1] + (k <= n - 1 ? binom[n - 1][k] : 0);
        }
        for (unsigned k = 0; k <= kBlock; ++k)
            for (unsigned n = 0; n <= kBlock; ++n) by_class[k][n] = binom[n][k];
        for (unsigned k = 0; k <= kBlock; ++k) {
            uint128 c = binom[kBlock][k] - 1;
            unsigned bits = 0;
            while (c) {
                ++bits;
                c >>= 1;
            }
            width[k] = static_cast<uint8_t>(bits);
        }
    }

    static const RrrTables& get() {
        static const RrrTables t;
        return t;
    }
};

inline uint128 read_bits128(const uint64_t* words, uint64_t pos, unsigned len) {
    if (len <= 64) return read_bits(words, pos, len);
    uint128 lo = read_bits(words, pos, 64);
    uint128 hi = read_bits(words, pos + 64, len - 64);
    return lo | (hi << 64);
}

inline void write_bits128(uint64_t* words, uint64_t pos, unsigned len, uint128 v) {
    if (len <= 64) {
        write_bits(words, pos, len, static_cast<uint64_t>(v));
        return;
    }
    write_bits(words, pos, 64, static_cast<uint64_t>(v));
    write_bits(words, pos + 64, len - 64, static_cast<uint64_t>(v >> 64));
}

}  // namespace detail

class RrrBits {
public:
    static constexpr unsigned kBlock = detail::RrrTables::kBlock;
    static constexpr uint64_t kSuperBlocks = 64;
    // Blocks with at most this many ones, or zeros, decode run by run.
    static constexpr unsigned kRunClass = 8;

    RrrBits() = default;

    RrrBits(const std::vector<uint64_t>& raw, uint64_t m) : size_(m) {
        const auto& t = detail::RrrTables::get();
        nblocks_ = (m + kBlock - 1) / kBlock;
        PackedInts classes(nblocks_, 7);
        std::vector<uint128> offsets(nblocks_);
        uint64_t offset_bits = 0;
        for (uint64_t b = 0; b < nblocks_; ++b) {
            uint128 block = block_bits(raw, b, m);
            unsigned c = popcount128(block);
            classes.set(b, c);
            offsets[b] = encode(block, c);
            offset_bits += t.width[c];
        }
        std::vector<uint64_t> stream(offset_bits / 64 + 2, 0);
        uint64_t nsuper = nblocks_ / kSuperBlocks + 1;
        std::vector<uint64_t> sb_rank(nsuper, 0), sb_ptr(nsuper, 0);
        uint64_t ptr = 0, ones = 0;
        for (uint64_t b = 0; b < nblocks_; ++b) {
            if (b % kSuperBlocks == 0) {
                sb_rank[b / kSuperBlocks] = ones;
                sb_ptr[b / kSuperBlocks] = ptr;
            }
            unsigned c = static_cast<unsigned>(classes[b]);
            detail::write_bits128(stream.data(), ptr, t.width[c], offsets[b]);
            ptr += t.width[c];
            ones += c;
        }
        if (nblocks_ % kSuperBlocks == 0) {
            sb_rank[nblocks_ / kSuperBlocks] = ones;
            sb_ptr[nblocks_ / kSuperBlocks] = ptr;
        }
        ones_ = ones;
        classes_ = std::move(classes);
        offsets_ = WordArray(std::move(stream));
        sb_rank_ = WordArray(std::move(sb_rank));
        sb_ptr_ = WordArray(std::move(sb_ptr));
    }

    /// Bits the encoding would occupy, without building it.
    static uint64_t estimate_bits(const std::vector<uint64_t>& raw, uint64_t m) {
        const auto& t = detail::RrrTables::get();
        uint64_t nblocks = (m + kBlock - 1) / kBlock;
        uint64_t bits = 0;
        for (uint64_t b = 0; b < nblocks; ++b) bits += t.width[popcount128(block_bits(raw, b, m))];
        return bits + 64 + 7 * nblocks + 64 + 128 * (nblocks / kSuperBlocks + 1) + 64 * 8;
    }

    uint64_t size() const { return size_; }
    uint64_t ones() const { return ones_; }

    bool access(uint64_t i) const { return access_rank1(i).first; }

    uint64_t rank1(uint64_t i) const {
        uint64_t b = i / kBlock;
        unsigned off = static_cast<unsigned>(i % kBlock);
        auto [r, ptr] = block_start(b);
        if (off == 0) return r;
        unsigned c = static_cast<unsigned>(classes_[b]);
        return r + ones_before(c, ptr, off);
    }

    /// (bits[i], rank1(i)) from a single block decode.
    std::pair<bool, uint64_t> access_rank1(uint64_t i) const {
        uint64_t b = i / kBlock;
        unsigned off = static_cast<unsigned>(i % kBlock);
        auto [r, ptr] = block_start(b);
        unsigned c = static_cast<unsigned>(classes_[b]);
        if (c == 0) return {false, r};
        if (c == kBlock) return {true, r + off};
        uint128 block = decode(c, read_offset(c, ptr), off + 1);
        uint128 below = off == 0 ? 0 : block & ((uint128{1} << off) - 1);
        return {static_cast<bool>((block >> off) & 1), r + popcount128(below)};
    }

    uint64_t select1(uint64_t k) const { return select_impl<true>(k); }
    uint64_t select0(uint64_t k) const { return select_impl<false>(k); }

    uint64_t stored_bits() const {
        return classes_.stored_bits() + 64 * (offsets_.size() + sb_rank_.size() + sb_ptr_.size() + 6);
    }

    void save(WordWriter& w) const {
        w.put(size_);
        w.put(ones_);
        w.put(nblocks_);
        classes_.save(w);
        w.put_array(offsets_.span());
        w.put_array(sb_rank_.span());
        w.put_array(sb_ptr_.span());
    }

    static RrrBits load(WordReader& r) {
        RrrBits v;
        v.size_ = r.get();
        v.ones_ = r.get();
        v.nblocks_ = r.get();
        v.classes_ = PackedInts::load(r);
        v.offsets_ = r.get_array();
        v.sb_rank_ = r.get_array();
        v.sb_ptr_ = r.get_array();
        if (v.nblocks_ != (v.size_ + kBlock - 1) / kBlock || v.classes_.size() != v.nblocks_ ||
            v.sb_rank_.size() != v.nblocks_ / kSuperBlocks + 1 || v.sb_ptr_.size() != v.sb_rank_.size())
            throw Error(Errc::LengthMismatch, "rrr bitvector tables inconsistent");
        return v;
    }

private:
    static unsigned popcount128(uint128 x) {
        return static_cast<unsigned>(std::popcount(static_cast<uint64_t>(x)) +
                                     std::popcount(static_cast<uint64_t>(x >> 64)));
    }

    static uint128 block_bits(const std::vector<uint64_t>& raw, uint64_t b, uint64_t m) {
        uint64_t start = b * kBlock;
        auto word = [&](uint64_t w) { return w < raw.size() ? raw[w] : 0; };
        uint128 v = 0;
        // Gather 127 bits starting at `start` (spans at most three words).
        uint64_t w = start >> 6;
        unsigned off = start & 63;
        uint128 lo = (uint128{word(w + 1)} << 64) | word(w);
        v = lo >> off;
        if (off) v |= uint128{word(w + 2)} << (128 - off);
        unsigned len = static_cast<unsigned>(std::min<uint64_t>(kBlock, m - start));
        v &= (uint128{1} << len) - 1;
        return v;
    }

    // Blocks are ordered by the combinatorial number system: scanning from
    // position 0, a 0 bit precedes a 1 bit.
    static uint128 encode(uint128 block, unsigned c) {
        const auto& t = detail::RrrTables::get();
        uint128 v = 0;
        unsigned r = c;
        for (unsigned j = 0; j < kBlock && r > 0; ++j) {
            unsigned rest = kBlock - j;
            if (r == rest) break;
            if ((block >> j) & 1) {
                v += t.binom[rest - 1][r];
                --r;
            }
        }
        return v;
    }

    /// Decodes at least the first `limit` bits of a block; bits past the
    /// limit may be left unset.
    static uint128 decode(unsigned c, uint128 v, unsigned limit = kBlock) {
        if (c > kRunClass && c < kBlock - kRunClass) return decode_linear(c, v, limit);
        const auto& t = detail::RrrTables::get();
        const auto& binom = t.binom;
        uint128 block = 0;
        unsigned j = 0, r = c;
        while (j < limit && r > 0) {
            unsigned n = kBlock - j;
            if (r == n) {
                block |= ((uint128{1} << n) - 1) << j;
                break;
            }
            if (v < t.by_class[r][n - 1]) {
                // Zeros up to the first p with v >= C(kBlock - p - 1, r).
                unsigned lo = j + 1, hi = kBlock - r;
                while (lo < hi) {
                    unsigned mid = (lo + hi) / 2;
                    if (v >= t.by_class[r][kBlock - mid - 1]) hi = mid;
                    else lo = mid + 1;
                }
                j = lo;
                continue;
            }
            // k ones in a row while v + C(n - k - 1, r - k - 1) >= C(n, r).
            const uint128 total = binom[n][r];
            unsigned lo = 1, hi = r;
            while (lo < hi) {
                unsigned mid = (lo + hi) / 2;
                if (v + binom[n - mid - 1][r - mid - 1] < total) hi = mid;
                else lo = mid + 1;
            }
            block |= ((uint128{1} << lo) - 1) << j;
            v -= total - binom[n - lo][r - lo];
            r -= lo;
            j += lo;
        }
        return block;
    }

    static uint128 decode_linear(unsigned c, uint128 v, unsigned limit) {
        const auto& by_class = detail::RrrTables::get().by_class;
        uint128 block = 0;
        unsigned r = c;
        for (unsigned j = 0; j < limit && r > 0; ++j) {
            unsigned rest = kBlock - j;
            if (r == rest) {
                block |= ((uint128{1} << rest) - 1) << j;
                break;
            }
            const uint128 zero_first = by_class[r][rest - 1];
            if (v >= zero_first) {
                v -= zero_first;
                block |= uint128{1} << j;
                --r;
            }
        }
        return block;
    }

    uint128 read_offset(unsigned c, uint64_t ptr) const {
        return detail::read_bits128(offsets_.data(), ptr, detail::RrrTables::get().width[c]);
    }

    // Ones among the first `off` positions of a block.
    unsigned ones_before(unsigned c, uint64_t ptr, unsigned off) const {
        if (c == 0) return 0;
        if (c == kBlock) return off;
        uint128 block = decode(c, read_offset(c, ptr), off);
        return popcount128(block & ((uint128{1} << off) - 1));
    }

    // Rank and offset pointer at the start of block b.
    std::pair<uint64_t, uint64_t> block_start(uint64_t b) const {
        const auto& t = detail::RrrTables::get();
        uint64_t sb = b / kSuperBlocks;
        uint64_t r = sb_rank_[sb], ptr = sb_ptr_[sb];
        classes_.for_range(sb * kSuperBlocks, b, [&](uint64_t c) {
            r += c;
            ptr += t.width[c];
        });
        return {r, ptr};
    }

    uint64_t block_len(uint64_t b) const { return std::min<uint64_t>(kBlock, size_ - b * kBlock); }

    template <bool Bit>
    uint64_t select_impl(uint64_t k) const {
        const auto& t = detail::RrrTables::get();
        uint64_t total = Bit ? ones_ : size_ - ones_;
        if (k == 0 || k > total) throw Error(Errc::NotEnoughOccurrences, "select beyond bit count");
        auto count_at_super = [&](uint64_t sb) {
            uint64_t r1 = sb_rank_[sb];
            return Bit ? r1 : sb * kSuperBlocks * kBlock - r1;
        };
        uint64_t lo = 0, hi = sb_rank_.size() - 1;
        while (lo < hi) {
            uint64_t mid = lo + (hi - lo + 1) / 2;
            if (mid * kSuperBlocks < nblocks_ && count_at_super(mid) < k) lo = mid;
            else hi = mid - 1;
        }
        uint64_t seen = count_at_super(lo), ptr = sb_ptr_[lo];
        for (uint64_t b = lo * kSuperBlocks; b < nblocks_; ++b) {
            unsigned c = static_cast<unsigned>(classes_[b]);
            uint64_t here = Bit ? c : block_len(b) - c;
            if (seen + here >= k) {
                uint128 block = decode(c, read_offset(c, ptr));
                if (!Bit) block = ~block & ((uint128{1} << block_len(b)) - 1);
                unsigned want = static_cast<unsigned>(k - seen - 1);
                uint64_t lo64 = static_cast<uint64_t>(block);
                unsigned pc = static_cast<unsigned>(std::popcount(lo64));
                unsigned pos = want < pc ? select_in_word(lo64, want)
                                         : 64 + select_in_word(static_cast<uint64_t>(block >> 64), want - pc);
                return b * kBlock + pos;
            }
            seen += here;
            ptr += t.width[c];
        }
        throw Error(Errc::NotEnoughOccurrences, "select beyond bit count");
    }

    uint64_t size_ = 0;
    uint64_t ones_ = 0;
    uint64_t nblocks_ = 0;
    PackedInts classes_;
    WordArray offsets_;
    WordArray sb_rank_;
    WordArray sb_ptr_;
};

enum class BitEncoding : uint64_t { Plain = 0, Rrr = 1, Auto = 2 };

/// Rank/select bitvector stored either plain or RRR-compressed. Auto picks
/// RRR only when it is at most 4/5 the size of the plain encoding.
class BitVector {
public:
    BitVector() = default;

    BitVector(const std::vector<uint64_t>& raw, uint64_t m, BitEncoding enc = BitEncoding::Auto) {
        if (enc == BitEncoding::Auto)
            enc = 5 * RrrBits::estimate_bits(raw, m) <= 4 * PlainBits::estimate_bits(m) ? BitEncoding::Rrr
                                                                                        : BitEncoding::Plain;
        kind_ = enc;
        if (kind_ == BitEncoding::Rrr) rrr_ = RrrBits(raw, m);
        else plain_ = PlainBits(raw, m);
    }

    explicit BitVector(const BitBuilder& b, BitEncoding enc = BitEncoding::Auto)
        : BitVector(b.words(), b.size(), enc) {}

    BitEncoding encoding() const { return kind_; }
    uint64_t size() const { return is_rrr() ? rrr_.size() : plain_.size(); }
    uint64_t ones() const { return is_rrr() ? rrr_.ones() : plain_.ones(); }

    bool access(uint64_t i) const {
        check_pos(i, size());
        return is_rrr() ? rrr_.access(i) : plain_.access(i);
    }

    uint64_t rank1(uint64_t i) const {
        check_pos(i, size() + 1);
        return is_rrr() ? rrr_.rank1(i) : plain_.rank1(i);
    }
    uint64_t rank0(uint64_t i) const { return i - rank1(i); }
    uint64_t rank(bool bit, uint64_t i) const { return bit ? rank1(i) : rank0(i); }

    /// (bits[i], rank of that bit value in [0, i)).
    std::pair<bool, uint64_t> access_rank(uint64_t i) const {
        check_pos(i, size());
        if (is_rrr()) {
            auto [b, r1] = rrr_.access_rank1(i);
            return {b, b ? r1 : i - r1};
        }
        bool b = plain_.access(i);
        uint64_t r1 = plain_.rank1(i);
        return {b, b ? r1 : i - r1};
    }

    uint64_t select1(uint64_t k) const { return is_rrr() ? rrr_.select1(k) : plain_.select1(k); }
    uint64_t select0(uint64_t k) const { return is_rrr() ? rrr_.select0(k) : plain_.select0(k); }
    uint64_t select(bool bit, uint64_t k) const { return bit ? select1(k) : select0(k); }

    uint64_t stored_bits() const { return 64 + (is_rrr() ? rrr_.stored_bits() : plain_.stored_bits()); }

    void save(WordWriter& w) const {
        w.put(static_cast<uint64_t>(kind_));
        if (is_rrr()) rrr_.save(w);
        else plain_.save(w);
    }

    static BitVector load(WordReader& r) {
        BitVector v;
        uint64_t kind = r.get();
        if (kind == static_cast<uint64_t>(BitEncoding::Rrr)) {
            v.kind_ = BitEncoding::Rrr;
            v.rrr_ = RrrBits::load(r);
        } else if (kind == static_cast<uint64_t>(BitEncoding::Plain)) {
            v.kind_ = BitEncoding::Plain;
            v.plain_ = PlainBits::load(r);
        } else {
            throw Error(Errc::LengthMismatch, "unknown bitvector encoding");
        }
        return v;
    }

private:
    static void check_pos(uint64_t i, uint64_t limit) {
        if (i >= limit) throw Error(Errc::OutOfBounds, "bit position " + std::to_string(i));
    }
    bool is_rrr() const { return kind_ == BitEncoding::Rrr; }

    BitEncoding kind_ = BitEncoding::Plain;
    PlainBits plain_;
    RrrBits rrr_;
};

}  // namespace fmgram
