// FM-index over one byte text terminated by a unique 0x00 sentinel:
// character table, Huffman wavelet tree over the BWT, text-position-regular
// SA samples and regular ISA samples.
#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "bitvector.hpp"
#include "common.hpp"
#include "suffix_array.hpp"
#include "wavelet_tree.hpp"
#include "word_array.hpp"

namespace fmgram {

/// c[x] = number of symbols strictly smaller than byte x; c[256] = n.
struct CharTable {
    std::array<uint64_t, 257> c{};

    static CharTable from_counts(const std::array<uint64_t, 256>& counts) {
        CharTable t;
        for (unsigned x = 0; x < 256; ++x) t.c[x + 1] = t.c[x] + counts[x];
        return t;
    }

    static CharTable from_bwt(std::string_view bwt) {
        std::array<uint64_t, 256> counts{};
        for (char ch : bwt) ++counts[static_cast<uint8_t>(ch)];
        return from_counts(counts);
    }

    uint64_t operator[](unsigned x) const { return c[x]; }
    uint64_t count(uint8_t x) const { return c[x + 1] - c[x]; }

    void save(WordWriter& w) const {
        for (auto v : c) w.put(v);
    }
    static CharTable load(WordReader& r) {
        CharTable t;
        for (auto& v : t.c) v = r.get();
        return t;
    }
};

/// SA values at text positions divisible by `rate`, addressed through a mark
/// bitvector over SA ranks. Stored values are SA[i] / rate.
class SampledSA {
public:
    SampledSA() = default;

    static SampledSA build(const SuffixArray& sa, uint32_t rate, unsigned threads = 1) {
        if (rate == 0) throw Error(Errc::OutOfBounds, "SA sampling rate must be positive");
        const uint64_t n = sa.size();
        SampledSA s;
        s.rate_ = rate;
        std::vector<uint64_t> raw(n / 64 + 2, 0);
        // Chunks aligned to whole words so mark writes never share a word.
        uint64_t nwords = (n + 63) / 64;
        unsigned parts = static_cast<unsigned>(std::min<uint64_t>(std::max(1u, threads), std::max<uint64_t>(1, nwords)));
        std::vector<uint64_t> chunk_marks(parts, 0);
        parallel_chunks(0, nwords, parts, [&](uint64_t wb, uint64_t we, unsigned k) {
            uint64_t cnt = 0;
            for (uint64_t i = wb * 64; i < std::min(n, we * 64); ++i) {
                if (sa[i] % rate == 0) {
                    raw[i >> 6] |= uint64_t{1} << (i & 63);
                    ++cnt;
                }
            }
            chunk_marks[k] = cnt;
        });
        std::vector<uint64_t> first(parts, 0);
        for (unsigned k = 1; k < parts; ++k) first[k] = first[k - 1] + chunk_marks[k - 1];
        uint64_t total = first.back() + chunk_marks.back();
        std::vector<uint64_t> vals(total);
        parallel_chunks(0, nwords, parts, [&](uint64_t wb, uint64_t we, unsigned k) {
            uint64_t out = first[k];
            for (uint64_t i = wb * 64; i < std::min(n, we * 64); ++i)
                if (sa[i] % rate == 0) vals[out++] = sa[i] / rate;
        });
        s.values_ = pack(vals, bits_for(n == 0 ? 0 : (n - 1) / rate));
        s.marks_ = BitVector(raw, n);
        return s;
    }

    uint32_t rate() const { return rate_; }
    const BitVector& marks() const { return marks_; }
    const PackedInts& values() const { return values_; }

    /// Returns SA[i] if rank i is sampled.
    std::optional<uint64_t> lookup(uint64_t i) const {
        auto [marked, r] = marks_.access_rank(i);
        if (!marked) return std::nullopt;
        return values_[r] * rate_;
    }

    static PackedInts pack(const std::vector<uint64_t>& vals, unsigned width) {
        PackedInts p(vals.size(), width);
        for (uint64_t i = 0; i < vals.size(); ++i) p.set(i, vals[i]);
        return p;
    }

private:
    friend class FmIndex;
    uint32_t rate_ = 0;
    BitVector marks_;
    PackedInts values_;
};

/// values[j] = ISA[j * rate], i.e. the SA rank of text position j * rate.
class SampledISA {
public:
    SampledISA() = default;

    static SampledISA build(const SuffixArray& sa, uint32_t rate, unsigned threads = 1) {
        if (rate == 0) throw Error(Errc::OutOfBounds, "ISA sampling rate must be positive");
        const uint64_t n = sa.size();
        SampledISA s;
        s.rate_ = rate;
        std::vector<uint64_t> vals((n + rate - 1) / rate, 0);
        parallel_chunks(0, n, threads, [&](uint64_t b, uint64_t e, unsigned) {
            for (uint64_t i = b; i < e; ++i)
                if (sa[i] % rate == 0) vals[sa[i] / rate] = i;
        });
        s.values_ = SampledSA::pack(vals, bits_for(n == 0 ? 0 : n - 1));
        return s;
    }

    uint32_t rate() const { return rate_; }
    const PackedInts& values() const { return values_; }
    uint64_t operator[](uint64_t j) const { return values_[j]; }

private:
    friend class FmIndex;
    uint32_t rate_ = 0;
    PackedInts values_;
};

/// Half-open range [lo, hi) of SA ranks.
struct SaRange {
    uint64_t lo = 0;
    uint64_t hi = 0;
    uint64_t count() const { return hi - lo; }
    bool empty() const { return hi <= lo; }
    bool operator==(const SaRange&) const = default;
};

struct FmOptions {
    uint32_t sa_rate = 32;
    uint32_t isa_rate = 64;
    unsigned threads = 1;
    BitEncoding encoding = BitEncoding::Auto;
};

using StepTimer = std::function<void(std::string_view step, double seconds)>;

/// Serialized form: one word stream per section.
struct FmSections {
    std::vector<uint64_t> wavelet, ctable, ssa_marks, ssa_values, sisa;
};

struct FmSectionViews {
    std::span<const uint64_t> wavelet, ctable, ssa_marks, ssa_values, sisa;
};

class FmIndex {
public:
    FmIndex() = default;

    /// Builds the index; `text` must end with its only 0x00 byte.
    static FmIndex build(std::string_view text, const FmOptions& opt = {}, const StepTimer& timer = {}) {
        if (text.empty() || static_cast<uint8_t>(text.back()) != kSentinel)
            throw Error(Errc::LengthMismatch, "text must end with the 0x00 sentinel");
        auto clock = std::chrono::steady_clock::now();
        auto lap = [&](std::string_view step) {
            auto now = std::chrono::steady_clock::now();
            if (timer) timer(step, std::chrono::duration<double>(now - clock).count());
            clock = now;
        };
        unsigned threads = std::max(1u, opt.threads);
        FmIndex fm;
        fm.n_ = text.size();

        SuffixArray sa = build_suffix_array(text);
        std::string bwt = derive_bwt(text, sa, threads);
        lap("SA+BWT");

        fm.ctable_ = CharTable::from_bwt(bwt);
        if (fm.ctable_.count(kSentinel) != 1)
            throw Error(Errc::LengthMismatch, "text must contain exactly one 0x00 sentinel");
        lap("alphabet");

        fm.wt_ = WaveletTree::build(bwt, threads, opt.encoding);
        std::string().swap(bwt);
        lap("wavelet tree");

        fm.ssa_ = SampledSA::build(sa, opt.sa_rate, threads);
        lap("sample SA");

        fm.sisa_ = SampledISA::build(sa, opt.isa_rate, threads);
        lap("sample ISA");
        return fm;
    }

    uint64_t size() const { return n_; }
    const WaveletTree& wavelet() const { return wt_; }
    const CharTable& ctable() const { return ctable_; }
    const SampledSA& ssa() const { return ssa_; }
    const SampledISA& sisa() const { return sisa_; }
    uint32_t sa_rate() const { return ssa_.rate_; }
    uint32_t isa_rate() const { return sisa_.rate_; }

    uint8_t bwt_at(uint64_t i) const { return wt_.access(i); }

    /// SA rank of text position SA[i] - 1 (cyclically).
    uint64_t lf(uint64_t i) const {
        if (i >= n_) throw Error(Errc::OutOfBounds, "SA rank " + std::to_string(i));
        auto [c, r] = wt_.inverse_select(i);
        return ctable_[c] + r;
    }

    /// Backward search. The result's count is the number of occurrences.
    SaRange find(std::string_view q) const {
        if (q.empty()) throw Error(Errc::EmptyQuery, "empty pattern");
        if (q.find('\0') != std::string_view::npos)
            throw Error(Errc::InvalidQuery, "pattern contains the sentinel byte");
        SaRange r{0, n_};
        for (auto it = q.rbegin(); it != q.rend(); ++it) {
            uint8_t c = static_cast<uint8_t>(*it);
            if (ctable_.count(c) == 0) return {0, 0};
            r.lo = ctable_[c] + wt_.rank(c, r.lo);
            r.hi = ctable_[c] + wt_.rank(c, r.hi);
            if (r.empty()) return {r.lo, r.lo};
        }
        return r;
    }

    uint64_t count(std::string_view q) const { return find(q).count(); }

    /// SA[i], by walking LF to the nearest sampled rank (< sa_rate steps).
    uint64_t locate(uint64_t i) const { return locate_with_steps(i).first; }

    std::pair<uint64_t, uint64_t> locate_with_steps(uint64_t i) const {
        if (i >= n_) throw Error(Errc::OutOfBounds, "SA rank " + std::to_string(i));
        uint64_t steps = 0;
        for (;;) {
            auto [marked, r] = ssa_.marks_.access_rank(i);
            if (marked) return {(ssa_.values_[r] * ssa_.rate_ + steps) % n_, steps};
            i = lf(i);
            ++steps;
        }
    }

    /// text[start, start + len), rebuilt backwards from the next ISA sample.
    std::string reconstruct(uint64_t start, uint64_t len) const {
        if (start > n_ || len > n_ - start)
            throw Error(Errc::OutOfBounds, "reconstruct [" + std::to_string(start) + ", +" + std::to_string(len) +
                                               ") beyond text of " + std::to_string(n_));
        std::string out(len, '\0');
        if (len == 0) return out;
        const uint64_t b = sisa_.rate_;
        uint64_t end = start + len;
        uint64_t anchor = (end + b - 1) / b * b;
        uint64_t r;
        if (anchor >= n_) {
            // Position n is position 0 read cyclically.
            anchor = n_;
            r = sisa_[0];
        } else {
            r = sisa_[anchor / b];
        }
        for (uint64_t k = end; k < anchor; ++k) r = lf(r);
        for (uint64_t k = len; k > 0; --k) {
            auto [c, rr] = wt_.inverse_select(r);
            out[k - 1] = static_cast<char>(c);
            r = ctable_[c] + rr;
        }
        return out;
    }

    FmSections save() const {
        FmSections s;
        WordWriter w;
        wt_.save(w);
        s.wavelet = std::move(w.words());
        WordWriter c;
        c.put(n_);
        ctable_.save(c);
        s.ctable = std::move(c.words());
        WordWriter m;
        m.put(ssa_.rate_);
        ssa_.marks_.save(m);
        s.ssa_marks = std::move(m.words());
        WordWriter v;
        ssa_.values_.save(v);
        s.ssa_values = std::move(v.words());
        WordWriter i;
        i.put(sisa_.rate_);
        sisa_.values_.save(i);
        s.sisa = std::move(i.words());
        return s;
    }

    static FmIndex load(const FmSectionViews& v) {
        FmIndex fm;
        WordReader c(v.ctable);
        fm.n_ = c.get();
        fm.ctable_ = CharTable::load(c);
        WordReader w(v.wavelet);
        fm.wt_ = WaveletTree::load(w);
        WordReader m(v.ssa_marks);
        fm.ssa_.rate_ = static_cast<uint32_t>(m.get());
        fm.ssa_.marks_ = BitVector::load(m);
        WordReader sv(v.ssa_values);
        fm.ssa_.values_ = PackedInts::load(sv);
        WordReader i(v.sisa);
        fm.sisa_.rate_ = static_cast<uint32_t>(i.get());
        fm.sisa_.values_ = PackedInts::load(i);
        if (fm.wt_.size() != fm.n_ || fm.ssa_.marks_.size() != fm.n_ || fm.ctable_[256] != fm.n_ ||
            fm.ssa_.values_.size() != fm.ssa_.marks_.ones() || fm.ssa_.rate_ == 0 || fm.sisa_.rate_ == 0 ||
            fm.sisa_.values_.size() != (fm.n_ + fm.sisa_.rate_ - 1) / fm.sisa_.rate_)
            throw Error(Errc::LengthMismatch, "FM-index sections disagree on text length");
        return fm;
    }

    struct SizeBreakdown {
        uint64_t wavelet_bits = 0, ssa_marks_bits = 0, ssa_values_bits = 0, sisa_bits = 0;
        uint64_t total_bits() const { return wavelet_bits + ssa_marks_bits + ssa_values_bits + sisa_bits; }
    };

    SizeBreakdown size_breakdown() const {
        return {wt_.stored_bits(), ssa_.marks_.stored_bits(), ssa_.values_.stored_bits(), sisa_.values_.stored_bits()};
    }

private:
    uint64_t n_ = 0;
    WaveletTree wt_;
    CharTable ctable_;
    SampledSA ssa_;
    SampledISA sisa_;
};

}  // namespace fmgram
