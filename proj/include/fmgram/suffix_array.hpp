// Suffix array construction (SA-IS, induced sorting) and BWT derivation.
#pragma once

#include <algorithm>
#include <cstdint>
#include <new>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "common.hpp"

namespace fmgram {

namespace detail {

template <class Index, class Text>
std::vector<Index> sa_naive(const Text& s, Index n) {
    std::vector<Index> sa(n);
    for (Index i = 0; i < n; ++i) sa[i] = i;
    std::sort(sa.begin(), sa.end(), [&](Index l, Index r) {
        if (l == r) return false;
        while (l < n && r < n) {
            if (s[l] != s[r]) return s[l] < s[r];
            ++l;
            ++r;
        }
        return l == n;
    });
    return sa;
}

// Induced sorting over an integer alphabet [0, upper]. Suffix order treats
// the end of the string as smaller than every symbol.
template <class Index, class Text>
std::vector<Index> sa_is(const Text& s, Index n, Index upper) {
    if (n == 0) return {};
    if (n < 16) return sa_naive<Index>(s, n);

    std::vector<Index> sa(n);
    std::vector<bool> ls(n, false);  // true = S-type
    for (Index i = n - 2; i >= 0; --i) {
        ls[i] = (s[i] == s[i + 1]) ? ls[i + 1] : (s[i] < s[i + 1]);
        if (i == 0) break;
    }
    std::vector<Index> sum_l(upper + 1, 0), sum_s(upper + 1, 0);
    for (Index i = 0; i < n; ++i) {
        if (!ls[i]) ++sum_s[s[i]];
        else ++sum_l[s[i] + 1];
    }
    for (Index i = 0; i <= upper; ++i) {
        sum_s[i] += sum_l[i];
        if (i < upper) sum_l[i + 1] += sum_s[i];
    }

    std::vector<Index> buf(upper + 1);
    auto induce = [&](const std::vector<Index>& lms) {
        std::fill(sa.begin(), sa.end(), Index{-1});
        std::copy(sum_s.begin(), sum_s.end(), buf.begin());
        for (Index d : lms) {
            if (d == n) continue;
            sa[buf[s[d]]++] = d;
        }
        std::copy(sum_l.begin(), sum_l.end(), buf.begin());
        sa[buf[s[n - 1]]++] = n - 1;
        for (Index i = 0; i < n; ++i) {
            Index v = sa[i];
            if (v >= 1 && !ls[v - 1]) sa[buf[s[v - 1]]++] = v - 1;
        }
        std::copy(sum_l.begin(), sum_l.end(), buf.begin());
        for (Index i = n - 1; i >= 0; --i) {
            Index v = sa[i];
            if (v >= 1 && ls[v - 1]) sa[--buf[s[v - 1] + 1]] = v - 1;
            if (i == 0) break;
        }
    };

    std::vector<Index> lms_map(n + 1, Index{-1});
    Index m = 0;
    for (Index i = 1; i < n; ++i)
        if (!ls[i - 1] && ls[i]) lms_map[i] = m++;
    std::vector<Index> lms;
    lms.reserve(m);
    for (Index i = 1; i < n; ++i)
        if (!ls[i - 1] && ls[i]) lms.push_back(i);

    induce(lms);

    if (m) {
        std::vector<Index> sorted_lms;
        sorted_lms.reserve(m);
        for (Index v : sa)
            if (lms_map[v] != -1) sorted_lms.push_back(v);
        std::vector<Index> rec_s(m);
        Index rec_upper = 0;
        rec_s[lms_map[sorted_lms[0]]] = 0;
        for (Index i = 1; i < m; ++i) {
            Index l = sorted_lms[i - 1], r = sorted_lms[i];
            Index end_l = (lms_map[l] + 1 < m) ? lms[lms_map[l] + 1] : n;
            Index end_r = (lms_map[r] + 1 < m) ? lms[lms_map[r] + 1] : n;
            bool same = true;
            if (end_l - l != end_r - r) {
                same = false;
            } else {
                while (l < end_l) {
                    if (s[l] != s[r]) break;
                    ++l;
                    ++r;
                }
                if (l == n || s[l] != s[r]) same = false;
            }
            if (!same) ++rec_upper;
            rec_s[lms_map[sorted_lms[i]]] = rec_upper;
        }
        std::vector<Index>().swap(lms_map);
        auto rec_sa = sa_is<Index>(rec_s, m, rec_upper);
        std::vector<Index>().swap(rec_s);
        for (Index i = 0; i < m; ++i) sorted_lms[i] = lms[rec_sa[i]];
        induce(sorted_lms);
    }
    return sa;
}

}  // namespace detail

/// Suffix array held at 32-bit width when the text allows it, 64-bit
/// otherwise. Construction-time only.
class SuffixArray {
public:
    SuffixArray() = default;
    explicit SuffixArray(std::vector<int32_t> v) : narrow_(std::move(v)), size_(narrow_.size()) {}
    explicit SuffixArray(std::vector<int64_t> v) : wide_(std::move(v)), size_(wide_.size()), wide_used_(true) {}

    uint64_t size() const { return size_; }
    uint64_t operator[](uint64_t i) const {
        return wide_used_ ? static_cast<uint64_t>(wide_[i]) : static_cast<uint64_t>(narrow_[i]);
    }
    unsigned entry_bytes() const { return wide_used_ ? 8 : 4; }

    std::vector<uint64_t> to_vector() const {
        std::vector<uint64_t> out(size_);
        for (uint64_t i = 0; i < size_; ++i) out[i] = (*this)[i];
        return out;
    }

private:
    std::vector<int32_t> narrow_;
    std::vector<int64_t> wide_;
    uint64_t size_ = 0;
    bool wide_used_ = false;
};

/// Suffix array of `text`, which must end with a unique smallest sentinel.
inline SuffixArray build_suffix_array(std::string_view text) {
    const uint64_t n = text.size();
    if (n == 0) throw Error(Errc::LengthMismatch, "suffix array of empty text");
    auto bytes = std::span<const uint8_t>(reinterpret_cast<const uint8_t*>(text.data()), n);
    try {
        if (n < (uint64_t{1} << 31) - 1)
            return SuffixArray(detail::sa_is<int32_t>(bytes, static_cast<int32_t>(n), int32_t{255}));
        return SuffixArray(detail::sa_is<int64_t>(bytes, static_cast<int64_t>(n), int64_t{255}));
    } catch (const std::bad_alloc&) {
        uint64_t width = n < (uint64_t{1} << 31) ? 4 : 8;
        throw Error(Errc::OutOfMemory, "suffix array construction for " + std::to_string(n) +
                                           " bytes needs roughly " + std::to_string(n * width * 3 / (1 << 20)) +
                                           " MiB of working memory; lower the shard size (--shard-bytes)");
    }
}

/// L[i] = text[SA[i]-1], or text[n-1] (the sentinel) when SA[i] = 0.
inline std::string derive_bwt(std::string_view text, const SuffixArray& sa, unsigned threads = 1) {
    const uint64_t n = text.size();
    if (sa.size() != n)
        throw Error(Errc::LengthMismatch, "suffix array has " + std::to_string(sa.size()) + " entries, text has " +
                                              std::to_string(n));
    std::string bwt(n, '\0');
    parallel_chunks(0, n, threads, [&](uint64_t b, uint64_t e, unsigned) {
        for (uint64_t i = b; i < e; ++i) {
            uint64_t p = sa[i];
            bwt[i] = p > 0 ? text[p - 1] : text[n - 1];
        }
    });
    return bwt;
}

}  // namespace fmgram
