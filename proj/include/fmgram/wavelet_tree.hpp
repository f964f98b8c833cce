// Huffman-shaped wavelet tree over a byte string.
#pragma once

#include <array>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <queue>
#include <string_view>
#include <tuple>
#include <vector>

#include "bitvector.hpp"
#include "common.hpp"
#include "word_array.hpp"

namespace fmgram {

/// Canonical Huffman code over bytes. Symbols with zero frequency get no
/// code; equal-length codewords are assigned in ascending symbol order.
class HuffmanShape {
public:
    static constexpr unsigned kMaxCodeLength = 62;

    HuffmanShape() = default;

    static HuffmanShape from_counts(const std::array<uint64_t, 256>& counts) {
        // (weight, tiebreak, node): leaves tie-break by symbol, merged nodes
        // by creation order after all leaves.
        using Item = std::tuple<uint64_t, uint32_t, int32_t>;
        std::priority_queue<Item, std::vector<Item>, std::greater<Item>> heap;
        std::vector<std::array<int32_t, 2>> kids;
        std::vector<int32_t> leaf_symbol;
        for (unsigned c = 0; c < 256; ++c) {
            if (counts[c] == 0) continue;
            kids.push_back({-1, -1});
            leaf_symbol.push_back(static_cast<int32_t>(c));
            heap.emplace(counts[c], c, static_cast<int32_t>(kids.size() - 1));
        }
        if (heap.empty()) throw Error(Errc::LengthMismatch, "cannot shape an empty string");
        uint32_t order = 256;
        while (heap.size() > 1) {
            auto [w0, t0, a] = heap.top();
            heap.pop();
            auto [w1, t1, b] = heap.top();
            heap.pop();
            kids.push_back({a, b});
            leaf_symbol.push_back(-1);
            heap.emplace(w0 + w1, order++, static_cast<int32_t>(kids.size() - 1));
        }
        std::array<uint8_t, 256> lengths{};
        std::vector<std::pair<int32_t, unsigned>> stack{{std::get<2>(heap.top()), 0u}};
        while (!stack.empty()) {
            auto [v, depth] = stack.back();
            stack.pop_back();
            if (leaf_symbol[v] >= 0) {
                if (depth > kMaxCodeLength) throw Error(Errc::OutOfBounds, "huffman code too long");
                lengths[leaf_symbol[v]] = static_cast<uint8_t>(depth);
                continue;
            }
            stack.push_back({kids[v][0], depth + 1});
            stack.push_back({kids[v][1], depth + 1});
        }
        std::array<bool, 256> present{};
        for (unsigned c = 0; c < 256; ++c) present[c] = counts[c] > 0;
        return from_lengths(lengths, present);
    }

    static HuffmanShape from_lengths(const std::array<uint8_t, 256>& lengths, const std::array<bool, 256>& present) {
        HuffmanShape h;
        h.lengths_ = lengths;
        h.present_ = present;
        std::vector<unsigned> order;
        for (unsigned c = 0; c < 256; ++c)
            if (present[c]) order.push_back(c);
        std::stable_sort(order.begin(), order.end(),
                         [&](unsigned x, unsigned y) { return lengths[x] < lengths[y]; });
        uint64_t code = 0;
        unsigned prev = order.empty() ? 0 : lengths[order.front()];
        for (size_t k = 0; k < order.size(); ++k) {
            unsigned c = order[k];
            if (k > 0) {
                ++code;
                code <<= (lengths[c] - prev);
            }
            prev = lengths[c];
            h.codes_[c] = code;
        }
        h.symbols_ = order;
        return h;
    }

    bool has(uint8_t c) const { return present_[c]; }
    unsigned length(uint8_t c) const { return lengths_[c]; }
    /// Codeword of c, most significant bit first in the low length(c) bits.
    uint64_t code(uint8_t c) const { return codes_[c]; }
    bool bit(uint8_t c, unsigned depth) const { return (codes_[c] >> (lengths_[c] - 1 - depth)) & 1; }
    /// Present symbols in canonical (lexicographic codeword) order.
    const std::vector<unsigned>& symbols() const { return symbols_; }
    const std::array<uint8_t, 256>& lengths() const { return lengths_; }
    const std::array<bool, 256>& present() const { return present_; }

    /// Kraft sum over present symbols; 1 for any complete prefix code.
    double kraft_sum() const {
        double s = 0;
        for (unsigned c : symbols_) s += std::ldexp(1.0, -static_cast<int>(lengths_[c]));
        return s;
    }

private:
    std::array<uint8_t, 256> lengths_{};
    std::array<bool, 256> present_{};
    std::array<uint64_t, 256> codes_{};
    std::vector<unsigned> symbols_;
};

inline double zeroth_order_entropy(const std::array<uint64_t, 256>& counts) {
    uint64_t n = 0;
    for (auto c : counts) n += c;
    if (n == 0) return 0;
    double h = 0;
    for (auto c : counts) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(n);
        h -= p * std::log2(p);
    }
    return h;
}

class WaveletTree {
public:
    struct Node {
        std::array<int32_t, 2> child{-1, -1};
        int32_t parent = -1;
        int32_t symbol = -1;  // >= 0 for leaves
        int32_t bv = -1;      // index into bitvectors, internal nodes only
    };

    WaveletTree() = default;

    static WaveletTree build(std::string_view s, unsigned threads = 1, BitEncoding enc = BitEncoding::Auto) {
        if (s.empty()) throw Error(Errc::LengthMismatch, "wavelet tree over empty string");
        threads = std::max(1u, threads);
        uint64_t n = s.size();
        unsigned parts = static_cast<unsigned>(std::min<uint64_t>(threads, n));
        std::vector<std::array<uint64_t, 256>> hist(parts);
        parallel_chunks(0, n, parts, [&](uint64_t b, uint64_t e, unsigned k) {
            auto& h = hist[k];
            h.fill(0);
            for (uint64_t i = b; i < e; ++i) ++h[static_cast<uint8_t>(s[i])];
        });
        std::array<uint64_t, 256> counts{};
        for (auto& h : hist)
            for (unsigned c = 0; c < 256; ++c) counts[c] += h[c];

        WaveletTree wt;
        wt.n_ = n;
        wt.counts_ = counts;
        wt.shape_ = HuffmanShape::from_counts(counts);
        wt.build_nodes();

        // Per-node bit lengths and per-chunk write cursors.
        size_t internal = wt.internal_count_;
        std::vector<uint64_t> node_len(internal, 0);
        std::vector<std::vector<uint64_t>> cursor(parts, std::vector<uint64_t>(internal, 0));
        for (unsigned k = 0; k < parts; ++k) {
            for (unsigned c : wt.shape_.symbols()) {
                int32_t v = 0;
                for (unsigned d = 0; d < wt.shape_.length(c); ++d) {
                    int32_t bvi = wt.nodes_[v].bv;
                    cursor[k][bvi] = node_len[bvi];  // placeholder, fixed below
                    v = wt.nodes_[v].child[wt.shape_.bit(c, d)];
                }
            }
            for (unsigned c : wt.shape_.symbols()) {
                int32_t v = 0;
                for (unsigned d = 0; d < wt.shape_.length(c); ++d) {
                    node_len[wt.nodes_[v].bv] += hist[k][c];
                    v = wt.nodes_[v].child[wt.shape_.bit(c, d)];
                }
            }
        }
        // cursor[k][node] = bits contributed to node by chunks before k.
        std::vector<uint64_t> running(internal, 0);
        for (unsigned k = 0; k < parts; ++k) {
            for (size_t v = 0; v < internal; ++v) cursor[k][v] = running[v];
            for (unsigned c : wt.shape_.symbols()) {
                int32_t v = 0;
                for (unsigned d = 0; d < wt.shape_.length(c); ++d) {
                    running[wt.nodes_[v].bv] += hist[k][c];
                    v = wt.nodes_[v].child[wt.shape_.bit(c, d)];
                }
            }
        }

        std::vector<BitBuilder> raw;
        raw.reserve(internal);
        for (size_t v = 0; v < internal; ++v) raw.emplace_back(node_len[v]);
        parallel_chunks(0, n, parts, [&](uint64_t b, uint64_t e, unsigned k) {
            std::vector<uint64_t> cur = cursor[k];
            for (uint64_t i = b; i < e; ++i) {
                uint8_t c = static_cast<uint8_t>(s[i]);
                int32_t v = 0;
                unsigned len = wt.shape_.length(c);
                for (unsigned d = 0; d < len; ++d) {
                    int32_t bvi = wt.nodes_[v].bv;
                    bool bit = wt.shape_.bit(c, d);
                    uint64_t pos = cur[bvi]++;
                    if (bit) {
                        uint64_t& word = raw[bvi].words()[pos >> 6];
                        if (parts > 1) std::atomic_ref<uint64_t>(word).fetch_or(uint64_t{1} << (pos & 63), std::memory_order_relaxed);
                        else word |= uint64_t{1} << (pos & 63);
                    }
                    v = wt.nodes_[v].child[bit];
                }
            }
        });
        wt.bvs_.resize(internal);
        parallel_for(internal, threads, [&](uint64_t v) {
            wt.bvs_[v] = BitVector(raw[v].words(), node_len[v], enc);
            std::vector<uint64_t>().swap(raw[v].words());
        });
        return wt;
    }

    uint64_t size() const { return n_; }
    const HuffmanShape& shape() const { return shape_; }
    const std::array<uint64_t, 256>& counts() const { return counts_; }
    const std::vector<Node>& nodes() const { return nodes_; }
    const std::vector<BitVector>& node_bitvectors() const { return bvs_; }

    uint8_t access(uint64_t i) const { return inverse_select(i).first; }

    /// (s[i], occurrences of s[i] in s[0..i)) from one root-to-leaf descent.
    std::pair<uint8_t, uint64_t> inverse_select(uint64_t i) const {
        if (i >= n_) throw Error(Errc::OutOfBounds, "wavelet access at " + std::to_string(i));
        int32_t v = 0;
        while (nodes_[v].symbol < 0) {
            auto [bit, r] = bvs_[nodes_[v].bv].access_rank(i);
            i = r;
            v = nodes_[v].child[bit];
        }
        return {static_cast<uint8_t>(nodes_[v].symbol), i};
    }

    /// Occurrences of c in s[0..i).
    uint64_t rank(uint8_t c, uint64_t i) const {
        if (i > n_) throw Error(Errc::OutOfBounds, "wavelet rank at " + std::to_string(i));
        if (!shape_.has(c)) return 0;
        int32_t v = 0;
        for (unsigned d = 0; d < shape_.length(c) && i > 0; ++d) {
            bool bit = shape_.bit(c, d);
            i = bvs_[nodes_[v].bv].rank(bit, i);
            v = nodes_[v].child[bit];
        }
        return i;
    }

    /// Position of the k-th (1-based) occurrence of c.
    uint64_t select(uint8_t c, uint64_t k) const {
        if (k == 0 || k > counts_[c]) throw Error(Errc::NotEnoughOccurrences, "select past symbol count");
        int32_t v = leaf_of_[c];
        uint64_t pos = k;
        while (nodes_[v].parent >= 0) {
            int32_t p = nodes_[v].parent;
            bool bit = nodes_[p].child[1] == v;
            pos = bvs_[nodes_[p].bv].select(bit, pos) + 1;
            v = p;
        }
        return pos - 1;
    }

    /// Bits held by node bitvectors, including their rank/select directories.
    uint64_t payload_bits() const {
        uint64_t bits = 0;
        for (const auto& bv : bvs_) bits += bv.stored_bits();
        return bits;
    }

    uint64_t stored_bits() const { return payload_bits() + 64 * (2 + 32 + 4); }

    void save(WordWriter& w) const {
        w.put(n_);
        std::vector<uint64_t> lens(32, 0), present(4, 0);
        for (unsigned c = 0; c < 256; ++c) {
            lens[c / 8] |= uint64_t{shape_.lengths()[c]} << (8 * (c % 8));
            if (shape_.present()[c]) present[c / 64] |= uint64_t{1} << (c % 64);
        }
        for (auto x : lens) w.put(x);
        for (auto x : present) w.put(x);
        w.put(bvs_.size());
        for (const auto& bv : bvs_) bv.save(w);
    }

    static WaveletTree load(WordReader& r) {
        WaveletTree wt;
        wt.n_ = r.get();
        std::array<uint8_t, 256> lens{};
        std::array<bool, 256> present{};
        std::vector<uint64_t> lw(32), pw(4);
        for (auto& x : lw) x = r.get();
        for (auto& x : pw) x = r.get();
        for (unsigned c = 0; c < 256; ++c) {
            lens[c] = static_cast<uint8_t>(lw[c / 8] >> (8 * (c % 8)));
            present[c] = (pw[c / 64] >> (c % 64)) & 1;
        }
        wt.shape_ = HuffmanShape::from_lengths(lens, present);
        wt.build_nodes();
        uint64_t nbv = r.get();
        if (nbv != wt.internal_count_) throw Error(Errc::LengthMismatch, "wavelet node count mismatch");
        wt.bvs_.reserve(nbv);
        for (uint64_t v = 0; v < nbv; ++v) wt.bvs_.push_back(BitVector::load(r));
        for (unsigned c : wt.shape_.symbols()) {
            uint64_t i = wt.n_;
            int32_t v = 0;
            for (unsigned d = 0; d < wt.shape_.length(static_cast<uint8_t>(c)); ++d) {
                bool bit = wt.shape_.bit(static_cast<uint8_t>(c), d);
                i = wt.bvs_[wt.nodes_[v].bv].rank(bit, i);
                v = wt.nodes_[v].child[bit];
            }
            wt.counts_[c] = i;
        }
        return wt;
    }

private:
    // Builds the node array in preorder from the canonical code. Internal
    // nodes get bitvector indices in the same preorder.
    void build_nodes() {
        nodes_.clear();
        internal_count_ = 0;
        leaf_of_.fill(-1);
        const auto& syms = shape_.symbols();
        build_range(syms, 0, syms.size(), 0, -1);
    }

    int32_t build_range(const std::vector<unsigned>& syms, size_t lo, size_t hi, unsigned depth, int32_t parent) {
        int32_t v = static_cast<int32_t>(nodes_.size());
        nodes_.push_back(Node{});
        nodes_[v].parent = parent;
        if (hi - lo == 1 && shape_.length(static_cast<uint8_t>(syms[lo])) == depth) {
            nodes_[v].symbol = static_cast<int32_t>(syms[lo]);
            leaf_of_[syms[lo]] = v;
            return v;
        }
        nodes_[v].bv = static_cast<int32_t>(internal_count_++);
        size_t mid = lo;
        while (mid < hi && !shape_.bit(static_cast<uint8_t>(syms[mid]), depth)) ++mid;
        if (mid == lo || mid == hi) throw Error(Errc::LengthMismatch, "code is not prefix-free and complete");
        int32_t left = build_range(syms, lo, mid, depth + 1, v);
        int32_t right = build_range(syms, mid, hi, depth + 1, v);
        nodes_[v].child = {left, right};
        return v;
    }

    uint64_t n_ = 0;
    std::array<uint64_t, 256> counts_{};
    HuffmanShape shape_;
    std::vector<Node> nodes_;
    std::array<int32_t, 256> leaf_of_{};
    size_t internal_count_ = 0;
    std::vector<BitVector> bvs_;
};

}  // namespace fmgram
