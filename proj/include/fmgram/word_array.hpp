// Word storage that is either owned (freshly built) or borrowed from a
// memory-mapped index file, plus the word-stream format every succinct
// structure serializes into.
#pragma once

#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <vector>

#include "common.hpp"

namespace fmgram {

class WordArray {
public:
    WordArray() = default;

    explicit WordArray(std::vector<uint64_t> words)
        : owned_(std::move(words)), data_(owned_.data()), size_(owned_.size()) {}

    static WordArray borrow(std::span<const uint64_t> view) {
        WordArray w;
        w.data_ = view.data();
        w.size_ = view.size();
        return w;
    }

    WordArray(const WordArray& other) : owned_(other.owned_) { rebind(other); }
    WordArray& operator=(const WordArray& other) {
        if (this != &other) {
            owned_ = other.owned_;
            rebind(other);
        }
        return *this;
    }
    WordArray(WordArray&& other) noexcept
        : owned_(std::move(other.owned_)), data_(other.data_), size_(other.size_) {
        other.data_ = nullptr;
        other.size_ = 0;
    }
    WordArray& operator=(WordArray&& other) noexcept {
        owned_ = std::move(other.owned_);
        data_ = other.data_;
        size_ = other.size_;
        other.data_ = nullptr;
        other.size_ = 0;
        return *this;
    }

    uint64_t operator[](size_t i) const { return data_[i]; }
    const uint64_t* data() const { return data_; }
    size_t size() const { return size_; }
    bool owned() const { return !owned_.empty() || size_ == 0; }
    std::span<const uint64_t> span() const { return {data_, size_}; }

private:
    void rebind(const WordArray& other) {
        data_ = other.owned_.empty() ? other.data_ : owned_.data();
        size_ = other.size_;
    }

    std::vector<uint64_t> owned_;
    const uint64_t* data_ = nullptr;
    size_t size_ = 0;
};

/// Appends length-prefixed word arrays and scalar words.
class WordWriter {
public:
    void put(uint64_t w) { words_.push_back(w); }
    void put_array(std::span<const uint64_t> a) {
        words_.push_back(a.size());
        words_.insert(words_.end(), a.begin(), a.end());
    }
    std::vector<uint64_t>& words() { return words_; }

    std::string bytes() const {
        return std::string(reinterpret_cast<const char*>(words_.data()), words_.size() * 8);
    }

private:
    std::vector<uint64_t> words_;
};

/// Reads back what WordWriter produced; arrays are borrowed, not copied.
class WordReader {
public:
    explicit WordReader(std::span<const uint64_t> words) : words_(words) {}

    uint64_t get() {
        need(1);
        return words_[pos_++];
    }
    WordArray get_array() {
        uint64_t len = get();
        need(len);
        auto view = words_.subspan(pos_, len);
        pos_ += len;
        return WordArray::borrow(view);
    }
    bool done() const { return pos_ == words_.size(); }

private:
    void need(uint64_t k) const {
        if (k > words_.size() - pos_) throw Error(Errc::LengthMismatch, "truncated structure");
    }

    std::span<const uint64_t> words_;
    size_t pos_ = 0;
};

inline uint64_t read_bits(const uint64_t* words, uint64_t pos, unsigned len) {
    if (len == 0) return 0;
    uint64_t w = pos >> 6;
    unsigned off = pos & 63;
    uint64_t v = words[w] >> off;
    if (off + len > 64) v |= words[w + 1] << (64 - off);
    return len == 64 ? v : v & ((uint64_t{1} << len) - 1);
}

inline void write_bits(uint64_t* words, uint64_t pos, unsigned len, uint64_t value) {
    if (len == 0) return;
    uint64_t mask = len == 64 ? ~uint64_t{0} : (uint64_t{1} << len) - 1;
    value &= mask;
    uint64_t w = pos >> 6;
    unsigned off = pos & 63;
    words[w] = (words[w] & ~(mask << off)) | (value << off);
    if (off + len > 64) {
        unsigned spill = off + len - 64;
        uint64_t hi_mask = (uint64_t{1} << spill) - 1;
        words[w + 1] = (words[w + 1] & ~hi_mask) | (value >> (64 - off));
    }
}

/// Fixed-width packed unsigned integers.
class PackedInts {
public:
    PackedInts() = default;
    PackedInts(uint64_t size, unsigned width)
        : size_(size), width_(width), words_(std::vector<uint64_t>(word_count(size, width), 0)) {}

    uint64_t size() const { return size_; }
    unsigned width() const { return width_; }

    uint64_t operator[](uint64_t i) const { return read_bits(words_.data(), i * width_, width_); }

    /// Calls f(value) for entries [begin, end) in order. Needs width <= 56.
    template <class F>
    void for_range(uint64_t begin, uint64_t end, F&& f) const {
        const auto* bytes = reinterpret_cast<const unsigned char*>(words_.data());
        const uint64_t mask = (uint64_t{1} << width_) - 1;
        for (uint64_t pos = begin * width_; begin < end; ++begin, pos += width_) {
            uint64_t v;
            std::memcpy(&v, bytes + (pos >> 3), sizeof v);
            f((v >> (pos & 7)) & mask);
        }
    }

    // Only valid on owned storage, before the array is shared. Writers to
    // distinct indices that share a word must be serialized by the caller.
    void set(uint64_t i, uint64_t v) {
        write_bits(const_cast<uint64_t*>(words_.data()), i * width_, width_, v);
    }

    uint64_t stored_bits() const { return words_.size() * 64 + 128; }

    void save(WordWriter& w) const {
        w.put(size_);
        w.put(width_);
        w.put_array(words_.span());
    }
    static PackedInts load(WordReader& r) {
        PackedInts p;
        p.size_ = r.get();
        p.width_ = static_cast<unsigned>(r.get());
        p.words_ = r.get_array();
        if (p.width_ > 64 || p.words_.size() < word_count(p.size_, p.width_))
            throw Error(Errc::LengthMismatch, "packed array shorter than declared");
        return p;
    }

private:
    static uint64_t word_count(uint64_t size, unsigned width) { return (size * width + 63) / 64 + 1; }

    uint64_t size_ = 0;
    unsigned width_ = 0;
    WordArray words_;
};

}  // namespace fmgram
