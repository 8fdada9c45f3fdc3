#pragma once

#include <algorithm>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace bnb {

using Word = std::uint64_t;

constexpr std::size_t word_count(std::size_t bits) { return (bits + 63) / 64; }

// Word-span primitives. The hot loops of the miners and scorers run on flat
// word arrays, so these take spans rather than Bitset objects.

inline bool words_subset(std::span<const Word> a, std::span<const Word> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] & ~b[i]) return false;
    }
    return true;
}

inline bool words_intersect(std::span<const Word> a, std::span<const Word> b) {
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i] & b[i]) return true;
    }
    return false;
}

inline std::size_t words_and_count(std::span<const Word> a, std::span<const Word> b) {
    std::size_t n = 0;
    for (std::size_t i = 0; i < a.size(); ++i) n += std::popcount(a[i] & b[i]);
    return n;
}

inline bool words_test(std::span<const Word> w, std::size_t bit) {
    return (w[bit >> 6] >> (bit & 63)) & 1U;
}

/// Fixed-size dynamic bitset used for item masks and transaction-id sets.
class Bitset {
public:
    Bitset() = default;
    explicit Bitset(std::size_t bits) : bits_(bits), words_(word_count(bits), 0) {}

    std::size_t size() const { return bits_; }

    void set(std::size_t i) { words_[i >> 6] |= Word{1} << (i & 63); }
    void reset(std::size_t i) { words_[i >> 6] &= ~(Word{1} << (i & 63)); }
    bool test(std::size_t i) const { return (words_[i >> 6] >> (i & 63)) & 1U; }

    void set_all() {
        std::fill(words_.begin(), words_.end(), ~Word{0});
        trim();
    }

    std::size_t count() const {
        std::size_t n = 0;
        for (Word w : words_) n += std::popcount(w);
        return n;
    }

    bool none() const {
        return std::all_of(words_.begin(), words_.end(), [](Word w) { return w == 0; });
    }

    bool is_subset_of(const Bitset& other) const { return words_subset(words_, other.words_); }
    bool intersects(const Bitset& other) const { return words_intersect(words_, other.words_); }

    Bitset& operator&=(const Bitset& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= other.words_[i];
        return *this;
    }

    Bitset& operator|=(const Bitset& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] |= other.words_[i];
        return *this;
    }

    /// this &= ~other
    Bitset& subtract(const Bitset& other) {
        for (std::size_t i = 0; i < words_.size(); ++i) words_[i] &= ~other.words_[i];
        return *this;
    }

    friend Bitset operator&(Bitset a, const Bitset& b) { return a &= b; }

    friend bool operator==(const Bitset&, const Bitset&) = default;

    std::span<const Word> words() const { return words_; }
    std::span<Word> words() { return words_; }

    /// Calls `fn(index)` for every set bit in ascending order.
    template <typename Fn>
    void for_each(Fn&& fn) const {
        for (std::size_t w = 0; w < words_.size(); ++w) {
            Word bits = words_[w];
            while (bits) {
                const int b = std::countr_zero(bits);
                fn(w * 64 + static_cast<std::size_t>(b));
                bits &= bits - 1;
            }
        }
    }

private:
    void trim() {
        if (bits_ % 64 != 0 && !words_.empty()) words_.back() &= (Word{1} << (bits_ % 64)) - 1;
    }

    std::size_t bits_ = 0;
    std::vector<Word> words_;
};

inline std::size_t intersection_count(const Bitset& a, const Bitset& b) {
    return words_and_count(a.words(), b.words());
}

}  // namespace bnb
