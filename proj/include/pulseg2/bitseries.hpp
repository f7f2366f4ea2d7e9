// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <bit>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace pulseg2 {

/// Packed binary click sequence. One bit per detection window; popcount-based
/// reductions keep estimators cheap even for 10^8-window runs.
class BitSeries {
  public:
    BitSeries() = default;
    explicit BitSeries(std::size_t size) : size_(size), words_((size + 63) / 64, 0) {}

    std::size_t size() const { return size_; }

    bool get(std::size_t i) const {
        return (words_[i >> 6] >> (i & 63)) & 1u;
    }

    void set(std::size_t i, bool value = true) {
        if (value)
            words_[i >> 6] |= (std::uint64_t{1} << (i & 63));
        else
            words_[i >> 6] &= ~(std::uint64_t{1} << (i & 63));
    }

    /// Number of set bits in [0, size).
    std::uint64_t count() const {
        std::uint64_t n = 0;
        for (std::uint64_t w : words_) n += std::popcount(w);
        return n;
    }

    /// Number of set bits in [begin, end).
    std::uint64_t count_range(std::size_t begin, std::size_t end) const {
        std::uint64_t n = 0;
        for (std::size_t i = begin; i < end; ++i) n += get(i) ? 1 : 0;
        return n;
    }

    /// Σ a_i (self AND other), vectorizable word-at-a-time.
    std::uint64_t count_and(const BitSeries& other) const {
        std::uint64_t n = 0;
        for (std::size_t w = 0; w < words_.size(); ++w)
            n += std::popcount(words_[w] & other.words_[w]);
        return n;
    }

    std::uint64_t count_and(const BitSeries& b, const BitSeries& c) const {
        std::uint64_t n = 0;
        for (std::size_t w = 0; w < words_.size(); ++w)
            n += std::popcount(words_[w] & b.words_[w] & c.words_[w]);
        return n;
    }

    bool operator==(const BitSeries& other) const = default;

    const std::vector<std::uint64_t>& words() const { return words_; }

  private:
    std::size_t size_ = 0;
    std::vector<std::uint64_t> words_;
};

}  // namespace pulseg2
