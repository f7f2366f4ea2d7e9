// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>

namespace pulseg2 {

/// Counter-based random stream (SplitMix64). Streams are derived from
/// (seed, domain, index) so that every pulse, window and bootstrap replica
/// gets its own reproducible sequence regardless of how the work is chunked
/// across threads.
class RngStream {
  public:
    enum class Domain : std::uint64_t {
        pulse = 1,
        window = 2,
        bootstrap = 3,
        generic = 4,
    };

    explicit RngStream(std::uint64_t state) : state_(state) {}

    static RngStream derive(std::uint64_t seed, Domain domain, std::uint64_t index) {
        // Two mixing rounds decorrelate neighbouring (seed, index) keys.
        std::uint64_t h = mix(seed ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(domain)));
        h = mix(h ^ index);
        return RngStream(h);
    }

    std::uint64_t next_u64() {
        state_ += 0x9E3779B97F4A7C15ULL;
        return mix(state_);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double next_double() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    /// Uniform integer in [0, bound). Rejection-free modulo is fine here:
    /// bound is tiny (ports, blocks) relative to 2^64, so bias is < 2^-40.
    std::uint64_t next_below(std::uint64_t bound) {
        return next_u64() % bound;
    }

  private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    std::uint64_t state_;
};

}  // namespace pulseg2
