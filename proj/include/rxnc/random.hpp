#pragma once

#include <cstdint>
#include <limits>

#include "rxnc/cipher.hpp"

namespace rxnc {

/// SplitMix64 finalizer; a bijective 64-bit mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

/// Counter-based generator: output j of stream (seed, stream) is a pure
/// function of (seed, stream, j). Independent work items take distinct
/// stream ids, so results never depend on scheduling or worker count.
class CounterRng {
public:
    using result_type = std::uint64_t;

    constexpr CounterRng(std::uint64_t seed, std::uint64_t stream) noexcept
        : key_(mix64(seed ^ mix64(stream ^ 0xD1B54A32D192ED03ULL))) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    constexpr Word word() noexcept { return static_cast<Word>((*this)() >> 48); }
    constexpr Block block() noexcept { return Block::unpack(static_cast<std::uint32_t>((*this)() >> 32)); }
    constexpr MasterKey master_key() noexcept {
        const std::uint64_t v = (*this)();
        return MasterKey{{static_cast<Word>(v), static_cast<Word>(v >> 16), static_cast<Word>(v >> 32),
                          static_cast<Word>(v >> 48)}};
    }
    constexpr int bit() noexcept { return static_cast<int>((*this)() >> 63); }

    /// Uniform in [0, bound) by rejection; bound > 0.
    constexpr std::uint64_t below(std::uint64_t bound) noexcept {
        const std::uint64_t limit = max() - max() % bound;
        std::uint64_t v;
        do {
            v = (*this)();
        } while (v >= limit);
        return v % bound;
    }

    /// Uniform in [0, 1) with 53 random bits.
    constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

/// Derives a child seed for a named sub-task from a top-level seed.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return mix64(seed ^ mix64(tag + 0x632BE59BD9B4E019ULL));
}

}  // namespace rxnc
