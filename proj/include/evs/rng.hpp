#pragma once

#include <cstdint>
#include <string_view>

namespace evs {

/// Counter-based generator built on the SplitMix64 output function.
///
/// Draw number `counter` under `seed` is mix(seed + (counter + 1) * gamma), so any
/// draw can be produced independently of every other one. This is what lets
/// batch sampling be split across workers without changing a single bit.
class CounterRng {
public:
    static constexpr std::string_view algorithm = "splitmix64-counter";

    explicit constexpr CounterRng(std::uint64_t seed) noexcept : seed_(seed) {}

    [[nodiscard]] constexpr std::uint64_t bits(std::uint64_t counter) const noexcept {
        std::uint64_t z = seed_ + (counter + 1) * 0x9E3779B97F4A7C15ULL;
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
        return z ^ (z >> 31);
    }

    /// Uniform on [0, 1) with 53 random bits.
    [[nodiscard]] constexpr double uniform(std::uint64_t counter) const noexcept {
        return static_cast<double>(bits(counter) >> 11) * 0x1.0p-53;
    }

    /// Uniform on (0, 1]; safe to pass to log().
    [[nodiscard]] constexpr double uniform_positive(std::uint64_t counter) const noexcept {
        return static_cast<double>((bits(counter) >> 11) + 1) * 0x1.0p-53;
    }

    [[nodiscard]] constexpr std::uint64_t seed() const noexcept { return seed_; }

private:
    std::uint64_t seed_;
};

} // namespace evs
