#pragma once

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

namespace evs {

/// Largest supported number of users; 2^20 - 1 subset values per set function.
inline constexpr int max_users = 20;

/// Subset of users {0..K-1} stored as a bitmask. Users are 0-based in code and
/// printed 1-based.
class Subset {
public:
    constexpr Subset() noexcept = default;
    explicit constexpr Subset(std::uint32_t bits) noexcept : bits_(bits) {}

    static constexpr Subset empty() noexcept { return Subset{}; }
    static constexpr Subset singleton(int user) noexcept { return Subset{1u << user}; }
    static constexpr Subset full(int k) noexcept { return Subset{(1u << k) - 1u}; }

    [[nodiscard]] constexpr std::uint32_t bits() const noexcept { return bits_; }
    [[nodiscard]] constexpr bool is_empty() const noexcept { return bits_ == 0; }
    [[nodiscard]] constexpr int size() const noexcept { return std::popcount(bits_); }
    [[nodiscard]] constexpr bool contains(int user) const noexcept { return (bits_ >> user) & 1u; }
    [[nodiscard]] constexpr bool is_subset_of(Subset other) const noexcept {
        return (bits_ & ~other.bits_) == 0;
    }
    [[nodiscard]] constexpr bool disjoint(Subset other) const noexcept {
        return (bits_ & other.bits_) == 0;
    }
    [[nodiscard]] constexpr Subset with(int user) const noexcept { return Subset{bits_ | (1u << user)}; }
    [[nodiscard]] constexpr Subset without(int user) const noexcept { return Subset{bits_ & ~(1u << user)}; }
    /// Lowest member; undefined on the empty set.
    [[nodiscard]] constexpr int lowest() const noexcept { return std::countr_zero(bits_); }

    /// Position of a nonempty subset in a dense value array of length 2^K - 1.
    [[nodiscard]] constexpr std::size_t index() const noexcept { return bits_ - 1u; }

    [[nodiscard]] std::vector<int> members() const {
        std::vector<int> out;
        for (std::uint32_t b = bits_; b != 0; b &= b - 1) out.push_back(std::countr_zero(b));
        return out;
    }

    /// "1,3" style key with 1-based user indices in increasing order.
    [[nodiscard]] std::string key() const {
        std::string out;
        for (int m : members()) {
            if (!out.empty()) out += ',';
            out += std::to_string(m + 1);
        }
        return out;
    }

    friend constexpr Subset operator|(Subset a, Subset b) noexcept { return Subset{a.bits_ | b.bits_}; }
    friend constexpr Subset operator&(Subset a, Subset b) noexcept { return Subset{a.bits_ & b.bits_}; }
    friend constexpr bool operator==(Subset a, Subset b) noexcept = default;

private:
    std::uint32_t bits_ = 0;
};

/// Number of nonempty subsets of a K-element ground set.
constexpr std::size_t nonempty_subset_count(int k) noexcept {
    return (std::size_t{1} << k) - 1;
}

/// Visits every nonempty subset of {0..K-1} in increasing bitmask order.
template <class Fn>
constexpr void for_each_nonempty_subset(int k, Fn&& fn) {
    const std::uint32_t end = 1u << k;
    for (std::uint32_t b = 1; b < end; ++b) fn(Subset{b});
}

/// Parses a "1,3" key back into a subset of {0..K-1}. Returns false on
/// malformed keys, out-of-range users, or the empty key.
inline bool parse_subset_key(const std::string& key, int k, Subset& out) {
    std::uint32_t bits = 0;
    std::size_t pos = 0;
    while (pos < key.size()) {
        std::size_t next = key.find(',', pos);
        if (next == std::string::npos) next = key.size();
        const std::string token = key.substr(pos, next - pos);
        if (token.empty()) return false;
        int value = 0;
        for (char c : token) {
            if (c < '0' || c > '9') return false;
            value = value * 10 + (c - '0');
            if (value > k) return false;
        }
        if (value < 1) return false;
        bits |= 1u << (value - 1);
        pos = next + 1;
        if (next == key.size()) break;
    }
    if (bits == 0) return false;
    out = Subset{bits};
    return true;
}

} // namespace evs
