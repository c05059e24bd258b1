#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "evs/error.hpp"
#include "evs/parallel.hpp"
#include "evs/rng.hpp"
#include "evs/subset.hpp"

namespace evs {

/// Deterministic power gain |h|^2 = gain.
struct ConstantGain {
    double gain = 0.0;
};

/// |h|^2 exponentially distributed with the given mean, i.e. h ~ CN(0, mean).
struct RayleighPower {
    double mean = 1.0;
};

/// Finite-support power gain: gains[i] with probability probs[i].
struct DiscreteGain {
    std::vector<double> gains;
    std::vector<double> probs;
};

using EntrySpec = std::variant<ConstantGain, RayleighPower, DiscreteGain>;

inline bool is_constant(const EntrySpec& e) noexcept {
    return std::holds_alternative<ConstantGain>(e);
}

inline std::string entry_name(int row, int col) {
    return "entry (" + std::to_string(row + 1) + "," + std::to_string(col + 1) + ")";
}

/// Throws ValidationError naming `where` if the spec can emit a negative or
/// non-finite gain, or if a discrete law is not a probability vector.
inline void validate_entry(const EntrySpec& spec, const std::string& where) {
    if (const auto* c = std::get_if<ConstantGain>(&spec)) {
        if (!std::isfinite(c->gain) || c->gain < 0.0)
            throw ValidationError(where + ": constant gain must be finite and >= 0");
    } else if (const auto* r = std::get_if<RayleighPower>(&spec)) {
        if (!std::isfinite(r->mean) || r->mean <= 0.0)
            throw ValidationError(where + ": Rayleigh mean power must be finite and > 0");
    } else {
        const auto& d = std::get<DiscreteGain>(spec);
        if (d.gains.empty() || d.gains.size() != d.probs.size())
            throw ValidationError(where + ": discrete law needs matching, nonempty gain and probability lists");
        double total = 0.0;
        for (std::size_t i = 0; i < d.gains.size(); ++i) {
            if (!std::isfinite(d.gains[i]) || d.gains[i] < 0.0)
                throw ValidationError(where + ": discrete gain must be finite and >= 0");
            if (!std::isfinite(d.probs[i]) || d.probs[i] < 0.0)
                throw ValidationError(where + ": discrete probability must be in [0, 1]");
            total += d.probs[i];
        }
        if (std::abs(total - 1.0) > 1e-12)
            throw ValidationError(where + ": discrete probabilities sum to " + std::to_string(total) + ", not 1");
    }
}

/// Joint law of the K x K power-gain matrix; entry (j, m) is the gain from
/// transmitter m to receiver j. Entries are independent.
class ChannelModel {
public:
    ChannelModel(int k_users, std::vector<EntrySpec> entries)
        : k_(k_users), entries_(std::move(entries)) {
        if (k_ < 2 || k_ > max_users)
            throw ValidationError("k_users must be in [2, " + std::to_string(max_users) + "], got " + std::to_string(k_));
        if (entries_.size() != static_cast<std::size_t>(k_) * static_cast<std::size_t>(k_))
            throw ValidationError("channel needs " + std::to_string(k_ * k_) + " entries (K x K, row-major), got " +
                                  std::to_string(entries_.size()));
        for (int j = 0; j < k_; ++j)
            for (int m = 0; m < k_; ++m) validate_entry(entry(j, m), entry_name(j, m));
    }

    /// Constant-gain model from a row-major K x K matrix.
    static ChannelModel constant(int k_users, std::span<const double> gains) {
        std::vector<EntrySpec> entries;
        entries.reserve(gains.size());
        for (double g : gains) entries.emplace_back(ConstantGain{g});
        return ChannelModel(k_users, std::move(entries));
    }

    [[nodiscard]] int k_users() const noexcept { return k_; }
    [[nodiscard]] const EntrySpec& entry(int row, int col) const { return entries_[row * k_ + col]; }
    [[nodiscard]] const std::vector<EntrySpec>& entries() const noexcept { return entries_; }

    /// True when every entry is constant, so one sample describes the law exactly.
    [[nodiscard]] bool is_deterministic() const noexcept {
        for (const auto& e : entries_)
            if (!is_constant(e)) return false;
        return true;
    }

private:
    int k_;
    std::vector<EntrySpec> entries_;
};

/// n i.i.d. realizations of the power-gain matrix, stored sample-major then
/// row-major: gains[(s * K + j) * K + m].
struct FadingBatch {
    int k_users = 0;
    std::size_t n_samples = 0;
    std::uint64_t seed = 0;
    std::vector<double> gains;
    /// Content hash of (K, n, seed, gains); ties policies to this batch.
    std::uint64_t fingerprint = 0;

    [[nodiscard]] double gain(std::size_t sample, int row, int col) const noexcept {
        return gains[(sample * k_users + row) * k_users + col];
    }

    [[nodiscard]] std::span<const double> sample(std::size_t s) const noexcept {
        const std::size_t kk = static_cast<std::size_t>(k_users) * k_users;
        return {gains.data() + s * kk, kk};
    }

    /// Per-sample gains of the direct link of `user`.
    [[nodiscard]] std::vector<double> direct_gains(int user) const {
        std::vector<double> out(n_samples);
        for (std::size_t s = 0; s < n_samples; ++s) out[s] = gain(s, user, user);
        return out;
    }
};

namespace detail {

inline std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) noexcept {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t batch_fingerprint(const FadingBatch& b) noexcept {
    std::uint64_t h = 0xCBF29CE484222325ULL;
    const std::uint64_t header[3] = {static_cast<std::uint64_t>(b.k_users), b.n_samples, b.seed};
    h = fnv1a(h, header, sizeof(header));
    return fnv1a(h, b.gains.data(), b.gains.size() * sizeof(double));
}

inline double draw(const EntrySpec& spec, const CounterRng& rng, std::uint64_t counter) {
    if (const auto* c = std::get_if<ConstantGain>(&spec)) return c->gain;
    if (const auto* r = std::get_if<RayleighPower>(&spec)) return -r->mean * std::log(rng.uniform_positive(counter));
    const auto& d = std::get<DiscreteGain>(spec);
    const double u = rng.uniform(counter);
    double cumulative = 0.0;
    for (std::size_t i = 0; i + 1 < d.gains.size(); ++i) {
        cumulative += d.probs[i];
        if (u < cumulative) return d.gains[i];
    }
    return d.gains.back();
}

} // namespace detail

/// Draws n i.i.d. gain matrices. Draw (s, j, m) uses counter s*K*K + j*K + m, so
/// the output depends only on (model, seed, n) and never on `workers`.
inline FadingBatch sample_batch(const ChannelModel& model, std::size_t n_samples, std::uint64_t seed,
                                unsigned workers = 1) {
    if (n_samples < 1) throw ValidationError("n_samples must be >= 1");
    const int k = model.k_users();
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    FadingBatch batch;
    batch.k_users = k;
    batch.n_samples = n_samples;
    batch.seed = seed;
    batch.gains.resize(n_samples * kk);
    const CounterRng rng(seed);
    detail::for_each_chunk(n_samples, workers, [&](std::size_t, std::size_t begin, std::size_t end) {
        for (std::size_t s = begin; s < end; ++s)
            for (std::size_t e = 0; e < kk; ++e)
                batch.gains[s * kk + e] = detail::draw(model.entries()[e], rng, s * kk + e);
    });
    batch.fingerprint = detail::batch_fingerprint(batch);
    return batch;
}

} // namespace evs
