#pragma once

// Reference computations for the tests. Each one re-derives its quantity from
// definitions with plain loops and long double sums, sharing no code path with
// the library beyond the Subset bitmask type.

#include <cmath>
#include <cstdint>
#include <map>
#include <random>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/polymatroid.hpp"

namespace oracle {

inline double log2_1p(long double x) { return static_cast<double>(std::log2(1.0L + x)); }

/// Empirical f_j(S) straight from the definition, for given per-sample powers.
/// power[s * K + m] is the power of user m in sample s.
inline std::vector<std::vector<double>> set_functions(const evs::FadingBatch& b, const std::vector<double>& power) {
    const int k = b.k_users;
    std::vector<std::vector<double>> out(k, std::vector<double>((1u << k) - 1));
    for (int j = 0; j < k; ++j) {
        for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
            long double total = 0.0L;
            for (std::size_t s = 0; s < b.n_samples; ++s) {
                long double rx = 0.0L;
                for (int m = 0; m < k; ++m)
                    if (mask & (1u << m)) rx += static_cast<long double>(b.gain(s, j, m)) * power[s * k + m];
                total += std::log2(1.0L + rx);
            }
            out[j][mask - 1] = static_cast<double>(total / b.n_samples);
        }
    }
    return out;
}

/// Water level minimising |mean max(0, nu - 1/g) - budget| on a grid of step
/// `step`, using atom counts of the gain list.
struct GridWaterfill {
    double nu = 0.0;
    double capacity = 0.0;
};

inline GridWaterfill grid_waterfill(const std::vector<double>& gains, double budget, double step) {
    std::map<double, std::size_t> atoms;
    for (double g : gains) ++atoms[g];
    const long double n = gains.size();
    auto used = [&](long double nu) {
        long double t = 0.0L;
        for (const auto& [g, c] : atoms)
            if (g > 0.0) t += c * std::max(0.0L, nu - 1.0L / g);
        return t / n;
    };
    double max_inv = 0.0;
    std::size_t positive = 0;
    for (const auto& [g, c] : atoms)
        if (g > 0.0) {
            max_inv = std::max(max_inv, 1.0 / g);
            positive += c;
        }
    const double hi = budget * static_cast<double>(n / positive) + max_inv;
    GridWaterfill best;
    long double best_err = INFINITY;
    const std::size_t steps = static_cast<std::size_t>(hi / step) + 1;
    for (std::size_t i = 0; i <= steps; ++i) {
        const long double nu = i * static_cast<long double>(step);
        const long double err = std::fabs(used(nu) - budget);
        if (err < best_err) {
            best_err = err;
            best.nu = static_cast<double>(nu);
        }
    }
    long double cap = 0.0L;
    for (const auto& [g, c] : atoms)
        if (g > 0.0) cap += c * std::log2(1.0L + g * std::max(0.0L, best.nu - 1.0L / g));
    best.capacity = static_cast<double>(cap / n);
    return best;
}

/// Every constraint R(S) <= f_j(S), checked one by one.
inline bool exhaustive_member(const std::vector<evs::SetFunction>& fs, const std::vector<double>& r, double tol) {
    const int k = fs.front().k_users();
    for (const auto& f : fs)
        for (std::uint32_t mask = 1; mask < (1u << k); ++mask) {
            double sum = 0.0;
            for (int m = 0; m < k; ++m)
                if (mask & (1u << m)) sum += r[m];
            if (sum > f(evs::Subset{mask}) + tol) return false;
        }
    return true;
}

/// Random normalised monotone submodular function: nonnegative mixture of
/// concave functions of nonnegative modular functions.
inline evs::SetFunction random_submodular(int k, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int terms = 1 + static_cast<int>(rng() % 4);
    std::vector<std::vector<double>> w(terms, std::vector<double>(k));
    std::vector<double> scale(terms);
    std::vector<int> shape(terms);
    for (int t = 0; t < terms; ++t) {
        for (auto& x : w[t]) x = 3.0 * u(rng);
        scale[t] = 0.5 + 2.0 * u(rng);
        shape[t] = static_cast<int>(rng() % 3);
    }
    return evs::SetFunction::from(k, [&](evs::Subset s) {
        double total = 0.0;
        for (int t = 0; t < terms; ++t) {
            double x = 0.0;
            for (int m : s.members()) x += w[t][m];
            switch (shape[t]) {
                case 0: total += scale[t] * std::log2(1.0 + x); break;
                case 1: total += scale[t] * std::sqrt(x); break;
                default: total += scale[t] * std::min(x, 2.0); break;
            }
        }
        return total;
    });
}

} // namespace oracle
