#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <utility>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/error.hpp"
#include "evs/moments.hpp"

namespace evs {

/// C(x) = log2(1 + x), bits per channel use.
inline double gaussian_capacity(double snr) noexcept { return std::log2(1.0 + snr); }

/// Single-user ergodic waterfilling policy P(g) = max(0, nu - 1/g).
///
/// The water level is kept split as nu = active_power + reference_inverse_gain,
/// where reference_inverse_gain is the mean of 1/g over the active states and
/// active_power is the budget spread over them. Evaluating the policy from the
/// split form returns exactly the budget on a non-fading link.
struct WaterfillingPolicy {
    int user = 0;
    double budget = 0.0;
    double water_level = 0.0;
    /// Empirical E[C(g P(g))] over the solving gains.
    double capacity = 0.0;
    double active_power = 0.0;
    double reference_inverse_gain = 0.0;
    int iterations = 0;
    /// Fingerprint of the batch the policy was solved on (0 if solved on a bare list).
    std::uint64_t batch_fingerprint = 0;
};

/// Power allotted in a state with direct gain g; 0 for g == 0 or below cutoff.
inline double policy_power(const WaterfillingPolicy& policy, double gain) noexcept {
    if (!(gain > 0.0) || policy.budget == 0.0) return 0.0;
    return std::max(0.0, policy.active_power + (policy.reference_inverse_gain - 1.0 / gain));
}

struct WaterfillingOptions {
    double tol = 1e-10;
    int max_iterations = 200;
};

/// Sorted inverse gains and prefix sums of one direct link, reusable across
/// budgets. Solves (1/n) sum_i max(0, nu - 1/g_i) = budget for nu by bisection.
///
/// The residual is evaluated in O(log n). Once the bracket meets tolerance, nu
/// is snapped to the exact root of the linear piece it landed on when that root
/// is at least as accurate.
class WaterfillingSolver {
public:
    explicit WaterfillingSolver(std::vector<double> direct_gains) : gains_(std::move(direct_gains)) {
        if (gains_.empty()) throw ValidationError("waterfilling needs at least one gain sample");
        inverse_.reserve(gains_.size());
        for (double g : gains_) {
            if (!std::isfinite(g) || g < 0.0) throw ValidationError("direct-link gains must be finite and >= 0");
            if (g > 0.0) inverse_.push_back(1.0 / g);
        }
        if (inverse_.empty()) throw NoSignalError("all direct-link gains are zero; no power can be delivered");
        std::sort(inverse_.begin(), inverse_.end());
        prefix_.assign(inverse_.size() + 1, 0.0L);
        for (std::size_t i = 0; i < inverse_.size(); ++i) prefix_[i + 1] = prefix_[i] + inverse_[i];
    }

    [[nodiscard]] std::size_t samples() const noexcept { return gains_.size(); }

    /// Skipping the capacity leaves policy.capacity at 0 and saves a pass of logs.
    [[nodiscard]] WaterfillingPolicy solve(double budget, WaterfillingOptions options = {},
                                           bool with_capacity = true) const {
        if (!std::isfinite(budget) || budget < 0.0) throw ValidationError("waterfilling budget must be finite and >= 0");
        if (!(options.tol > 0.0)) throw ValidationError("waterfilling tolerance must be > 0");
        WaterfillingPolicy policy;
        policy.budget = budget;
        if (budget == 0.0) return policy;

        const std::size_t n = gains_.size();
        const std::size_t positive = inverse_.size();
        auto active_count = [&](double nu) {
            return static_cast<std::size_t>(std::lower_bound(inverse_.begin(), inverse_.end(), nu) - inverse_.begin());
        };
        auto residual = [&](double nu) {
            const std::size_t m = active_count(nu);
            const long double used = static_cast<long double>(m) * nu - prefix_[m];
            return static_cast<double>(used / static_cast<long double>(n) - budget);
        };

        const double target = options.tol * std::max(1.0, budget);
        double lo = 0.0;
        // With some zero gains only `positive` of n states can absorb power, so the
        // bracket must reach budget * n / positive above the largest cutoff.
        double hi = budget * (static_cast<double>(n) / static_cast<double>(positive)) + inverse_.back();
        double nu = hi;
        double r = residual(hi);
        int it = 0;
        bool converged = std::abs(r) <= target;
        while (!converged && it < options.max_iterations) {
            ++it;
            nu = 0.5 * (lo + hi);
            r = residual(nu);
            if (std::abs(r) <= target) {
                converged = true;
            } else if (r < 0.0) {
                lo = nu;
            } else {
                hi = nu;
            }
        }
        if (!converged)
            throw ConvergenceError("waterfilling bisection did not reach tolerance in " +
                                   std::to_string(options.max_iterations) + " iterations");

        const std::size_t m = active_count(nu);
        double reference = 0.0;
        double share = nu;
        if (m > 0) {
            reference = inverse_[0] == inverse_[m - 1] ? inverse_[0] : static_cast<double>(prefix_[m] / m);
            share = budget * (static_cast<double>(n) / static_cast<double>(m));
            const double snapped = share + reference;
            if (active_count(snapped) == m && std::abs(residual(snapped)) <= std::abs(r)) {
                nu = snapped;
            } else {
                share = nu - reference;
            }
        }

        policy.water_level = nu;
        policy.active_power = share;
        policy.reference_inverse_gain = reference;
        policy.iterations = it;

        if (with_capacity) {
            RunningMoments cap;
            for (double g : gains_) cap.push(gaussian_capacity(g * policy_power(policy, g)));
            policy.capacity = cap.mean;
        }
        return policy;
    }

private:
    std::vector<double> gains_;
    std::vector<double> inverse_;
    std::vector<long double> prefix_;
};

inline WaterfillingPolicy solve_waterfilling(std::span<const double> direct_gains, double budget,
                                             WaterfillingOptions options = {}) {
    if (!std::isfinite(budget) || budget < 0.0) throw ValidationError("waterfilling budget must be finite and >= 0");
    return WaterfillingSolver(std::vector<double>(direct_gains.begin(), direct_gains.end())).solve(budget, options);
}

/// One solver per user of a batch; policies come out stamped with the batch
/// fingerprint.
class BatchWaterfilling {
public:
    explicit BatchWaterfilling(const FadingBatch& batch) : k_(batch.k_users), fingerprint_(batch.fingerprint) {
        solvers_.reserve(k_);
        for (int k = 0; k < k_; ++k) solvers_.emplace_back(batch.direct_gains(k));
    }

    [[nodiscard]] std::vector<WaterfillingPolicy> policies(std::span<const double> budgets,
                                                           WaterfillingOptions options = {},
                                                           bool with_capacity = true) const {
        if (budgets.size() != static_cast<std::size_t>(k_))
            throw ValidationError("need one budget per user: expected " + std::to_string(k_) + ", got " +
                                  std::to_string(budgets.size()));
        std::vector<WaterfillingPolicy> out;
        out.reserve(budgets.size());
        for (int k = 0; k < k_; ++k) {
            WaterfillingPolicy p = solvers_[k].solve(budgets[k], options, with_capacity);
            p.user = k;
            p.batch_fingerprint = fingerprint_;
            out.push_back(p);
        }
        return out;
    }

private:
    int k_;
    std::uint64_t fingerprint_;
    std::vector<WaterfillingSolver> solvers_;
};

/// Solves every user's policy on its own direct link of `batch` and stamps the
/// batch fingerprint. budgets.size() must equal K.
inline std::vector<WaterfillingPolicy> solve_policies(const FadingBatch& batch, std::span<const double> budgets,
                                                      WaterfillingOptions options = {}) {
    if (budgets.size() != static_cast<std::size_t>(batch.k_users))
        throw ValidationError("need one budget per user: expected " + std::to_string(batch.k_users) + ", got " +
                              std::to_string(budgets.size()));
    return BatchWaterfilling(batch).policies(budgets, options);
}

} // namespace evs
