#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace evs {

/// Running mean and second central moment (Welford), mergeable by Chan's rule.
///
/// A stream of identical values keeps mean == value and m2 == 0 exactly, which is
/// what makes zero-variance batches report closed-form values bit-for-bit.
struct RunningMoments {
    std::uint64_t count = 0;
    double mean = 0.0;
    double m2 = 0.0;

    void push(double x) noexcept {
        ++count;
        const double delta = x - mean;
        mean += delta / static_cast<double>(count);
        m2 += delta * (x - mean);
    }

    void merge(const RunningMoments& other) noexcept {
        if (other.count == 0) return;
        if (count == 0) {
            *this = other;
            return;
        }
        const double na = static_cast<double>(count);
        const double nb = static_cast<double>(other.count);
        const double n = na + nb;
        const double delta = other.mean - mean;
        if (delta != 0.0) {
            mean += delta * (nb / n);
            m2 += other.m2 + delta * delta * (na * nb / n);
        } else {
            m2 += other.m2;
        }
        count += other.count;
    }

    [[nodiscard]] double variance() const noexcept {
        return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0;
    }

    /// Standard error of the mean, stdev / sqrt(n).
    [[nodiscard]] double stderr_of_mean() const noexcept {
        if (count == 0) return std::numeric_limits<double>::quiet_NaN();
        return std::sqrt(variance() / static_cast<double>(count));
    }
};

/// Point estimate with its Monte Carlo standard error.
struct Estimate {
    double mean = 0.0;
    double stderr = 0.0;
};

inline Estimate to_estimate(const RunningMoments& m) noexcept {
    return {m.mean, m.stderr_of_mean()};
}

} // namespace evs
