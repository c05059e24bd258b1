#pragma once

#include <cmath>
#include <limits>
#include <optional>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/error.hpp"

namespace evs {

/// Non-fading K-user IFC with unit direct gains, power gain a^2 on every cross
/// link, and a common power budget.
struct SymmetricIfc {
    int k_users = 3;
    double cross_gain_sq = 1.0;
    double budget = 0.0;
};

inline void validate(const SymmetricIfc& ifc) {
    if (ifc.k_users < 2 || ifc.k_users > max_users) throw ValidationError("symmetric IFC needs 2 <= K <= 20");
    if (!std::isfinite(ifc.cross_gain_sq) || ifc.cross_gain_sq <= 0.0)
        throw ValidationError("cross_gain_sq must be finite and > 0");
    if (!std::isfinite(ifc.budget) || ifc.budget < 0.0) throw ValidationError("budget must be finite and >= 0");
}

/// Supremum of budgets meeting the strict compound-MAC condition,
/// (a^2 - 1) / (1 + (K - 2) a^2). Zero when a^2 <= 1.
inline double cmac_max_power(int k_users, double cross_gain_sq) {
    if (k_users < 2) throw ValidationError("K must be >= 2");
    if (!(cross_gain_sq > 0.0)) throw ValidationError("a^2 must be > 0");
    if (cross_gain_sq <= 1.0) return 0.0;
    return (cross_gain_sq - 1.0) / (1.0 + (k_users - 2) * cross_gain_sq);
}

/// Limit of cmac_max_power as a^2 grows: 1 / (K - 2), or +inf for K = 2.
inline double cmac_power_supremum(int k_users) {
    if (k_users < 2) throw ValidationError("K must be >= 2");
    return k_users == 2 ? std::numeric_limits<double>::infinity() : 1.0 / (k_users - 2);
}

/// Threshold a^2 > (1 + P) / (1 - (K - 2) P); nullopt when (K - 2) P >= 1 and
/// no finite cross gain suffices.
inline std::optional<double> cmac_min_gain(int k_users, double budget) {
    if (k_users < 2) throw ValidationError("K must be >= 2");
    if (!(budget >= 0.0)) throw ValidationError("budget must be >= 0");
    const double denom = 1.0 - (k_users - 2) * budget;
    if (denom <= 0.0) return std::nullopt;
    return (1.0 + budget) / denom;
}

/// Open interval of budgets with (P + 1)^2 / P < a^2, the lattice-code
/// condition. Its endpoints are the roots of P^2 + (2 - a^2) P + 1.
struct PowerWindow {
    double lower = 0.0;
    double upper = 0.0;

    [[nodiscard]] bool contains(double p) const noexcept { return p > lower && p < upper; }
};

/// Empty for a^2 <= 4 (the quadratic has no two distinct positive roots).
inline std::optional<PowerWindow> lattice_power_window(double cross_gain_sq) {
    if (!(cross_gain_sq > 0.0)) throw ValidationError("a^2 must be > 0");
    if (cross_gain_sq <= 4.0) return std::nullopt;
    const double b = cross_gain_sq - 2.0;
    const double disc = (cross_gain_sq - 4.0) * cross_gain_sq;  // b^2 - 4 without cancellation
    const double upper = 0.5 * (b + std::sqrt(disc));
    // product of the roots is 1
    return PowerWindow{1.0 / upper, upper};
}

/// Closed-form strict condition check, true iff budget < cmac_max_power.
inline bool cmac_very_strong(const SymmetricIfc& ifc) {
    validate(ifc);
    return ifc.budget < cmac_max_power(ifc.k_users, ifc.cross_gain_sq);
}

inline bool lattice_very_strong(const SymmetricIfc& ifc) {
    validate(ifc);
    const auto w = lattice_power_window(ifc.cross_gain_sq);
    return w && w->contains(ifc.budget);
}

/// Constant K x K model: 1 on the diagonal, a^2 elsewhere.
inline ChannelModel symmetric_to_channel_model(const SymmetricIfc& ifc) {
    validate(ifc);
    const int k = ifc.k_users;
    std::vector<double> gains(static_cast<std::size_t>(k) * k, ifc.cross_gain_sq);
    for (int i = 0; i < k; ++i) gains[i * k + i] = 1.0;
    return ChannelModel::constant(k, gains);
}

} // namespace evs
