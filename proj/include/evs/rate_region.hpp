#pragma once

#include <cmath>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/error.hpp"
#include "evs/moments.hpp"
#include "evs/parallel.hpp"
#include "evs/polymatroid.hpp"
#include "evs/waterfilling.hpp"

namespace evs {

/// A batch together with the K policies solved on it. Holds the batch by
/// reference; the batch must outlive the inputs.
class RateRegionInputs {
public:
    RateRegionInputs(const FadingBatch& batch, std::vector<WaterfillingPolicy> policies)
        : batch_(&batch), policies_(std::move(policies)) {
        if (policies_.size() != static_cast<std::size_t>(batch.k_users))
            throw ValidationError("need " + std::to_string(batch.k_users) + " policies, got " +
                                  std::to_string(policies_.size()));
        for (std::size_t m = 0; m < policies_.size(); ++m) {
            if (policies_[m].batch_fingerprint != batch.fingerprint)
                throw ValidationError("policy for user " + std::to_string(m + 1) +
                                      " was not solved on this batch (fingerprint mismatch)");
            if (policies_[m].user != static_cast<int>(m))
                throw ValidationError("policies must be ordered by user index");
        }
    }

    [[nodiscard]] const FadingBatch& batch() const noexcept { return *batch_; }
    [[nodiscard]] const std::vector<WaterfillingPolicy>& policies() const noexcept { return policies_; }
    [[nodiscard]] int k_users() const noexcept { return batch_->k_users; }

    /// Fills received[j * K + m] = g_{j,m} P_m(g_{m,m}) for one sample.
    void received_powers(std::size_t sample, std::span<double> received) const noexcept {
        const int k = k_users();
        for (int m = 0; m < k; ++m) {
            const double p = policy_power(policies_[m], batch_->gain(sample, m, m));
            for (int j = 0; j < k; ++j) received[j * k + m] = batch_->gain(sample, j, m) * p;
        }
    }

private:
    const FadingBatch* batch_;
    std::vector<WaterfillingPolicy> policies_;
};

/// Everything accumulated in one pass over the batch.
struct RateStatistics {
    std::vector<SetFunction> set_functions;
    /// Moments of the per-sample EVS margin, evs[j * K + k]; diagonal unused.
    std::vector<RunningMoments> evs_margins;
    /// Moments of the per-sample corner margin f_j(S) - sum_{k in S} f_k({k}).
    std::vector<RunningMoments> box_margins;

    [[nodiscard]] MarginStderr margin_stderr() const {
        MarginStderr out;
        out.evs.reserve(evs_margins.size());
        for (const auto& m : evs_margins) out.evs.push_back(m.count ? m.stderr_of_mean() : 0.0);
        out.box.reserve(box_margins.size());
        for (const auto& m : box_margins) out.box.push_back(m.stderr_of_mean());
        return out;
    }
};

namespace detail {

inline void merge_all(std::vector<RunningMoments>& into, const std::vector<RunningMoments>& from) {
    for (std::size_t i = 0; i < into.size(); ++i) into[i].merge(from[i]);
}

} // namespace detail

/// One pass computing f_j(S) = mean C(sum_{m in S} g_{j,m} P_m) for every receiver
/// j and nonempty S, with standard errors, plus the per-sample EVS and corner
/// margins whose standard errors account for the shared samples.
inline RateStatistics compute_rate_statistics(const RateRegionInputs& inputs, unsigned workers = 1) {
    const int k = inputs.k_users();
    const std::size_t n_sets = nonempty_subset_count(k);
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t n = inputs.batch().n_samples;
    const Subset all = Subset::full(k);

    struct Partial {
        std::vector<RunningMoments> sets, evs, box;
    };
    std::vector<Partial> parts(detail::chunk_count(n));

    detail::for_each_chunk(n, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        Partial acc{std::vector<RunningMoments>(k * n_sets), std::vector<RunningMoments>(kk),
                    std::vector<RunningMoments>(k * n_sets)};
        std::vector<double> received(kk);
        std::vector<double> sums(n_sets + 1);
        std::vector<double> rate(static_cast<std::size_t>(k) * (n_sets + 1));
        std::vector<double> own(k);
        for (std::size_t s = begin; s < end; ++s) {
            inputs.received_powers(s, received);
            for (int j = 0; j < k; ++j) {
                double* rj = rate.data() + j * (n_sets + 1);
                sums[0] = 0.0;
                rj[0] = 0.0;
                for (std::uint32_t b = 1; b <= n_sets; ++b) {
                    sums[b] = sums[b & (b - 1)] + received[j * k + std::countr_zero(b)];
                    rj[b] = gaussian_capacity(sums[b]);
                }
            }
            for (int u = 0; u < k; ++u) own[u] = rate[u * (n_sets + 1) + (1u << u)];
            for (int j = 0; j < k; ++j) {
                const double* rj = rate.data() + j * (n_sets + 1);
                for (std::uint32_t b = 1; b <= n_sets; ++b) {
                    acc.sets[j * n_sets + b - 1].push(rj[b]);
                    double corner = rj[b];
                    for (std::uint32_t r = b; r != 0; r &= r - 1) corner -= own[std::countr_zero(r)];
                    acc.box[j * n_sets + b - 1].push(corner);
                }
                for (int u = 0; u < k; ++u) {
                    if (u == j) continue;
                    acc.evs[j * k + u].push(rj[all.bits()] - rj[all.without(u).bits()] - own[u]);
                }
            }
        }
        parts[chunk] = std::move(acc);
    });

    Partial total = detail::tree_reduce(std::move(parts), [](Partial& a, const Partial& b) {
        detail::merge_all(a.sets, b.sets);
        detail::merge_all(a.evs, b.evs);
        detail::merge_all(a.box, b.box);
    });

    RateStatistics out;
    out.set_functions.reserve(k);
    for (int j = 0; j < k; ++j) {
        std::vector<double> values(n_sets), stderrs(n_sets);
        for (std::size_t i = 0; i < n_sets; ++i) {
            values[i] = total.sets[j * n_sets + i].mean;
            stderrs[i] = total.sets[j * n_sets + i].stderr_of_mean();
        }
        out.set_functions.emplace_back(k, std::move(values), "receiver " + std::to_string(j + 1), std::move(stderrs));
    }
    out.evs_margins = std::move(total.evs);
    out.box_margins = std::move(total.box);
    return out;
}

/// The K empirical MAC set functions f_j, one per receiver.
inline std::vector<SetFunction> compute_set_functions(const RateRegionInputs& inputs, unsigned workers = 1) {
    return compute_rate_statistics(inputs, workers).set_functions;
}

/// Moments of the per-sample EVS margins only, evs[j * K + k]. Skips the
/// exponential subset enumeration; used inside budget searches.
inline std::vector<RunningMoments> evs_margin_moments(const RateRegionInputs& inputs, unsigned workers = 1) {
    const int k = inputs.k_users();
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t n = inputs.batch().n_samples;
    std::vector<std::vector<RunningMoments>> parts(detail::chunk_count(n));
    detail::for_each_chunk(n, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        std::vector<RunningMoments> acc(kk);
        std::vector<double> received(kk);
        std::vector<double> own(k);
        for (std::size_t s = begin; s < end; ++s) {
            inputs.received_powers(s, received);
            for (int u = 0; u < k; ++u) own[u] = gaussian_capacity(received[u * k + u]);
            for (int j = 0; j < k; ++j) {
                double total = 0.0;
                for (int m = 0; m < k; ++m) total += received[j * k + m];
                const double full = gaussian_capacity(total);
                for (int u = 0; u < k; ++u) {
                    if (u == j) continue;
                    double rest = 0.0;
                    for (int m = 0; m < k; ++m)
                        if (m != u) rest += received[j * k + m];
                    acc[j * k + u].push(full - gaussian_capacity(rest) - own[u]);
                }
            }
        }
        parts[chunk] = std::move(acc);
    });
    return detail::tree_reduce(std::move(parts), [](auto& a, const auto& b) { detail::merge_all(a, b); });
}

/// Rate of the users in `signal` at `receiver` while users in `interference`
/// are treated as noise: mean C(sum_S g P / (1 + sum_A g P)).
inline Estimate conditional_rate(const RateRegionInputs& inputs, int receiver, Subset signal, Subset interference,
                                 unsigned workers = 1) {
    const int k = inputs.k_users();
    if (receiver < 0 || receiver >= k) throw ValidationError("receiver index out of range");
    if (!signal.is_subset_of(Subset::full(k)) || !interference.is_subset_of(Subset::full(k)))
        throw ValidationError("user set outside {1..K}");
    if (!signal.disjoint(interference))
        throw ValidationError("signal set {" + signal.key() + "} and interference set {" + interference.key() +
                              "} overlap");
    const std::size_t kk = static_cast<std::size_t>(k) * k;
    const std::size_t n = inputs.batch().n_samples;
    const auto sig = signal.members();
    const auto intf = interference.members();
    std::vector<RunningMoments> parts(detail::chunk_count(n));
    detail::for_each_chunk(n, workers, [&](std::size_t chunk, std::size_t begin, std::size_t end) {
        RunningMoments acc;
        std::vector<double> received(kk);
        for (std::size_t s = begin; s < end; ++s) {
            inputs.received_powers(s, received);
            double num = 0.0, den = 1.0;
            for (int m : sig) num += received[receiver * k + m];
            for (int m : intf) den += received[receiver * k + m];
            acc.push(gaussian_capacity(num / den));
        }
        parts[chunk] = acc;
    });
    return to_estimate(detail::tree_reduce(std::move(parts), [](RunningMoments& a, const RunningMoments& b) {
        a.merge(b);
    }));
}

} // namespace evs
