#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "evs/error.hpp"
#include "evs/subset.hpp"

namespace evs {

/// Real-valued function on the nonempty subsets of {0..K-1}; f(empty) = 0.
/// Values are stored densely by Subset::index(). Optional per-value standard
/// errors are carried along when the values are Monte Carlo estimates.
class SetFunction {
public:
    SetFunction(int k_users, std::vector<double> values, std::string label = {}, std::vector<double> stderrs = {})
        : k_(k_users), values_(std::move(values)), stderrs_(std::move(stderrs)), label_(std::move(label)) {
        if (k_ < 1 || k_ > max_users)
            throw ValidationError("set function K must be in [1, " + std::to_string(max_users) + "]");
        if (values_.size() != nonempty_subset_count(k_))
            throw ValidationError("set function over K=" + std::to_string(k_) + " needs " +
                                  std::to_string(nonempty_subset_count(k_)) + " values, got " +
                                  std::to_string(values_.size()));
        if (!stderrs_.empty() && stderrs_.size() != values_.size())
            throw ValidationError("set function stderr list must match value list");
        for (double v : values_)
            if (!std::isfinite(v)) throw ValidationError("set function values must be finite");
    }

    template <class Fn>
    static SetFunction from(int k_users, Fn&& fn, std::string label = {}) {
        std::vector<double> values(nonempty_subset_count(k_users));
        for_each_nonempty_subset(k_users, [&](Subset s) { values[s.index()] = fn(s); });
        return SetFunction(k_users, std::move(values), std::move(label));
    }

    [[nodiscard]] int k_users() const noexcept { return k_; }
    [[nodiscard]] const std::string& label() const noexcept { return label_; }
    [[nodiscard]] std::span<const double> values() const noexcept { return values_; }
    [[nodiscard]] bool has_stderr() const noexcept { return !stderrs_.empty(); }

    [[nodiscard]] double operator()(Subset s) const noexcept { return s.is_empty() ? 0.0 : values_[s.index()]; }

    [[nodiscard]] double stderr_of(Subset s) const noexcept {
        return (s.is_empty() || stderrs_.empty()) ? 0.0 : stderrs_[s.index()];
    }

    /// Increment f(S + {user}) - f(S).
    [[nodiscard]] double gain(Subset s, int user) const noexcept { return (*this)(s.with(user)) - (*this)(s); }

private:
    int k_;
    std::vector<double> values_;
    std::vector<double> stderrs_;
    std::string label_;
};

/// Applies a relabeling of users: perm[i] is the new name of user i.
inline Subset permute(Subset s, std::span<const int> perm) {
    std::uint32_t bits = 0;
    for (int m : s.members()) bits |= 1u << perm[m];
    return Subset{bits};
}

/// g with g(perm(S)) = f(S).
inline SetFunction relabel(const SetFunction& f, std::span<const int> perm) {
    std::vector<int> inverse(perm.size());
    for (std::size_t i = 0; i < perm.size(); ++i) inverse[perm[i]] = static_cast<int>(i);
    return SetFunction::from(f.k_users(), [&](Subset s) { return f(permute(s, inverse)); }, f.label());
}

/// Rate tuple in bits per channel use, one entry per user.
struct RateTuple {
    std::vector<double> rates;

    [[nodiscard]] double sum_over(Subset s) const noexcept {
        double total = 0.0;
        for (int m : s.members()) total += rates[m];
        return total;
    }
};

// ---------------------------------------------------------------------------
// Polymatroid axioms

struct PolymatroidReport {
    double nonnegativity_violation = 0.0;
    Subset nonnegativity_worst;
    double monotonicity_violation = 0.0;
    std::pair<Subset, Subset> monotonicity_worst;
    double submodularity_violation = 0.0;
    std::pair<Subset, Subset> submodularity_worst;
    /// False when K is too large for all-pairs enumeration and the local
    /// (single-element) forms were checked instead.
    bool exhaustive = true;
    double tol = 0.0;

    [[nodiscard]] bool nonnegative() const noexcept { return nonnegativity_violation <= tol; }
    [[nodiscard]] bool monotone() const noexcept { return monotonicity_violation <= tol; }
    [[nodiscard]] bool submodular() const noexcept { return submodularity_violation <= tol; }
    [[nodiscard]] bool passes() const noexcept { return nonnegative() && monotone() && submodular(); }
};

/// K up to which every pair (S, T) is enumerated (4^K pairs).
inline constexpr int exhaustive_axiom_limit = 10;

inline PolymatroidReport check_polymatroid(const SetFunction& f, double tol) {
    PolymatroidReport rep;
    rep.tol = tol;
    const int k = f.k_users();
    const std::uint32_t end = 1u << k;

    for_each_nonempty_subset(k, [&](Subset s) {
        const double v = -f(s);
        if (v > rep.nonnegativity_violation) {
            rep.nonnegativity_violation = v;
            rep.nonnegativity_worst = s;
        }
    });

    if (k <= exhaustive_axiom_limit) {
        for (std::uint32_t t = 1; t < end; ++t) {
            // proper submasks of t, including the empty set
            for (std::uint32_t s = (t - 1) & t;; s = (s - 1) & t) {
                const double v = f(Subset{s}) - f(Subset{t});
                if (v > rep.monotonicity_violation) {
                    rep.monotonicity_violation = v;
                    rep.monotonicity_worst = {Subset{s}, Subset{t}};
                }
                if (s == 0) break;
            }
        }
        for (std::uint32_t a = 1; a < end; ++a) {
            for (std::uint32_t b = a + 1; b < end; ++b) {
                const Subset sa{a}, sb{b};
                const double v = f(sa | sb) + f(sa & sb) - f(sa) - f(sb);
                if (v > rep.submodularity_violation) {
                    rep.submodularity_violation = v;
                    rep.submodularity_worst = {sa, sb};
                }
            }
        }
    } else {
        rep.exhaustive = false;
        for (std::uint32_t s = 0; s < end; ++s) {
            const Subset ss{s};
            for (int i = 0; i < k; ++i) {
                if (ss.contains(i)) continue;
                const double mono = f(ss) - f(ss.with(i));
                if (mono > rep.monotonicity_violation) {
                    rep.monotonicity_violation = mono;
                    rep.monotonicity_worst = {ss, ss.with(i)};
                }
                for (int j = i + 1; j < k; ++j) {
                    if (ss.contains(j)) continue;
                    const double v = f(ss.with(i).with(j)) + f(ss) - f(ss.with(i)) - f(ss.with(j));
                    if (v > rep.submodularity_violation) {
                        rep.submodularity_violation = v;
                        rep.submodularity_worst = {ss.with(i), ss.with(j)};
                    }
                }
            }
        }
    }
    return rep;
}

// ---------------------------------------------------------------------------
// Condition families

enum class ConditionStatus { Holds, Fails, Indeterminate };

inline const char* to_string(ConditionStatus s) noexcept {
    switch (s) {
        case ConditionStatus::Holds: return "holds";
        case ConditionStatus::Fails: return "fails";
        case ConditionStatus::Indeterminate: return "indeterminate";
    }
    return "?";
}

/// Standard errors of per-sample margin quantities, when the set functions are
/// Monte Carlo means over a shared batch.
struct MarginStderr {
    /// evs[j * K + k]: stderr of f_j(K) - f_j(K - {k}) - f_k({k}).
    std::vector<double> evs;
    /// box[j * (2^K - 1) + S.index()]: stderr of f_j(S) - sum_{k in S} f_k({k}).
    std::vector<double> box;
};

/// Normalised indeterminacy band: a margin within 3 standard errors of zero.
inline constexpr double indeterminate_sigmas = 3.0;

inline bool within_noise(double margin, double stderr) noexcept {
    return stderr > 0.0 && std::abs(margin) < indeterminate_sigmas * stderr;
}

/// One strict condition f_k({k}) < f_j(K) - f_j(K - {k}). Users are 0-based.
struct EvsCondition {
    int receiver = 0;
    int user = 0;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    double stderr = 0.0;
    ConditionStatus status = ConditionStatus::Fails;

    [[nodiscard]] bool holds() const noexcept { return status == ConditionStatus::Holds; }
};

namespace detail {

inline int common_k(std::span<const SetFunction> f_list) {
    if (f_list.empty()) throw ValidationError("need one set function per receiver");
    const int k = f_list.front().k_users();
    if (f_list.size() != static_cast<std::size_t>(k))
        throw ValidationError("need K=" + std::to_string(k) + " set functions, got " + std::to_string(f_list.size()));
    for (const auto& f : f_list)
        if (f.k_users() != k) throw ValidationError("set functions disagree on K");
    return k;
}

} // namespace detail

/// Evaluates all K(K-1) strict conditions, ordered by receiver then user.
/// A condition holds when its margin exceeds tol; with standard errors it is
/// indeterminate when the margin is within 3 stderr of zero.
inline std::vector<EvsCondition> check_evs_conditions(std::span<const SetFunction> f_list, double tol,
                                                      const MarginStderr* stderrs = nullptr) {
    const int k = detail::common_k(f_list);
    const Subset all = Subset::full(k);
    std::vector<EvsCondition> out;
    out.reserve(static_cast<std::size_t>(k) * (k - 1));
    for (int j = 0; j < k; ++j) {
        for (int u = 0; u < k; ++u) {
            if (u == j) continue;
            EvsCondition c;
            c.receiver = j;
            c.user = u;
            c.lhs = f_list[u](Subset::singleton(u));
            c.rhs = f_list[j](all) - f_list[j](all.without(u));
            c.margin = c.rhs - c.lhs;
            c.stderr = stderrs ? stderrs->evs[j * k + u] : 0.0;
            if (within_noise(c.margin, c.stderr))
                c.status = ConditionStatus::Indeterminate;
            else
                c.status = c.margin > tol ? ConditionStatus::Holds : ConditionStatus::Fails;
            out.push_back(c);
        }
    }
    return out;
}

/// f_k({k}) <= f_j(S) - f_j(S - {k}) for one receiver j != k and S containing k.
struct FullCondition {
    int receiver = 0;
    int user = 0;
    Subset set;
    double lhs = 0.0;
    double rhs = 0.0;
    double margin = 0.0;
    bool holds = false;
};

struct FullConditionReport {
    int k_users = 0;
    std::vector<FullCondition> conditions;
    /// worst_margin[j * K + k]: min over S of the margin; +inf on the diagonal.
    std::vector<double> worst_margin;
    std::size_t holding = 0;

    [[nodiscard]] bool all_hold() const noexcept { return holding == conditions.size(); }
    [[nodiscard]] double worst(int receiver, int user) const { return worst_margin[receiver * k_users + user]; }
};

/// Evaluates every non-strict increment condition over all (j != k, S containing k),
/// including S = K. That is K(K-1) 2^(K-1) conditions.
inline FullConditionReport check_full_conditions(std::span<const SetFunction> f_list, double tol) {
    const int k = detail::common_k(f_list);
    FullConditionReport rep;
    rep.k_users = k;
    rep.worst_margin.assign(static_cast<std::size_t>(k) * k, std::numeric_limits<double>::infinity());
    for (int j = 0; j < k; ++j) {
        for (int u = 0; u < k; ++u) {
            if (u == j) continue;
            const double lhs = f_list[u](Subset::singleton(u));
            for_each_nonempty_subset(k, [&](Subset s) {
                if (!s.contains(u)) return;
                FullCondition c;
                c.receiver = j;
                c.user = u;
                c.set = s;
                c.lhs = lhs;
                c.rhs = f_list[j](s) - f_list[j](s.without(u));
                c.margin = c.rhs - c.lhs;
                c.holds = c.margin >= -tol;
                rep.holding += c.holds ? 1 : 0;
                double& w = rep.worst_margin[j * k + u];
                w = std::min(w, c.margin);
                rep.conditions.push_back(c);
            });
        }
    }
    return rep;
}

struct Membership {
    bool member = true;
    /// Constraint with the smallest margin f_j(S) - r(S).
    int receiver = 0;
    Subset set;
    double margin = std::numeric_limits<double>::infinity();
};

/// r lies in every polymatroid {R : R(S) <= f_j(S) for all S} within tol.
inline Membership is_in_intersection(std::span<const SetFunction> f_list, const RateTuple& r, double tol) {
    const int k = detail::common_k(f_list);
    if (r.rates.size() != static_cast<std::size_t>(k))
        throw ValidationError("rate tuple length " + std::to_string(r.rates.size()) + " does not match K=" +
                              std::to_string(k));
    Membership out;
    for (int j = 0; j < k; ++j) {
        for_each_nonempty_subset(k, [&](Subset s) {
            const double margin = f_list[j](s) - r.sum_over(s);
            if (margin < out.margin) {
                out.margin = margin;
                out.receiver = j;
                out.set = s;
            }
        });
    }
    out.member = out.margin >= -tol;
    return out;
}

// ---------------------------------------------------------------------------
// Telescoping argument

struct TelescopingReport {
    /// sum_{k in S} singles_k <= f(S) for every S, checked directly.
    bool direct_holds = true;
    Subset direct_worst;
    double direct_margin = std::numeric_limits<double>::infinity();
    /// singles_k <= f(K) - f(K - {k}) for every k.
    bool premise_holds = true;
    /// f(K) - f(K - {k}) <= f(P + {k}) - f(P) at every step of every chain.
    bool increments_hold = true;
    double worst_increment_gap = std::numeric_limits<double>::infinity();
    /// Every step of every chain is justified; implies direct_holds.
    bool chain_holds = true;
};

/// Replays the telescoping bound: for each S with members k1 < k2 < ..., the sum
/// of singles is bounded step by step through f(K) - f(K - {k_i}) by the chain
/// increments f({k1..k_i}) - f({k1..k_(i-1)}), which sum to f(S).
inline TelescopingReport telescoping_bound_check(const SetFunction& f, std::span<const double> singles, double tol) {
    const int k = f.k_users();
    if (singles.size() != static_cast<std::size_t>(k))
        throw ValidationError("singles length must equal K");
    TelescopingReport rep;
    const Subset all = Subset::full(k);

    std::vector<double> tail(k);
    for (int u = 0; u < k; ++u) {
        tail[u] = f(all) - f(all.without(u));
        if (singles[u] > tail[u] + tol) rep.premise_holds = false;
    }

    for_each_nonempty_subset(k, [&](Subset s) {
        double total = 0.0;
        Subset prefix;
        for (int u : s.members()) {
            total += singles[u];
            const double gap = f.gain(prefix, u) - tail[u];
            rep.worst_increment_gap = std::min(rep.worst_increment_gap, gap);
            if (gap < -tol) rep.increments_hold = false;
            prefix = prefix.with(u);
        }
        const double margin = f(s) - total;
        if (margin < rep.direct_margin) {
            rep.direct_margin = margin;
            rep.direct_worst = s;
        }
    });
    rep.direct_holds = rep.direct_margin >= -tol;
    rep.chain_holds = rep.premise_holds && rep.increments_hold;
    return rep;
}

// ---------------------------------------------------------------------------
// Combined verdict

enum class Verdict { Evs, BoxNotEvs, NotBox };

inline const char* to_string(Verdict v) noexcept {
    switch (v) {
        case Verdict::Evs: return "EVS";
        case Verdict::BoxNotEvs: return "BOX_NOT_EVS";
        case Verdict::NotBox: return "NOT_BOX";
    }
    return "?";
}

struct EvsReport {
    int k_users = 0;
    double tol = 0.0;
    /// Candidate box corner, corner_k = f_k({k}).
    RateTuple corner;
    std::vector<EvsCondition> evs_conditions;
    FullConditionReport full_conditions;
    Membership box_membership;
    Verdict verdict = Verdict::NotBox;
    /// Some condition deciding the verdict lies within Monte Carlo noise.
    bool indeterminate = false;

    [[nodiscard]] bool evs_holds() const noexcept {
        return std::all_of(evs_conditions.begin(), evs_conditions.end(), [](const EvsCondition& c) {
            return c.status == ConditionStatus::Holds;
        });
    }
};

/// Runs every condition family and classifies the instance. Throws
/// InvariantError if the strict conditions hold but the corner is not in the
/// intersection.
inline EvsReport evaluate_evs(std::span<const SetFunction> f_list, double tol, const MarginStderr* stderrs = nullptr) {
    const int k = detail::common_k(f_list);
    EvsReport rep;
    rep.k_users = k;
    rep.tol = tol;
    rep.corner.rates.resize(k);
    for (int u = 0; u < k; ++u) rep.corner.rates[u] = f_list[u](Subset::singleton(u));
    rep.evs_conditions = check_evs_conditions(f_list, tol, stderrs);
    rep.full_conditions = check_full_conditions(f_list, tol);
    rep.box_membership = is_in_intersection(f_list, rep.corner, tol);

    bool evs_certain_fail = false;
    bool evs_uncertain = false;
    for (const auto& c : rep.evs_conditions) {
        if (c.status == ConditionStatus::Fails) evs_certain_fail = true;
        if (c.status == ConditionStatus::Indeterminate) evs_uncertain = true;
    }
    const bool evs = !evs_certain_fail && !evs_uncertain;

    if (evs) {
        if (!rep.box_membership.member)
            throw InvariantError("strict conditions hold but the corner is outside the intersection (margin " +
                                 std::to_string(rep.box_membership.margin) + ")");
        rep.verdict = Verdict::Evs;
        return rep;
    }

    rep.verdict = rep.box_membership.member ? Verdict::BoxNotEvs : Verdict::NotBox;
    if (!evs_certain_fail) rep.indeterminate = true;

    if (stderrs) {
        // Box status is settled only if no constraint on the deciding side is within noise.
        const std::size_t n_sets = nonempty_subset_count(k);
        bool certain_violation = false;
        bool uncertain = false;
        for (int j = 0; j < k; ++j) {
            for_each_nonempty_subset(k, [&](Subset s) {
                const double margin = f_list[j](s) - rep.corner.sum_over(s);
                const double se = stderrs->box[j * n_sets + s.index()];
                if (within_noise(margin, se))
                    uncertain = true;
                else if (margin < -tol)
                    certain_violation = true;
            });
        }
        if (rep.box_membership.member ? uncertain : !certain_violation) rep.indeterminate = true;
    }
    return rep;
}

} // namespace evs
