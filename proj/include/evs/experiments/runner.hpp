#pragma once

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/experiments/config.hpp"
#include "evs/experiments/content_hash.hpp"
#include "evs/polymatroid.hpp"
#include "evs/rate_region.hpp"
#include "evs/serialize.hpp"
#include "evs/symmetric.hpp"
#include "evs/waterfilling.hpp"

namespace evs {

// ---------------------------------------------------------------------------
// Exit codes

namespace exit_code {
inline constexpr int evs = 0;
inline constexpr int box_not_evs = 2;
inline constexpr int indeterminate = 3;
inline constexpr int not_box = 4;
inline constexpr int monotonicity = 5;
inline constexpr int config = 64;
} // namespace exit_code

inline int exit_code_for(const EvsReport& r) noexcept {
    if (r.indeterminate) return exit_code::indeterminate;
    switch (r.verdict) {
        case Verdict::Evs: return exit_code::evs;
        case Verdict::BoxNotEvs: return exit_code::box_not_evs;
        case Verdict::NotBox: return exit_code::not_box;
    }
    return exit_code::not_box;
}

inline Json run_metadata(const ExperimentConfig& cfg) {
    const Json echo = to_json(cfg);
    return Json{{"config", echo},
                {"config_sha1", git_blob_sha1(echo.dump())},
                {"seed", cfg.seed},
                {"n_samples", cfg.n_samples},
                {"rng", std::string(CounterRng::algorithm)}};
}

// ---------------------------------------------------------------------------
// Single channel check

struct EvsCheckResult {
    std::vector<WaterfillingPolicy> policies;
    RateStatistics statistics;
    std::vector<PolymatroidReport> axioms;
    EvsReport report;
};

/// Full pipeline on one batch: sample, waterfill, set functions, conditions.
inline EvsCheckResult evaluate_channel(const FadingBatch& batch, std::span<const double> budgets, double tol,
                                       unsigned workers = 1) {
    EvsCheckResult out;
    out.policies = solve_policies(batch, budgets);
    const RateRegionInputs inputs(batch, out.policies);
    out.statistics = compute_rate_statistics(inputs, workers);
    for (const auto& f : out.statistics.set_functions) out.axioms.push_back(check_polymatroid(f, 1e-12));
    const MarginStderr se = out.statistics.margin_stderr();
    out.report = evaluate_evs(out.statistics.set_functions, tol, &se);
    return out;
}

inline std::size_t effective_samples(const ChannelModel& model, std::size_t requested) {
    return model.is_deterministic() ? 1 : requested;
}

inline EvsCheckResult run_evs_check(const ExperimentConfig& cfg, unsigned workers = 1) {
    if (cfg.kind != ExperimentKind::EvsCheck) throw ConfigError("field /kind: expected evs_check");
    if (cfg.budgets.is_sweep()) throw ConfigError("field /budgets: a budget sweep belongs to the sweep command");
    const ChannelModel model = cfg.channel_model();
    const auto budgets = cfg.budgets.resolve(model.k_users());
    const FadingBatch batch = sample_batch(model, effective_samples(model, cfg.n_samples), cfg.seed, workers);
    return evaluate_channel(batch, budgets, cfg.tol, workers);
}

inline Json to_json(const EvsCheckResult& r, const ExperimentConfig& cfg) {
    Json j = run_metadata(cfg);
    Json policies = Json::array();
    for (const auto& p : r.policies) policies.push_back(to_json(p));
    Json sets = Json::array();
    for (const auto& f : r.statistics.set_functions) sets.push_back(to_json(f));
    Json axioms = Json::array();
    for (const auto& a : r.axioms) axioms.push_back(to_json(a));
    j["policies"] = policies;
    j["set_functions"] = sets;
    j["polymatroid"] = axioms;
    j["report"] = to_json(r.report);
    j["exit_code"] = exit_code_for(r.report);
    return j;
}

// ---------------------------------------------------------------------------
// Sweep results

using Cell = std::variant<std::monostate, double, std::string>;

struct SweepResult {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;
    Json metadata;
    /// Adjacent-row monotonicity failures, one message each.
    std::vector<std::string> monotonicity_violations;

    [[nodiscard]] std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw Error("no column " + std::string(name));
    }

    [[nodiscard]] std::optional<double> number(std::size_t row, std::string_view name) const {
        const Cell& c = rows[row][column(name)];
        if (const auto* d = std::get_if<double>(&c)) return *d;
        return std::nullopt;
    }
};

/// Twelve significant digits, '.' decimal point regardless of locale.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", v);
    std::string s(buf);
    for (char& c : s)
        if (c == ',') c = '.';
    return s;
}

/// Comma-separated, header row, LF line endings, empty cell for missing values.
inline std::string to_csv(const SweepResult& r) {
    std::string out;
    for (std::size_t i = 0; i < r.columns.size(); ++i) {
        if (i) out += ',';
        out += r.columns[i];
    }
    out += '\n';
    for (const auto& row : r.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            if (const auto* d = std::get_if<double>(&row[i])) out += format_number(*d);
            else if (const auto* s = std::get_if<std::string>(&row[i])) out += *s;
        }
        out += '\n';
    }
    return out;
}

inline Cell cell(std::optional<double> v) { return v ? Cell{*v} : Cell{}; }

/// Records every adjacent pair where column `value` drops by more than
/// 3 * sqrt(se_i^2 + se_{i+1}^2); `stderr_col` may be empty for exact columns.
inline void check_nondecreasing(SweepResult& r, std::string_view value, std::string_view stderr_col) {
    for (std::size_t i = 0; i + 1 < r.rows.size(); ++i) {
        const auto a = r.number(i, value), b = r.number(i + 1, value);
        if (!a || !b) continue;
        double slack = 0.0;
        if (!stderr_col.empty()) {
            const double sa = r.number(i, stderr_col).value_or(0.0), sb = r.number(i + 1, stderr_col).value_or(0.0);
            slack = indeterminate_sigmas * std::sqrt(sa * sa + sb * sb);
        }
        if (*b < *a - slack)
            r.monotonicity_violations.push_back(std::string(value) + " decreases between rows " + std::to_string(i + 1) +
                                                " and " + std::to_string(i + 2) + ": " + format_number(*a) + " -> " +
                                                format_number(*b));
    }
}

// ---------------------------------------------------------------------------
// Largest EVS budget on a fixed batch

struct BudgetSearch {
    double pbar_max = 0.0;
    /// Delta-method stderr: stderr of the binding margin over its slope in P.
    double stderr = 0.0;
    int binding_receiver = -1;
    int binding_user = -1;
    bool capped = false;
    int evaluations = 0;
};

struct BudgetSearchOptions {
    double tol = 1e-9;
    double initial_upper = 1.0;
    double cap = 1e6;
    int iterations = 60;
    /// Bisection also stops once hi - lo <= rel_width * max(hi, 1).
    double rel_width = 1e-10;
    unsigned workers = 1;
};

namespace detail {

struct MarginProbe {
    double min_margin = 0.0;
    int receiver = -1, user = -1;
    std::vector<RunningMoments> moments;
};

inline MarginProbe probe_margins(const FadingBatch& batch, const BatchWaterfilling& solvers, double budget,
                                 unsigned workers) {
    const std::vector<double> budgets(batch.k_users, budget);
    // margins recompute every rate per sample, so the policy capacities are not needed
    const RateRegionInputs inputs(batch, solvers.policies(budgets, {}, false));
    MarginProbe p;
    p.moments = evs_margin_moments(inputs, workers);
    p.min_margin = std::numeric_limits<double>::infinity();
    const int k = batch.k_users;
    for (int j = 0; j < k; ++j)
        for (int u = 0; u < k; ++u)
            if (u != j && p.moments[j * k + u].mean < p.min_margin) {
                p.min_margin = p.moments[j * k + u].mean;
                p.receiver = j;
                p.user = u;
            }
    return p;
}

} // namespace detail

/// Largest common budget for which every strict condition holds on `batch`,
/// with all users re-waterfilled at each trial budget. Brackets by doubling
/// from initial_upper up to cap, then bisects until the bracket is narrower
/// than rel_width * max(hi, 1); returns the last passing budget (0 if none passes).
inline BudgetSearch max_evs_budget(const FadingBatch& batch, BudgetSearchOptions opt = {}) {
    BudgetSearch out;
    const BatchWaterfilling solvers(batch);
    auto holds = [&](double p) {
        ++out.evaluations;
        return detail::probe_margins(batch, solvers, p, opt.workers).min_margin > opt.tol;
    };
    double lo = 0.0, hi = opt.initial_upper;
    while (holds(hi)) {
        lo = hi;
        if (hi >= opt.cap) {
            out.capped = true;
            break;
        }
        hi = std::min(opt.cap, 2.0 * hi);
    }
    if (!out.capped) {
        for (int i = 0; i < opt.iterations && hi - lo > opt.rel_width * std::max(hi, 1.0); ++i) {
            const double mid = 0.5 * (lo + hi);
            (holds(mid) ? lo : hi) = mid;
        }
    }
    out.pbar_max = lo;
    if (lo > 0.0) {
        const auto at = detail::probe_margins(batch, solvers, lo, opt.workers);
        out.binding_receiver = at.receiver;
        out.binding_user = at.user;
        const int k = batch.k_users;
        const std::size_t idx = at.receiver * k + at.user;
        const double h = 1e-4 * lo;
        const double up = detail::probe_margins(batch, solvers, lo + h, opt.workers).moments[idx].mean;
        const double down = detail::probe_margins(batch, solvers, lo - h, opt.workers).moments[idx].mean;
        const double slope = (up - down) / (2.0 * h);
        const double se = at.moments[idx].stderr_of_mean();
        out.stderr = se == 0.0 ? 0.0 : (slope != 0.0 ? se / std::abs(slope) : std::numeric_limits<double>::infinity());
    }
    return out;
}

// ---------------------------------------------------------------------------
// Figure sweeps

/// K users, unit constant direct links, i.i.d. Rayleigh cross links with mean
/// power sigma2 (constant zero when sigma2 == 0).
inline ChannelModel fading_cross_channel(int k_users, double sigma2) {
    std::vector<EntrySpec> entries;
    for (int j = 0; j < k_users; ++j)
        for (int m = 0; m < k_users; ++m) {
            if (j == m) entries.emplace_back(ConstantGain{1.0});
            else if (sigma2 == 0.0) entries.emplace_back(ConstantGain{0.0});
            else entries.emplace_back(RayleighPower{sigma2});
        }
    return ChannelModel(k_users, std::move(entries));
}

/// Seed for sweep point `index`: seed XOR index.
inline std::uint64_t point_seed(std::uint64_t seed, std::size_t index) noexcept { return seed ^ index; }

struct Fig2Point {
    double sigma2 = 0.0;
    BudgetSearch search;
    Estimate evs_sum_capacity;
    Estimate ia_sum_rate;
};

namespace detail {

inline double sum_capacity(const FadingBatch& batch, double p) {
    double total = 0.0;
    for (const auto& pol : solve_policies(batch, std::vector<double>(batch.k_users, p))) total += pol.capacity;
    return total;
}

/// Sum over users of (1/2) E[C(2 g_kk P)].
inline double alignment_sum_rate(const FadingBatch& batch, double p) {
    double total = 0.0;
    for (int k = 0; k < batch.k_users; ++k) {
        RunningMoments m;
        for (std::size_t s = 0; s < batch.n_samples; ++s) m.push(0.5 * gaussian_capacity(2.0 * batch.gain(s, k, k) * p));
        total += m.mean;
    }
    return total;
}

} // namespace detail

inline Fig2Point evaluate_fig2_point(int k_users, double sigma2, std::size_t n_samples, std::uint64_t seed, double tol,
                                     unsigned workers = 1) {
    const ChannelModel model = fading_cross_channel(k_users, sigma2);
    const FadingBatch batch = sample_batch(model, effective_samples(model, n_samples), seed, workers);
    Fig2Point pt;
    pt.sigma2 = sigma2;
    pt.search = max_evs_budget(batch, {.tol = tol, .workers = workers});
    const double p = pt.search.pbar_max;
    pt.evs_sum_capacity.mean = detail::sum_capacity(batch, p);
    pt.ia_sum_rate.mean = detail::alignment_sum_rate(batch, p);
    if (p > 0.0 && pt.search.stderr > 0.0) {
        const double h = 1e-4 * p;
        const double d_evs = (detail::sum_capacity(batch, p + h) - detail::sum_capacity(batch, p - h)) / (2 * h);
        const double d_ia = (detail::alignment_sum_rate(batch, p + h) - detail::alignment_sum_rate(batch, p - h)) / (2 * h);
        pt.evs_sum_capacity.stderr = std::abs(d_evs) * pt.search.stderr;
        pt.ia_sum_rate.stderr = std::abs(d_ia) * pt.search.stderr;
    }
    return pt;
}

inline SweepResult run_fig2a(const ExperimentConfig& cfg, unsigned workers = 1) {
    if (cfg.kind != ExperimentKind::Fig2aSweep) throw ConfigError("field /kind: expected fig2a_sweep");
    SweepResult r;
    r.columns = {"sigma2", "pbar_max", "pbar_max_stderr"};
    for (std::size_t i = 0; i < cfg.variance_sweep.size(); ++i) {
        const auto pt = evaluate_fig2_point(cfg.k_users, cfg.variance_sweep[i], cfg.n_samples,
                                            point_seed(cfg.seed, i), cfg.tol, workers);
        r.rows.push_back({pt.sigma2, pt.search.pbar_max, pt.search.stderr});
    }
    check_nondecreasing(r, "pbar_max", "pbar_max_stderr");
    return r;
}

inline SweepResult run_fig2b(const ExperimentConfig& cfg, unsigned workers = 1) {
    if (cfg.kind != ExperimentKind::Fig2bSweep) throw ConfigError("field /kind: expected fig2b_sweep");
    SweepResult r;
    r.columns = {"sigma2", "pbar_max", "evs_sum_capacity", "evs_sum_capacity_stderr"};
    if (cfg.ia_column) {
        r.columns.push_back("ia_sum_rate");
        r.columns.push_back("ia_sum_rate_stderr");
    }
    for (std::size_t i = 0; i < cfg.variance_sweep.size(); ++i) {
        const auto pt = evaluate_fig2_point(cfg.k_users, cfg.variance_sweep[i], cfg.n_samples,
                                            point_seed(cfg.seed, i), cfg.tol, workers);
        std::vector<Cell> row{pt.sigma2, pt.search.pbar_max, pt.evs_sum_capacity.mean, pt.evs_sum_capacity.stderr};
        if (cfg.ia_column) {
            row.emplace_back(pt.ia_sum_rate.mean);
            row.emplace_back(pt.ia_sum_rate.stderr);
        }
        r.rows.push_back(std::move(row));
    }
    check_nondecreasing(r, "evs_sum_capacity", "evs_sum_capacity_stderr");
    return r;
}

inline SweepResult run_fig3(const ExperimentConfig& cfg) {
    if (cfg.kind != ExperimentKind::Fig3Sweep) throw ConfigError("field /kind: expected fig3_sweep");
    SweepResult r;
    r.columns = {"a2", "cmac_pbar_max", "lattice_pbar_lower", "lattice_pbar_upper"};
    for (double a2 : cfg.gain_sweep) {
        const auto w = lattice_power_window(a2);
        r.rows.push_back({a2, cmac_max_power(cfg.k_users, a2), cell(w ? std::optional(w->lower) : std::nullopt),
                          cell(w ? std::optional(w->upper) : std::nullopt)});
    }
    check_nondecreasing(r, "cmac_pbar_max", "");
    return r;
}

/// evs_check with a budget grid: one batch, every user at the same budget.
inline SweepResult run_budget_sweep(const ExperimentConfig& cfg, unsigned workers = 1) {
    if (cfg.kind != ExperimentKind::EvsCheck || !cfg.budgets.is_sweep())
        throw ConfigError("field /budgets: budget sweep needs kind evs_check and budgets {min, max, steps}");
    const ChannelModel model = cfg.channel_model();
    const FadingBatch batch = sample_batch(model, effective_samples(model, cfg.n_samples), cfg.seed, workers);
    SweepResult r;
    r.columns = {"pbar", "verdict", "indeterminate", "min_evs_margin", "min_evs_margin_stderr", "box_margin"};
    for (double p : cfg.budgets.sweep) {
        const auto res = evaluate_channel(batch, std::vector<double>(model.k_users(), p), cfg.tol, workers);
        const auto worst = std::min_element(res.report.evs_conditions.begin(), res.report.evs_conditions.end(),
                                            [](const auto& a, const auto& b) { return a.margin < b.margin; });
        r.rows.push_back({p, std::string(to_string(res.report.verdict)), res.report.indeterminate ? 1.0 : 0.0,
                          worst->margin, worst->stderr, res.report.box_membership.margin});
    }
    return r;
}

/// Dispatches a sweep config and fills the metadata block.
inline SweepResult run_sweep(const ExperimentConfig& cfg, unsigned workers = 1) {
    const auto start = std::chrono::steady_clock::now();
    SweepResult r;
    switch (cfg.kind) {
        case ExperimentKind::Fig2aSweep: r = run_fig2a(cfg, workers); break;
        case ExperimentKind::Fig2bSweep: r = run_fig2b(cfg, workers); break;
        case ExperimentKind::Fig3Sweep: r = run_fig3(cfg); break;
        case ExperimentKind::EvsCheck: r = run_budget_sweep(cfg, workers); break;
        case ExperimentKind::Counterexample: throw ConfigError("field /kind: counterexample is not a sweep");
    }
    r.metadata = run_metadata(cfg);
    r.metadata["columns"] = r.columns;
    r.metadata["rows"] = r.rows.size();
    r.metadata["monotonicity_violations"] = r.monotonicity_violations;
    r.metadata["runtime_seconds"] =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return r;
}

// ---------------------------------------------------------------------------
// Three-user counterexample

/// f_1(S) = max(S) + 0.5 |S| with 1-based users; receivers 2 and 3 see the same
/// function through the cyclic relabeling 1 -> 3, 2 -> 1, 3 -> 2.
inline std::vector<SetFunction> counterexample_set_functions(bool unit_singles = false) {
    auto f1 = [](Subset s) {
        const auto m = s.members();
        return static_cast<double>(m.back() + 1) + 0.5 * static_cast<double>(m.size());
    };
    auto pi = [](Subset s) {
        std::uint32_t bits = 0;
        for (int u : s.members()) bits |= 1u << ((u + 2) % 3);
        return Subset{bits};
    };
    std::vector<SetFunction> out;
    out.push_back(SetFunction::from(3, f1, "receiver 1"));
    out.push_back(SetFunction::from(3, [&](Subset s) { return f1(pi(s)); }, "receiver 2"));
    out.push_back(SetFunction::from(3, [&](Subset s) { return f1(pi(pi(s))); }, "receiver 3"));
    if (unit_singles) {
        for (int j = 0; j < 3; ++j) {
            const SetFunction& f = out[j];
            out[j] = SetFunction::from(3, [&](Subset s) { return s == Subset::singleton(j) ? 1.0 : f(s); }, f.label());
        }
    }
    return out;
}

struct CounterexampleVariant {
    std::string name;
    std::vector<SetFunction> set_functions;
    std::vector<PolymatroidReport> axioms;
    std::vector<EvsCondition> evs_conditions;
    FullConditionReport full_conditions;
    Membership unit_tuple;
    EvsReport report;
    std::vector<TelescopingReport> telescoping;

    [[nodiscard]] std::size_t failing_evs_conditions() const {
        std::size_t n = 0;
        for (const auto& c : evs_conditions) n += c.holds() ? 0 : 1;
        return n;
    }
};

inline CounterexampleVariant evaluate_counterexample(bool unit_singles, double tol = 1e-9) {
    CounterexampleVariant v;
    v.name = unit_singles ? "unit_singles" : "closed_form";
    v.set_functions = counterexample_set_functions(unit_singles);
    for (const auto& f : v.set_functions) v.axioms.push_back(check_polymatroid(f, tol));
    v.evs_conditions = check_evs_conditions(v.set_functions, tol);
    v.full_conditions = check_full_conditions(v.set_functions, tol);
    v.unit_tuple = is_in_intersection(v.set_functions, RateTuple{{1.0, 1.0, 1.0}}, tol);
    v.report = evaluate_evs(v.set_functions, tol);
    for (const auto& f : v.set_functions) v.telescoping.push_back(telescoping_bound_check(f, v.report.corner.rates, tol));
    return v;
}

/// Both readings of the singleton values: from the closed form (1.5 each) and
/// from the unit direct links (1 each).
inline std::vector<CounterexampleVariant> run_counterexample(double tol = 1e-9) {
    return {evaluate_counterexample(false, tol), evaluate_counterexample(true, tol)};
}

inline Json to_json(const CounterexampleVariant& v) {
    Json sets = Json::array(), axioms = Json::array(), conds = Json::array(), tele = Json::array();
    for (const auto& f : v.set_functions) sets.push_back(to_json(f));
    for (const auto& a : v.axioms) axioms.push_back(to_json(a));
    for (const auto& c : v.evs_conditions) conds.push_back(to_json(c));
    for (const auto& t : v.telescoping) tele.push_back(to_json(t));
    return Json{{"variant", v.name},
                {"set_functions", sets},
                {"polymatroid", axioms},
                {"evs_conditions", conds},
                {"failing_evs_conditions", v.failing_evs_conditions()},
                {"full_conditions", to_json(v.full_conditions)},
                {"unit_tuple_membership", to_json(v.unit_tuple)},
                {"verdict", to_string(v.report.verdict)},
                {"corner_membership", to_json(v.report.box_membership)},
                {"telescoping", tele}};
}

} // namespace evs
