#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "evs/channel_model.hpp"
#include "evs/error.hpp"
#include "evs/serialize.hpp"
#include "evs/symmetric.hpp"

namespace evs {

/// Configuration problem; the message names the line/column or the field path.
class ConfigError : public Error {
public:
    using Error::Error;
};

enum class ExperimentKind { EvsCheck, Fig2aSweep, Fig2bSweep, Fig3Sweep, Counterexample };

inline const char* to_string(ExperimentKind k) noexcept {
    switch (k) {
        case ExperimentKind::EvsCheck: return "evs_check";
        case ExperimentKind::Fig2aSweep: return "fig2a_sweep";
        case ExperimentKind::Fig2bSweep: return "fig2b_sweep";
        case ExperimentKind::Fig3Sweep: return "fig3_sweep";
        case ExperimentKind::Counterexample: return "counterexample";
    }
    return "?";
}

/// Either explicit per-user budgets (a single value is broadcast) or a common
/// budget swept over a grid.
struct BudgetSpec {
    std::vector<double> per_user;
    std::vector<double> sweep;

    [[nodiscard]] bool is_sweep() const noexcept { return !sweep.empty(); }

    [[nodiscard]] std::vector<double> resolve(int k_users) const {
        if (per_user.size() == 1) return std::vector<double>(k_users, per_user.front());
        if (per_user.size() != static_cast<std::size_t>(k_users))
            throw ConfigError("field /budgets: expected 1 or " + std::to_string(k_users) + " values, got " +
                              std::to_string(per_user.size()));
        return per_user;
    }
};

struct ExperimentConfig {
    ExperimentKind kind = ExperimentKind::EvsCheck;
    std::optional<ChannelModel> channel;
    std::optional<SymmetricIfc> symmetric;
    /// User count for the figure sweeps, which build their own channels.
    int k_users = 3;
    BudgetSpec budgets;
    std::vector<double> variance_sweep;
    std::vector<double> gain_sweep;
    std::size_t n_samples = 100000;
    std::uint64_t seed = 1;
    double tol = 1e-9;
    bool ia_column = true;

    /// The configured channel as a sampling model.
    [[nodiscard]] ChannelModel channel_model() const {
        if (channel) return *channel;
        if (symmetric) return symmetric_to_channel_model(*symmetric);
        throw ConfigError("field /channel: evs_check needs \"channel\" or \"symmetric\"");
    }

    [[nodiscard]] int channel_users() const {
        if (channel) return channel->k_users();
        if (symmetric) return symmetric->k_users;
        return k_users;
    }
};

namespace detail {

inline std::string line_col(std::string_view text, std::size_t byte) {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i + 1 < byte && i < text.size(); ++i) {
        if (text[i] == '\n') {
            ++line;
            col = 1;
        } else {
            ++col;
        }
    }
    return "line " + std::to_string(line) + ", column " + std::to_string(col);
}

[[noreturn]] inline void field_error(const std::string& path, const std::string& what) {
    throw ConfigError("field " + path + ": " + what);
}

inline double get_number(const Json& j, const std::string& path) {
    if (!j.is_number()) field_error(path, "expected a number");
    return j.get<double>();
}

/// Array of numbers, or {"min", "max", "steps"} for an evenly spaced grid.
/// Must be strictly increasing.
inline std::vector<double> parse_grid(const Json& j, const std::string& path) {
    std::vector<double> out;
    if (j.is_array()) {
        for (std::size_t i = 0; i < j.size(); ++i) out.push_back(get_number(j[i], path + "/" + std::to_string(i)));
    } else if (j.is_object()) {
        for (const auto& [key, _] : j.items())
            if (key != "min" && key != "max" && key != "steps") field_error(path + "/" + key, "unknown grid field");
        if (!j.contains("min") || !j.contains("max") || !j.contains("steps"))
            field_error(path, "grid object needs min, max and steps");
        const double lo = get_number(j["min"], path + "/min");
        const double hi = get_number(j["max"], path + "/max");
        if (!j["steps"].is_number_integer() || j["steps"].get<long long>() < 1)
            field_error(path + "/steps", "expected an integer >= 1");
        const auto steps = j["steps"].get<std::size_t>();
        if (steps == 1) {
            out.push_back(lo);
        } else {
            for (std::size_t i = 0; i < steps; ++i)
                out.push_back(i + 1 == steps ? hi : lo + (hi - lo) * static_cast<double>(i) / (steps - 1));
        }
    } else {
        field_error(path, "expected an array or a {min, max, steps} object");
    }
    if (out.empty()) field_error(path, "grid is empty");
    for (std::size_t i = 1; i < out.size(); ++i)
        if (!(out[i] > out[i - 1])) field_error(path, "grid must be strictly increasing");
    return out;
}

inline EntrySpec parse_entry(const Json& j, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected {kind, params}");
    if (!j.contains("kind") || !j["kind"].is_string()) field_error(path + "/kind", "expected a string");
    const std::string kind = j["kind"].get<std::string>();
    const Json params = j.value("params", Json::object());
    if (!params.is_object()) field_error(path + "/params", "expected an object");
    if (kind == "constant") {
        if (!params.contains("gain")) field_error(path + "/params/gain", "missing");
        return ConstantGain{get_number(params["gain"], path + "/params/gain")};
    }
    if (kind == "rayleigh") {
        if (!params.contains("mean")) field_error(path + "/params/mean", "missing");
        return RayleighPower{get_number(params["mean"], path + "/params/mean")};
    }
    if (kind == "discrete") {
        if (!params.contains("atoms") || !params["atoms"].is_array())
            field_error(path + "/params/atoms", "expected a list of [gain, probability] pairs");
        DiscreteGain d;
        for (std::size_t i = 0; i < params["atoms"].size(); ++i) {
            const auto& a = params["atoms"][i];
            const std::string ap = path + "/params/atoms/" + std::to_string(i);
            if (!a.is_array() || a.size() != 2) field_error(ap, "expected [gain, probability]");
            d.gains.push_back(get_number(a[0], ap + "/0"));
            d.probs.push_back(get_number(a[1], ap + "/1"));
        }
        return d;
    }
    field_error(path + "/kind", "unknown entry kind \"" + kind + "\" (constant, rayleigh, discrete)");
}

inline ChannelModel parse_channel(const Json& j, const std::string& path) {
    if (!j.is_object()) field_error(path, "expected an object");
    if (!j.contains("k_users") || !j["k_users"].is_number_integer()) field_error(path + "/k_users", "expected an integer");
    if (!j.contains("entries") || !j["entries"].is_array()) field_error(path + "/entries", "expected an array");
    const int k = j["k_users"].get<int>();
    std::vector<EntrySpec> entries;
    for (std::size_t i = 0; i < j["entries"].size(); ++i)
        entries.push_back(parse_entry(j["entries"][i], path + "/entries/" + std::to_string(i)));
    try {
        return ChannelModel(k, std::move(entries));
    } catch (const ValidationError& e) {
        field_error(path, e.what());
    }
}

} // namespace detail

/// Parses one experiment from JSON text. Unknown fields are rejected.
inline ExperimentConfig parse_config(std::string_view text) {
    Json j;
    try {
        j = Json::parse(text.begin(), text.end());
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(detail::line_col(text, e.byte) + ": invalid JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw ConfigError("line 1, column 1: config must be a JSON object");

    static const std::set<std::string> known = {"kind",      "channel", "symmetric",      "k_users",    "budgets",
                                                "variance_sweep", "gain_sweep", "n_samples", "seed", "tol", "ia_column"};
    for (const auto& [key, _] : j.items())
        if (!known.contains(key)) detail::field_error("/" + key, "unknown field");

    ExperimentConfig cfg;
    if (!j.contains("kind") || !j["kind"].is_string()) detail::field_error("/kind", "expected a string");
    const std::string kind = j["kind"].get<std::string>();
    if (kind == "evs_check") cfg.kind = ExperimentKind::EvsCheck;
    else if (kind == "fig2a_sweep") cfg.kind = ExperimentKind::Fig2aSweep;
    else if (kind == "fig2b_sweep") cfg.kind = ExperimentKind::Fig2bSweep;
    else if (kind == "fig3_sweep") cfg.kind = ExperimentKind::Fig3Sweep;
    else if (kind == "counterexample") cfg.kind = ExperimentKind::Counterexample;
    else detail::field_error("/kind", "unknown experiment kind \"" + kind + "\"");

    if (j.contains("channel")) cfg.channel = detail::parse_channel(j["channel"], "/channel");
    if (j.contains("symmetric")) {
        const Json& s = j["symmetric"];
        if (!s.is_object()) detail::field_error("/symmetric", "expected {k_users, cross_gain_sq}");
        SymmetricIfc ifc;
        if (!s.contains("k_users") || !s["k_users"].is_number_integer())
            detail::field_error("/symmetric/k_users", "expected an integer");
        ifc.k_users = s["k_users"].get<int>();
        if (!s.contains("cross_gain_sq")) detail::field_error("/symmetric/cross_gain_sq", "missing");
        ifc.cross_gain_sq = detail::get_number(s["cross_gain_sq"], "/symmetric/cross_gain_sq");
        for (const auto& [key, _] : s.items())
            if (key != "k_users" && key != "cross_gain_sq") detail::field_error("/symmetric/" + key, "unknown field");
        try {
            validate(ifc);
        } catch (const ValidationError& e) {
            detail::field_error("/symmetric", e.what());
        }
        cfg.symmetric = ifc;
    }
    if (cfg.channel && cfg.symmetric) detail::field_error("/symmetric", "give either channel or symmetric, not both");

    if (j.contains("k_users")) {
        if (!j["k_users"].is_number_integer()) detail::field_error("/k_users", "expected an integer");
        cfg.k_users = j["k_users"].get<int>();
        if (cfg.k_users < 2 || cfg.k_users > max_users) detail::field_error("/k_users", "must be in [2, 20]");
    }

    if (j.contains("budgets")) {
        const Json& b = j["budgets"];
        if (b.is_number()) {
            cfg.budgets.per_user = {b.get<double>()};
        } else if (b.is_array()) {
            for (std::size_t i = 0; i < b.size(); ++i)
                cfg.budgets.per_user.push_back(detail::get_number(b[i], "/budgets/" + std::to_string(i)));
        } else if (b.is_object()) {
            cfg.budgets.sweep = detail::parse_grid(b, "/budgets");
        } else {
            detail::field_error("/budgets", "expected a number, a per-user array, or {min, max, steps}");
        }
        for (double v : cfg.budgets.per_user)
            if (!(v >= 0.0) || !std::isfinite(v)) detail::field_error("/budgets", "budgets must be finite and >= 0");
        for (double v : cfg.budgets.sweep)
            if (!(v >= 0.0) || !std::isfinite(v)) detail::field_error("/budgets", "budgets must be finite and >= 0");
    }
    if (j.contains("variance_sweep")) {
        cfg.variance_sweep = detail::parse_grid(j["variance_sweep"], "/variance_sweep");
        if (cfg.variance_sweep.front() < 0.0) detail::field_error("/variance_sweep", "variances must be >= 0");
    }
    if (j.contains("gain_sweep")) {
        cfg.gain_sweep = detail::parse_grid(j["gain_sweep"], "/gain_sweep");
        if (!(cfg.gain_sweep.front() > 0.0)) detail::field_error("/gain_sweep", "cross gains must be > 0");
    }
    if (j.contains("n_samples")) {
        if (!j["n_samples"].is_number_integer() || j["n_samples"].get<long long>() < 1)
            detail::field_error("/n_samples", "expected an integer >= 1");
        cfg.n_samples = j["n_samples"].get<std::size_t>();
    }
    if (j.contains("seed")) {
        if (!j["seed"].is_number_unsigned()) detail::field_error("/seed", "expected a nonnegative integer");
        cfg.seed = j["seed"].get<std::uint64_t>();
    }
    if (j.contains("tol")) {
        cfg.tol = detail::get_number(j["tol"], "/tol");
        if (!(cfg.tol > 0.0)) detail::field_error("/tol", "must be > 0");
    }
    if (j.contains("ia_column")) {
        if (!j["ia_column"].is_boolean()) detail::field_error("/ia_column", "expected true or false");
        cfg.ia_column = j["ia_column"].get<bool>();
    }

    switch (cfg.kind) {
        case ExperimentKind::EvsCheck:
            if (!cfg.channel && !cfg.symmetric) detail::field_error("/channel", "evs_check needs channel or symmetric");
            if (cfg.budgets.per_user.empty() && !cfg.budgets.is_sweep())
                detail::field_error("/budgets", "evs_check needs budgets");
            if (!cfg.budgets.is_sweep()) (void)cfg.budgets.resolve(cfg.channel_users());
            break;
        case ExperimentKind::Fig2aSweep:
        case ExperimentKind::Fig2bSweep:
            if (cfg.variance_sweep.empty()) detail::field_error("/variance_sweep", "required for " + kind);
            break;
        case ExperimentKind::Fig3Sweep:
            if (cfg.gain_sweep.empty()) detail::field_error("/gain_sweep", "required for fig3_sweep");
            break;
        case ExperimentKind::Counterexample: break;
    }
    return cfg;
}

/// Canonical JSON echo of a config; its serialization is what gets hashed.
inline Json to_json(const ExperimentConfig& cfg) {
    Json j;
    j["kind"] = to_string(cfg.kind);
    if (cfg.channel) j["channel"] = to_json(*cfg.channel);
    if (cfg.symmetric)
        j["symmetric"] = Json{{"k_users", cfg.symmetric->k_users}, {"cross_gain_sq", cfg.symmetric->cross_gain_sq}};
    j["k_users"] = cfg.k_users;
    if (cfg.budgets.is_sweep())
        j["budgets"] = Json{{"grid", cfg.budgets.sweep}};
    else
        j["budgets"] = cfg.budgets.per_user;
    if (!cfg.variance_sweep.empty()) j["variance_sweep"] = cfg.variance_sweep;
    if (!cfg.gain_sweep.empty()) j["gain_sweep"] = cfg.gain_sweep;
    j["n_samples"] = cfg.n_samples;
    j["seed"] = cfg.seed;
    j["tol"] = cfg.tol;
    j["ia_column"] = cfg.ia_column;
    return j;
}

} // namespace evs
