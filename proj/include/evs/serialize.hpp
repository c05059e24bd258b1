#pragma once

#include <cmath>
#include <string>

#include "json.hpp"

#include "evs/channel_model.hpp"
#include "evs/polymatroid.hpp"
#include "evs/waterfilling.hpp"

namespace evs {

using Json = nlohmann::ordered_json;

/// NaN and infinities are not representable in JSON; they serialize as null.
inline Json number_or_null(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

// ---------------------------------------------------------------------------
// Channel model: {"k_users": K, "entries": [{"kind": ..., "params": {...}}, ...]}

inline Json to_json(const EntrySpec& e) {
    Json j;
    if (const auto* c = std::get_if<ConstantGain>(&e)) {
        j["kind"] = "constant";
        j["params"] = Json{{"gain", c->gain}};
    } else if (const auto* r = std::get_if<RayleighPower>(&e)) {
        j["kind"] = "rayleigh";
        j["params"] = Json{{"mean", r->mean}};
    } else {
        const auto& d = std::get<DiscreteGain>(e);
        Json atoms = Json::array();
        for (std::size_t i = 0; i < d.gains.size(); ++i) atoms.push_back(Json::array({d.gains[i], d.probs[i]}));
        j["kind"] = "discrete";
        j["params"] = Json{{"atoms", atoms}};
    }
    return j;
}

inline Json to_json(const ChannelModel& model) {
    Json entries = Json::array();
    for (const auto& e : model.entries()) entries.push_back(to_json(e));
    return Json{{"k_users", model.k_users()}, {"entries", entries}};
}

// ---------------------------------------------------------------------------
// Set functions: {"k_users": K, "label": ..., "values": {"1": v, "1,2": v, ...}}
// Keys are listed in increasing bitmask order.

inline Json to_json(const SetFunction& f) {
    Json values = Json::object();
    Json stderrs = Json::object();
    for_each_nonempty_subset(f.k_users(), [&](Subset s) {
        values[s.key()] = f(s);
        if (f.has_stderr()) stderrs[s.key()] = f.stderr_of(s);
    });
    Json j{{"k_users", f.k_users()}, {"label", f.label()}, {"values", values}};
    if (f.has_stderr()) j["stderr"] = stderrs;
    return j;
}

inline SetFunction set_function_from_json(const Json& j) {
    const int k = j.at("k_users").get<int>();
    if (k < 1 || k > max_users) throw ValidationError("set function k_users out of range");
    std::vector<double> values(nonempty_subset_count(k), std::numeric_limits<double>::quiet_NaN());
    auto read_map = [&](const Json& map, std::vector<double>& out) {
        for (const auto& [key, v] : map.items()) {
            Subset s;
            if (!parse_subset_key(key, k, s)) throw ValidationError("bad subset key \"" + key + "\"");
            out[s.index()] = v.get<double>();
        }
    };
    read_map(j.at("values"), values);
    for_each_nonempty_subset(k, [&](Subset s) {
        if (std::isnan(values[s.index()])) throw ValidationError("missing value for subset \"" + s.key() + "\"");
    });
    std::vector<double> stderrs;
    if (j.contains("stderr")) {
        stderrs.assign(values.size(), 0.0);
        read_map(j.at("stderr"), stderrs);
    }
    return SetFunction(k, std::move(values), j.value("label", std::string{}), std::move(stderrs));
}

// ---------------------------------------------------------------------------
// Reports

inline Json to_json(const WaterfillingPolicy& p) {
    return Json{{"user", p.user + 1}, {"budget", p.budget}, {"water_level", p.water_level}, {"capacity", p.capacity}};
}

inline Json to_json(const PolymatroidReport& r) {
    return Json{{"passes", r.passes()},
                {"exhaustive", r.exhaustive},
                {"nonnegativity_violation", r.nonnegativity_violation},
                {"monotonicity_violation", r.monotonicity_violation},
                {"submodularity_violation", r.submodularity_violation}};
}

inline Json to_json(const Membership& m) {
    return Json{{"member", m.member},
                {"tightest_receiver", m.receiver + 1},
                {"tightest_set", m.set.key()},
                {"tightest_margin", number_or_null(m.margin)}};
}

inline Json to_json(const EvsCondition& c) {
    return Json{{"j", c.receiver + 1}, {"k", c.user + 1}, {"lhs", c.lhs},       {"rhs", c.rhs},
                {"margin", c.margin},  {"stderr", c.stderr}, {"status", to_string(c.status)}};
}

inline Json to_json(const FullConditionReport& r) {
    Json worst = Json::array();
    for (int j = 0; j < r.k_users; ++j)
        for (int u = 0; u < r.k_users; ++u)
            if (u != j) worst.push_back(Json{{"j", j + 1}, {"k", u + 1}, {"worst_margin", r.worst(j, u)}});
    Json failing = Json::array();
    for (const auto& c : r.conditions)
        if (!c.holds)
            failing.push_back(Json{{"j", c.receiver + 1}, {"k", c.user + 1}, {"set", c.set.key()}, {"margin", c.margin}});
    return Json{{"count", r.conditions.size()},
                {"holding", r.holding},
                {"all_hold", r.all_hold()},
                {"worst_by_pair", worst},
                {"failing", failing}};
}

inline Json to_json(const TelescopingReport& t) {
    return Json{{"direct_holds", t.direct_holds},
                {"direct_worst_set", t.direct_worst.key()},
                {"direct_margin", number_or_null(t.direct_margin)},
                {"premise_holds", t.premise_holds},
                {"increments_hold", t.increments_hold},
                {"chain_holds", t.chain_holds}};
}

inline Json to_json(const EvsReport& r) {
    Json conds = Json::array();
    for (const auto& c : r.evs_conditions) conds.push_back(to_json(c));
    return Json{{"verdict", to_string(r.verdict)},
                {"indeterminate", r.indeterminate},
                {"tol", r.tol},
                {"corner", r.corner.rates},
                {"evs_conditions", conds},
                {"full_conditions", to_json(r.full_conditions)},
                {"box_membership", to_json(r.box_membership)}};
}

} // namespace evs
