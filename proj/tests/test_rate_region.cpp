#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>

#include "evs/rate_region.hpp"
#include "evs/symmetric.hpp"
#include "oracles.hpp"

using namespace evs;
using Catch::Approx;

namespace {

ChannelModel mixed_model(int k, std::uint64_t salt) {
    std::mt19937_64 rng(salt);
    std::uniform_real_distribution<double> u(0.2, 4.0);
    std::vector<EntrySpec> entries;
    for (int i = 0; i < k * k; ++i) {
        switch (rng() % 3) {
            case 0: entries.emplace_back(ConstantGain{u(rng)}); break;
            case 1: entries.emplace_back(RayleighPower{u(rng)}); break;
            default: entries.emplace_back(DiscreteGain{{0.0, u(rng), u(rng)}, {0.25, 0.25, 0.5}}); break;
        }
    }
    return ChannelModel(k, entries);
}

std::vector<double> per_sample_powers(const FadingBatch& b, const std::vector<WaterfillingPolicy>& ps) {
    std::vector<double> out(b.n_samples * b.k_users);
    for (std::size_t s = 0; s < b.n_samples; ++s)
        for (int m = 0; m < b.k_users; ++m) out[s * b.k_users + m] = policy_power(ps[m], b.gain(s, m, m));
    return out;
}

} // namespace

TEST_CASE("no interference: each receiver sees only its own user", "[rate]") {
    const auto batch = sample_batch(ChannelModel::constant(2, std::vector<double>{1, 0, 0, 1}), 1, 0);
    const std::vector<double> budgets{1.0, 1.0};
    const RateRegionInputs in(batch, solve_policies(batch, budgets));
    const auto fs = compute_set_functions(in);
    for (int k = 0; k < 2; ++k) {
        CHECK(fs[k](Subset::singleton(k)) == 1.0);
        CHECK(fs[k](Subset::full(2)) == 1.0);
        CHECK(fs[k](Subset::singleton(1 - k)) == 0.0);
    }
}

TEST_CASE("symmetric constant channel reproduces the closed forms", "[rate]") {
    const double a2 = 4.0, p = 0.5;
    const auto batch = sample_batch(symmetric_to_channel_model({3, a2, p}), 3, 0);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(3, p)));
    const auto stats = compute_rate_statistics(in);
    for (int j = 0; j < 3; ++j)
        for_each_nonempty_subset(3, [&](Subset s) {
            const double rx = (s.contains(j) ? p : 0.0) + a2 * p * (s.size() - (s.contains(j) ? 1 : 0));
            CHECK(stats.set_functions[j](s) == Approx(std::log2(1.0 + rx)).margin(1e-14));
            CHECK(stats.set_functions[j].stderr_of(s) == 0.0);
        });
    // analytic margin log2((1 + 2 a2 p + p) / (1 + a2 p + p)) - log2(1 + p)
    const double analytic = std::log2((1 + 2 * a2 * p + p) / (1 + a2 * p + p)) - std::log2(1 + p);
    for (int j = 0; j < 3; ++j)
        for (int u = 0; u < 3; ++u)
            if (u != j) {
                CHECK(stats.evs_margins[j * 3 + u].mean == Approx(analytic).margin(1e-14));
                CHECK(stats.evs_margins[j * 3 + u].m2 == 0.0);
            }
}

TEST_CASE("two-user strong symmetric channel satisfies the conditions", "[rate]") {
    const auto batch = sample_batch(symmetric_to_channel_model({2, 25.0, 1.0}), 1, 0);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>{1.0, 1.0}));
    const auto fs = compute_set_functions(in);
    CHECK(fs[0](Subset::singleton(0)) == 1.0);
    const double rhs = fs[1](Subset::full(2)) - fs[1](Subset::singleton(1));
    CHECK(rhs == Approx(std::log2(27.0) - 1.0).margin(1e-14));
    CHECK(rhs == Approx(3.755).margin(1e-3));
    const auto conds = check_evs_conditions(fs, 1e-9);
    for (const auto& c : conds) CHECK(c.holds());
}

TEST_CASE("set functions match the brute-force oracle on fading batches", "[rate][oracle]") {
    for (int trial = 0; trial < 6; ++trial) {
        const int k = 2 + trial % 3;
        const auto batch = sample_batch(mixed_model(k, 100 + trial), 3000, trial);
        const auto policies = solve_policies(batch, std::vector<double>(k, 0.3 + 0.4 * trial));
        const RateRegionInputs in(batch, policies);
        const auto fs = compute_set_functions(in);
        const auto ref = oracle::set_functions(batch, per_sample_powers(batch, policies));
        for (int j = 0; j < k; ++j)
            for_each_nonempty_subset(k, [&](Subset s) { CHECK(fs[j](s) == Approx(ref[j][s.index()]).margin(1e-12)); });
        for (int u = 0; u < k; ++u) CHECK(fs[u](Subset::singleton(u)) == Approx(policies[u].capacity).margin(1e-12));
    }
}

TEST_CASE("computed set functions are polymatroids with interference penalties", "[rate][property]") {
    for (int trial = 0; trial < 8; ++trial) {
        const int k = 2 + trial % 3;
        const auto batch = sample_batch(mixed_model(k, 7 * trial + 1), 4000, 40 + trial);
        const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(k, 1.0)));
        const auto fs = compute_set_functions(in);
        for (const auto& f : fs) CHECK(check_polymatroid(f, 1e-12).passes());

        // f_j(S | A + {k}) <= f_j(S | A)
        const std::uint32_t all = (1u << k) - 1;
        for (std::uint32_t s = 1; s <= all; ++s)
            for (std::uint32_t a = 0; a <= all; ++a) {
                if (s & a) continue;
                for (int extra = 0; extra < k; ++extra) {
                    if ((s | a) & (1u << extra)) continue;
                    const double with = conditional_rate(in, 0, Subset{s}, Subset{a | (1u << extra)}).mean;
                    const double without = conditional_rate(in, 0, Subset{s}, Subset{a}).mean;
                    CHECK(with <= without + 1e-12);
                }
            }
    }
}

TEST_CASE("larger budgets never shrink any rate bound", "[rate][property]") {
    const auto batch = sample_batch(mixed_model(3, 55), 5000, 2);
    const RateRegionInputs lo(batch, solve_policies(batch, std::vector<double>{0.2, 0.5, 1.0}));
    const RateRegionInputs hi(batch, solve_policies(batch, std::vector<double>{0.4, 0.9, 2.0}));
    const auto a = compute_set_functions(lo), b = compute_set_functions(hi);
    for (int j = 0; j < 3; ++j) for_each_nonempty_subset(3, [&](Subset s) { CHECK(b[j](s) >= a[j](s) - 1e-12); });
}

TEST_CASE("conditional rates obey the chain rule", "[rate]") {
    const auto batch = sample_batch(mixed_model(4, 99), 5000, 8);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(4, 0.7)));
    const auto fs = compute_set_functions(in);

    SECTION("empty interference reduces to the set function") {
        for (int j = 0; j < 4; ++j)
            for_each_nonempty_subset(4, [&](Subset s) {
                CHECK(conditional_rate(in, j, s, Subset{}).mean == Approx(fs[j](s)).margin(1e-12));
            });
    }
    SECTION("f(S + A) = f(A) + f(S | A)") {
        for (std::uint32_t s = 1; s < 16; ++s)
            for (std::uint32_t a = 1; a < 16; ++a) {
                if (s & a) continue;
                const double lhs = fs[2](Subset{s | a});
                const double rhs = fs[2](Subset{a}) + conditional_rate(in, 2, Subset{s}, Subset{a}).mean;
                CHECK(lhs == Approx(rhs).margin(1e-12));
            }
    }
    SECTION("four-term expansion of the tail increment") {
        const Subset all = Subset::full(4);
        for (int j = 0; j < 4; ++j)
            for (int u = 0; u < 4; ++u)
                for (std::uint32_t s = 0; s < 16; ++s) {
                    const Subset ss{s};
                    if (ss.contains(u)) continue;
                    const Subset with_k = ss.with(u);
                    const Subset rest{all.bits() & ~with_k.bits()};
                    const double direct = fs[j](all) - fs[j](all.without(u));
                    const double expanded = fs[j](with_k) + conditional_rate(in, j, rest, with_k).mean - fs[j](ss) -
                                            conditional_rate(in, j, rest, ss).mean;
                    CHECK(direct == Approx(expanded).margin(1e-12));
                    CHECK(direct <= fs[j].gain(ss, u) + 1e-12);
                }
    }
    SECTION("overlapping sets are rejected") {
        CHECK_THROWS_AS(conditional_rate(in, 0, Subset{0b011}, Subset{0b010}), ValidationError);
    }
}

TEST_CASE("inputs must come from the same batch", "[rate]") {
    const auto model = mixed_model(2, 4);
    const auto a = sample_batch(model, 100, 1);
    const auto b = sample_batch(model, 100, 2);
    const std::vector<double> budgets{1.0, 1.0};
    CHECK_THROWS_AS(RateRegionInputs(a, solve_policies(b, budgets)), ValidationError);
    auto ps = solve_policies(a, budgets);
    ps.pop_back();
    CHECK_THROWS_AS(RateRegionInputs(a, ps), ValidationError);
}

TEST_CASE("accumulation is independent of worker count", "[rate]") {
    const auto batch = sample_batch(mixed_model(3, 12), 30'000, 5);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(3, 1.0)));
    const auto one = compute_rate_statistics(in, 1);
    const auto four = compute_rate_statistics(in, 4);
    for (int j = 0; j < 3; ++j)
        for_each_nonempty_subset(3, [&](Subset s) {
            CHECK(one.set_functions[j](s) == four.set_functions[j](s));
            CHECK(one.set_functions[j].stderr_of(s) == four.set_functions[j].stderr_of(s));
        });
    const auto fast1 = evs_margin_moments(in, 1), fast3 = evs_margin_moments(in, 3);
    for (std::size_t i = 0; i < fast1.size(); ++i) {
        CHECK(fast1[i].mean == fast3[i].mean);
        if (fast1[i].count) CHECK(fast1[i].mean == Approx(one.evs_margins[i].mean).margin(1e-12));
    }
}

TEST_CASE("margin stderr reflects shared samples", "[rate]") {
    // the corner constraint of receiver k on {k} is identically zero per sample
    const auto batch = sample_batch(mixed_model(3, 21), 20'000, 3);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(3, 1.0)));
    const auto stats = compute_rate_statistics(in);
    const auto se = stats.margin_stderr();
    for (int j = 0; j < 3; ++j) {
        CHECK(stats.box_margins[j * 7 + Subset::singleton(j).index()].mean == 0.0);
        CHECK(se.box[j * 7 + Subset::singleton(j).index()] == 0.0);
    }
}
