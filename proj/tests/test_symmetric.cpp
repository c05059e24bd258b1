#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evs/rate_region.hpp"
#include "evs/symmetric.hpp"

using namespace evs;
using Catch::Approx;

namespace {

bool monte_carlo_evs(int k, double a2, double p) {
    const auto batch = sample_batch(symmetric_to_channel_model({k, a2, p}), 1, 0);
    const RateRegionInputs in(batch, solve_policies(batch, std::vector<double>(k, p)));
    const auto fs = compute_set_functions(in);
    for (const auto& c : check_evs_conditions(fs, 0.0))
        if (!c.holds()) return false;
    return true;
}

} // namespace

TEST_CASE("compound-MAC budget threshold", "[symmetric]") {
    CHECK(cmac_max_power(3, 4.0) == Approx(0.6).margin(1e-15));
    CHECK(cmac_max_power(2, 1.0) == 0.0);
    CHECK(cmac_max_power(3, 0.5) == 0.0);
    CHECK(cmac_max_power(2, 9.0) == Approx(8.0).margin(1e-15));
    CHECK(cmac_max_power(3, 1e12) == Approx(1.0).margin(1e-11));
    CHECK(cmac_max_power(3, 1e12) < cmac_power_supremum(3));
    CHECK(cmac_power_supremum(4) == 0.5);
    CHECK(std::isinf(cmac_power_supremum(2)));
    CHECK_THROWS_AS(cmac_max_power(1, 2.0), ValidationError);
}

TEST_CASE("compound-MAC cross-gain threshold", "[symmetric]") {
    CHECK(*cmac_min_gain(2, 3.0) == 4.0);
    CHECK_FALSE(cmac_min_gain(3, 1.0).has_value());
    CHECK(*cmac_min_gain(10, 0.05) == Approx(1.75).margin(1e-14));

    SECTION("the two thresholds are inverse to each other") {
        for (int k : {2, 3, 5})
            for (double a2 : {1.5, 3.0, 10.0, 40.0}) {
                const double p = cmac_max_power(k, a2);
                REQUIRE(cmac_min_gain(k, p).has_value());
                CHECK(*cmac_min_gain(k, p) == Approx(a2).epsilon(1e-12));
            }
    }
    SECTION("threshold grows with the budget") {
        double prev = 0.0;
        for (double p = 0.0; p < 0.49; p += 0.01) {
            const double g = *cmac_min_gain(4, p);
            CHECK(g > prev);
            prev = g;
        }
    }
}

TEST_CASE("lattice power window", "[symmetric]") {
    CHECK_FALSE(lattice_power_window(4.0).has_value());
    CHECK_FALSE(lattice_power_window(1.0).has_value());
    const auto w = lattice_power_window(6.25);
    REQUIRE(w.has_value());
    CHECK(w->lower == Approx(0.25).margin(1e-15));
    CHECK(w->upper == Approx(4.0).margin(1e-15));
    CHECK(w->contains(1.0));
    CHECK_FALSE(w->contains(0.25));
    CHECK_FALSE(w->contains(4.5));

    for (double a2 : {4.0001, 4.5, 6.25, 10.0, 25.0, 1e6}) {
        const auto win = lattice_power_window(a2);
        REQUIRE(win.has_value());
        for (double p : {win->lower, win->upper}) CHECK((p + 1) * (p + 1) / p == Approx(a2).epsilon(1e-12));
        CHECK(win->lower * win->upper == Approx(1.0).epsilon(1e-15));
    }
    SECTION("window widens as the cross gain grows") {
        double lo = 1.0, hi = 1.0;
        for (double a2 = 4.5; a2 < 100.0; a2 += 0.5) {
            const auto win = *lattice_power_window(a2);
            CHECK(win.lower < lo);
            CHECK(win.upper > hi);
            lo = win.lower;
            hi = win.upper;
        }
    }
}

TEST_CASE("strict condition flags", "[symmetric]") {
    CHECK(cmac_very_strong({3, 4.0, 0.5}));
    CHECK_FALSE(cmac_very_strong({3, 4.0, 0.6}));
    CHECK(lattice_very_strong({3, 6.25, 1.0}));
    CHECK_FALSE(lattice_very_strong({3, 6.25, 4.0}));
    CHECK_FALSE(lattice_very_strong({3, 3.0, 1.0}));
    CHECK_THROWS_AS(cmac_very_strong({3, -1.0, 0.5}), ValidationError);
}

TEST_CASE("closed form matches the per-sample conditions", "[symmetric][property]") {
    for (int k : {2, 3, 4})
        for (double a2 : {1.5, 2.0, 4.0, 9.0, 30.0}) {
            const double p = cmac_max_power(k, a2);
            INFO("K=" << k << " a2=" << a2 << " p=" << p);
            CHECK(monte_carlo_evs(k, a2, p - 1e-4));
            CHECK_FALSE(monte_carlo_evs(k, a2, p + 1e-4));
        }
}

TEST_CASE("symmetric model construction", "[symmetric]") {
    const auto m = symmetric_to_channel_model({3, 4.0, 1.0});
    CHECK(m.is_deterministic());
    for (int r = 0; r < 3; ++r)
        for (int c = 0; c < 3; ++c) CHECK(std::get<ConstantGain>(m.entry(r, c)).gain == (r == c ? 1.0 : 4.0));
}
