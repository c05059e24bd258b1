#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "evs/channel_model.hpp"

using namespace evs;
using Catch::Matchers::ContainsSubstring;

namespace {

ChannelModel single_entry_model(EntrySpec spec) {
    std::vector<EntrySpec> entries(4, ConstantGain{1.0});
    entries[1] = std::move(spec);
    return ChannelModel(2, std::move(entries));
}

} // namespace

TEST_CASE("constant entries are emitted exactly", "[channel]") {
    const auto model = ChannelModel::constant(2, std::vector<double>{1, 1, 1, 1});
    const auto batch = sample_batch(model, 4, 7);
    REQUIRE(batch.gains.size() == 16);
    for (double g : batch.gains) CHECK(g == 1.0);
    CHECK(model.is_deterministic());
}

TEST_CASE("Rayleigh power gains have the configured mean", "[channel]") {
    const auto batch = sample_batch(single_entry_model(RayleighPower{2.0}), 1'000'000, 11);
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t s = 0; s < batch.n_samples; ++s) {
        const double g = batch.gain(s, 0, 1);
        REQUIRE(g >= 0.0);
        sum += g;
        sumsq += g * g;
    }
    const double n = static_cast<double>(batch.n_samples);
    const double mean = sum / n;
    const double stderr = std::sqrt((sumsq / n - mean * mean) / n);
    // exponential with mean 2 has stdev 2, so stderr ~ 0.002 and the 3-sigma band is [1.994, 2.006]
    CHECK(std::abs(mean - 2.0) < 3.0 * stderr);
    CHECK(mean > 1.99);
    CHECK(mean < 2.01);
    CHECK(std::abs(std::sqrt(sumsq / n - mean * mean) - 2.0) < 0.02);
}

TEST_CASE("discrete gains follow their probabilities", "[channel]") {
    const auto batch = sample_batch(single_entry_model(DiscreteGain{{0.5, 1.5}, {0.5, 0.5}}), 1'000'000, 5);
    std::size_t low = 0;
    for (std::size_t s = 0; s < batch.n_samples; ++s) {
        const double g = batch.gain(s, 0, 1);
        REQUIRE((g == 0.5 || g == 1.5));
        low += g == 0.5 ? 1 : 0;
    }
    const double freq = static_cast<double>(low) / batch.n_samples;
    CHECK(freq > 0.498);
    CHECK(freq < 0.502);
}

TEST_CASE("sampling is reproducible and independent of worker count", "[channel]") {
    std::vector<EntrySpec> entries;
    for (int i = 0; i < 9; ++i) {
        if (i % 4 == 0) entries.emplace_back(ConstantGain{1.0});
        else if (i % 2) entries.emplace_back(RayleighPower{0.5 + i});
        else entries.emplace_back(DiscreteGain{{0.0, 1.0, 3.0}, {0.2, 0.3, 0.5}});
    }
    const ChannelModel model(3, entries);
    const auto a = sample_batch(model, 20'000, 99, 1);
    const auto b = sample_batch(model, 20'000, 99, 1);
    const auto c = sample_batch(model, 20'000, 99, 4);
    const auto d = sample_batch(model, 20'000, 100, 1);
    CHECK(a.gains == b.gains);
    CHECK(a.gains == c.gains);
    CHECK(a.fingerprint == c.fingerprint);
    CHECK(a.gains != d.gains);
    CHECK(a.fingerprint != d.fingerprint);
    for (double g : a.gains) CHECK(g >= 0.0);
}

TEST_CASE("prefixes of a longer batch coincide", "[channel]") {
    const auto model = single_entry_model(RayleighPower{1.0});
    const auto small = sample_batch(model, 100, 3);
    const auto large = sample_batch(model, 1000, 3);
    for (std::size_t i = 0; i < small.gains.size(); ++i) CHECK(small.gains[i] == large.gains[i]);
}

TEST_CASE("constant models have zero variance", "[channel]") {
    const auto batch = sample_batch(ChannelModel::constant(2, std::vector<double>{1, 0.25, 4, 2}), 500, 1);
    for (std::size_t s = 1; s < batch.n_samples; ++s)
        for (int j = 0; j < 2; ++j)
            for (int m = 0; m < 2; ++m) CHECK(batch.gain(s, j, m) == batch.gain(0, j, m));
}

TEST_CASE("invalid entries are rejected with their position", "[channel]") {
    CHECK_THROWS_WITH(single_entry_model(ConstantGain{-1.0}), ContainsSubstring("entry (1,2)"));
    CHECK_THROWS_WITH(single_entry_model(RayleighPower{0.0}), ContainsSubstring("entry (1,2)"));
    CHECK_THROWS_WITH(single_entry_model(DiscreteGain{{1.0, 2.0}, {0.5, 0.4}}), ContainsSubstring("sum to"));
    CHECK_THROWS_WITH(single_entry_model(DiscreteGain{{-1.0}, {1.0}}), ContainsSubstring("entry (1,2)"));
    CHECK_THROWS_AS(single_entry_model(DiscreteGain{{1.0}, {}}), ValidationError);
    CHECK_THROWS_AS(ChannelModel(2, std::vector<EntrySpec>(3, ConstantGain{1.0})), ValidationError);
    CHECK_THROWS_AS(ChannelModel(1, std::vector<EntrySpec>(1, ConstantGain{1.0})), ValidationError);
    CHECK_THROWS_AS(sample_batch(single_entry_model(ConstantGain{1.0}), 0, 1), ValidationError);
}
