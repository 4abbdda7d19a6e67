#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hdbs/channel.hpp"
#include "hdbs/rng.hpp"

using namespace hdbs;

namespace {
constexpr double kC = 299792458.0;
}

TEST_CASE("mean_channel_gain closed form") {
    LinkBudget b;
    b.carrier_hz = 2.4e9;
    b.distance_m = 1.0;
    b.path_loss_exp = 0.0;
    b.tx_antenna_gain = 1.0;
    b.rx_antenna_gain = 1.0;
    // Path-loss factor collapses, only the wavelength term remains.
    const double expect = std::pow(kC / (4.0 * M_PI * 2.4e9), 2.0);
    CHECK(mean_channel_gain(b) == doctest::Approx(expect).epsilon(1e-15));
}

TEST_CASE("mean_channel_gain paper parameters") {
    // Independent hand evaluation of (c/(4 pi f))^2 d^-beta Gtx Grx with
    // f = 1.9 GHz, d = 700 m, beta = 3.6, gains 1 and 10^1.6.
    LinkBudget b;
    b.carrier_hz = 1.9e9;
    b.distance_m = 700.0;
    b.path_loss_exp = 3.6;
    b.tx_antenna_gain = 1.0;
    b.rx_antenna_gain = std::pow(10.0, 1.6);
    const double wl = kC / (4.0 * M_PI * 1.9e9);
    const double expect = wl * wl * std::pow(700.0, -3.6) * std::pow(10.0, 1.6);
    CHECK(mean_channel_gain(b) == doctest::Approx(expect).epsilon(1e-14));
    // Doubling the distance scales the mean gain by 2^-3.6.
    LinkBudget b2 = b;
    b2.distance_m = 1400.0;
    CHECK(mean_channel_gain(b2) / mean_channel_gain(b) ==
          doctest::Approx(std::pow(2.0, -3.6)).epsilon(1e-12));
    b2.distance_m = 0.0;
    CHECK_THROWS_AS(mean_channel_gain(b2), std::invalid_argument);
    b2.distance_m = 700.0;
    b2.carrier_hz = 0.0;
    CHECK_THROWS_AS(mean_channel_gain(b2), std::invalid_argument);
}

TEST_CASE("noise_power definition and linearity") {
    LinkBudget b;
    b.noise_figure_db = 0.0;
    b.bandwidth_hz = 1.0;
    // 10^(-17.4) mW = 10^(-20.4) W
    CHECK(noise_power_w(b) == doctest::Approx(std::pow(10.0, -20.4)).epsilon(1e-12));
    b.noise_figure_db = 2.0;
    b.bandwidth_hz = 200e3;
    const double expect = std::pow(10.0, (-174.0 + 2.0) / 10.0) * 1e-3 * 200e3;
    CHECK(noise_power_w(b) == doctest::Approx(expect).epsilon(1e-12));
    LinkBudget b2 = b;
    b2.bandwidth_hz = 400e3;
    CHECK(noise_power_w(b2) == doctest::Approx(2.0 * noise_power_w(b)).epsilon(1e-12));
}

TEST_CASE("trace generation is deterministic") {
    const ChannelTrace a = generate_trace(5000, 1.3, 0.8, 99);
    const ChannelTrace b = generate_trace(5000, 1.3, 0.8, 99);
    REQUIRE(a.slots.size() == b.slots.size());
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
        CHECK(a.slots[i].gamma1 == b.slots[i].gamma1);
        CHECK(a.slots[i].gammaB == b.slots[i].gammaB);
    }
    const ChannelTrace c = generate_trace(5000, 1.3, 0.8, 100);
    bool any_diff = false;
    for (std::size_t i = 0; i < a.slots.size(); ++i) {
        any_diff |= a.slots[i].gamma1 != c.slots[i].gamma1;
    }
    CHECK(any_diff);
    CHECK_THROWS_AS(generate_trace(0, 1.0, 1.0, 1), std::invalid_argument);
    CHECK_THROWS_AS(generate_trace(10, -1.0, 1.0, 1), std::invalid_argument);
}

TEST_CASE("sample mean near the configured mean") {
    const std::size_t n = 1000000;
    const ChannelTrace t = generate_trace(n, 1.0, 2.0, 4242);
    double s1 = 0.0, sB = 0.0;
    for (const SlotGains& g : t.slots) {
        s1 += g.gamma1;
        sB += g.gammaB;
    }
    // sigma/sqrt(n) = 1e-3; the CLT band [0.99, 1.01] holds with large margin.
    CHECK(s1 / n > 0.99);
    CHECK(s1 / n < 1.01);
    CHECK(sB / n > 1.98);
    CHECK(sB / n < 2.02);
}

TEST_CASE("empirical distribution is exponential (KS test)") {
    const std::size_t n = 100000;
    const ChannelTrace t = generate_trace(n, 1.7, 1.0, 31337);
    std::vector<double> xs(n);
    for (std::size_t i = 0; i < n; ++i) xs[i] = t.slots[i].gamma1 / 1.7;
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double f = 1.0 - std::exp(-xs[i]);
        d = std::max(d, std::abs(f - static_cast<double>(i) / n));
        d = std::max(d, std::abs(static_cast<double>(i + 1) / n - f));
    }
    // 99% asymptotic critical value 1.628 / sqrt(n).
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("links are uncorrelated") {
    const std::size_t n = 1000000;
    const ChannelTrace t = generate_trace(n, 1.0, 1.0, 555);
    double m1 = 0.0, mB = 0.0;
    for (const SlotGains& g : t.slots) {
        m1 += g.gamma1;
        mB += g.gammaB;
    }
    m1 /= n;
    mB /= n;
    double c = 0.0, v1 = 0.0, vB = 0.0;
    for (const SlotGains& g : t.slots) {
        c += (g.gamma1 - m1) * (g.gammaB - mB);
        v1 += (g.gamma1 - m1) * (g.gamma1 - m1);
        vB += (g.gammaB - mB) * (g.gammaB - mB);
    }
    CHECK(std::abs(c / std::sqrt(v1 * vB)) < 0.01);
}

TEST_CASE("trace CSV round trip") {
    const ChannelTrace t = generate_trace(257, 0.9, 3.1, 77);
    const std::string path = "trace_roundtrip_test.csv";
    write_trace_csv(t, path);
    const ChannelTrace r = read_trace_csv(path);
    REQUIRE(r.slots.size() == t.slots.size());
    for (std::size_t i = 0; i < t.slots.size(); ++i) {
        CHECK(r.slots[i].gamma1 == t.slots[i].gamma1);
        CHECK(r.slots[i].gammaB == t.slots[i].gammaB);
    }
    std::remove(path.c_str());
}
