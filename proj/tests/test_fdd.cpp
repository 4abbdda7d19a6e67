#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "hdbs/fdd.hpp"
#include "hdbs/rng.hpp"

using namespace hdbs;

TEST_CASE("fdd_rate_pair single-slot arithmetic and endpoints") {
    ChannelTrace t;
    t.slots = {{1.0, 1.0}};
    const FddRates r = fdd_rate_pair(t, 0.5, 1.0, 1.0);
    CHECK(r.r1 == doctest::Approx(0.5 * std::log2(3.0)).epsilon(1e-12));
    CHECK(r.rB == doctest::Approx(0.5 * std::log2(3.0)).epsilon(1e-12));

    const FddRates z = fdd_rate_pair(t, 0.0, 1.0, 1.0);
    CHECK(z.r1 == 0.0);
    CHECK(z.rB > 0.0);
    const FddRates o = fdd_rate_pair(t, 1.0, 1.0, 1.0);
    CHECK(o.rB == 0.0);

    ChannelTrace zero;
    zero.slots = {{0.0, 0.0}, {0.0, 0.0}};
    const FddRates zz = fdd_rate_pair(zero, 0.5, 1.0, 1.0);
    CHECK(zz.r1 == 0.0);
    CHECK(zz.rB == 0.0);
}

TEST_CASE("fdd_throughput_pair saturation and impossibility") {
    const ChannelTrace t = generate_trace(100000, 1.0, 1.0, 8);
    // A rate so small that every slot succeeds: throughput = mu * rate.
    const FddRates lo = fdd_throughput_pair(t, 0.5, 1.0, 1.0, 1e-9, 1e-9);
    CHECK(lo.r1 == doctest::Approx(0.5 * 1e-9).epsilon(1e-9));
    // A rate above every boosted capacity: zero.
    const FddRates hi = fdd_throughput_pair(t, 0.5, 1.0, 1.0, 60.0, 60.0);
    CHECK(hi.r1 == 0.0);
    CHECK(hi.rB == 0.0);
}

TEST_CASE("fdd_throughput_pair matches the exponential-tail closed form") {
    // mu = 1/2, pbar = 1, R = 1, Rayleigh mean 1: threshold (2^1-1)/(1/0.5) = 0.5,
    // throughput = 0.5 * e^{-0.5} ~ 0.3033.
    const std::size_t n = 2000000;
    const ChannelTrace t = generate_trace(n, 1.0, 1.0, 12345);
    const FddRates r = fdd_throughput_pair(t, 0.5, 1.0, 1.0, 1.0, 1.0);
    const double expect = 0.5 * std::exp(-0.5);
    // Monte Carlo standard error of the success fraction is ~3.4e-4.
    CHECK(std::abs(r.r1 - expect) < 3.0 * 0.5 * 3.4e-4);
    CHECK(std::abs(r.rB - expect) < 3.0 * 0.5 * 3.4e-4);
}

TEST_CASE("fdd_optimize_rates dominance and grid behavior") {
    const ChannelTrace t = generate_trace(50000, 3.0, 3.0, 4);
    CHECK_THROWS_AS(fdd_optimize_rates(t, 0.5, 1.0, 1.0, {}), std::invalid_argument);

    // Two-candidate grid where one dominates pointwise.
    const FddOptimizedRates pick = fdd_optimize_rates(t, 0.5, 1.0, 1.0, {1e-9, 1.0});
    CHECK(pick.rate1 == 1.0);
    CHECK(pick.rateB == 1.0);

    // Symmetric links and budgets at mu = 1/2: equal optimized rates.
    const FddOptimizedRates sym =
        fdd_optimize_rates(t, 0.5, 1.0, 1.0, log_spaced_grid(0.05, 20.0, 200));
    CHECK(sym.rate1 == sym.rateB);

    // Against a fine 1-D numeric oracle on the same trace.
    std::vector<double> caps;
    for (const SlotGains& g : t.slots) caps.push_back(std::log2(1.0 + 2.0 * g.gamma1));
    double best = 0.0, best_r = 0.0;
    for (double r = 0.02; r < 20.0; r += 0.002) {
        std::size_t ok = 0;
        for (double c : caps) ok += c >= r;
        const double thr = 0.5 * r * ok / caps.size();
        if (thr > best) {
            best = thr;
            best_r = r;
        }
    }
    CHECK(sym.thr1 >= best * 0.995);
    CHECK(std::abs(sym.rate1 - best_r) / best_r < 0.06);  // grid resolution
}

TEST_CASE("fdd uplink depends only on the uplink trace") {
    ChannelTrace a = generate_trace(20000, 2.0, 2.0, 6);
    ChannelTrace b = a;
    Xoshiro256pp rng(1);
    for (SlotGains& g : b.slots) g.gammaB = rng.next_exponential(5.0);
    const FddRates ra = fdd_rate_pair(a, 0.4, 1.0, 1.0);
    const FddRates rb = fdd_rate_pair(b, 0.4, 1.0, 1.0);
    CHECK(ra.r1 == rb.r1);  // bit-identical
}

TEST_CASE("fdd uplink rate is nondecreasing in mu") {
    const ChannelTrace t = generate_trace(50000, 2.0, 2.0, 14);
    double prev = 0.0;
    for (double mu = 0.0; mu <= 1.0 + 1e-12; mu += 0.05) {
        const FddRates r = fdd_rate_pair(t, std::min(mu, 1.0), 1.0, 1.0);
        CHECK(r.r1 >= prev - 1e-12);
        prev = r.r1;
    }
}
