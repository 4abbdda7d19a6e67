#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hdbs/core_model.hpp"
#include "hdbs/rng.hpp"
#include "hdbs/schedulers.hpp"

using namespace hdbs;

namespace {

// Lagrangian value of one decision: mu q1 r1 + (1-mu) qB rB - z1 q1 P1 - zB qB PB.
double lagrangian_value(const SlotDecision& d, const DualState& dual) {
    switch (d.state) {
        case NetworkState::UplinkTx: return dual.mu * d.rate - dual.zeta1 * d.power;
        case NetworkState::DownlinkTx: return (1.0 - dual.mu) * d.rate - dual.zetaB * d.power;
        case NetworkState::Silent: return 0.0;
    }
    return 0.0;
}

// Enumeration oracle for the adaptive scheme: best per-slot Lagrangian over
// {silent, uplink, downlink} with powers on a grid.
double enumerate_adaptive(const SlotGains& g, const DualState& dual, int grid) {
    double best = 0.0;  // silent
    auto scan = [&](double gamma, double weight, double zeta) {
        if (gamma <= 0.0) return;
        const double pmax = 2.0 * weight / (zeta * std::numbers::ln2) + 1.0;
        for (int i = 0; i <= grid; ++i) {
            const double p = pmax * i / grid;
            best = std::max(best, weight * std::log2(1.0 + p * gamma) - zeta * p);
        }
    };
    scan(g.gamma1, dual.mu, dual.zeta1);
    scan(g.gammaB, 1.0 - dual.mu, dual.zetaB);
    return best;
}

double enumerate_fixed(const SlotGains& g, const DualState& dual) {
    const double l1 =
        dual.mu * std::log2(1.0 + dual.p1_fixed * g.gamma1) - dual.zeta1 * dual.p1_fixed;
    const double lB = (1.0 - dual.mu) * std::log2(1.0 + dual.pB_fixed * g.gammaB) -
                      dual.zetaB * dual.pB_fixed;
    return std::max({0.0, l1, lB});
}

double enumerate_discrete(const SlotGains& g, const DualState& dual,
                          const DiscreteRateSet& r1, const DiscreteRateSet& rB) {
    double best = 0.0;
    for (std::size_t m = 0; m < r1.size(); ++m) {
        const double o = discrete_supportable(dual.p1_fixed, g.gamma1, r1[m]) ? 1.0 : 0.0;
        best = std::max(best, dual.mu * r1[m] * o - dual.zeta1 * dual.p1_fixed);
    }
    for (std::size_t l = 0; l < rB.size(); ++l) {
        const double o = discrete_supportable(dual.pB_fixed, g.gammaB, rB[l]) ? 1.0 : 0.0;
        best = std::max(best, (1.0 - dual.mu) * rB[l] * o - dual.zetaB * dual.pB_fixed);
    }
    return best;
}

}  // namespace

TEST_CASE("waterfill_power matches a grid-search oracle") {
    // weight 0.5, zeta = 0.5/(2 ln2): water level 2, so gain 1 gives power 1.
    const double zeta = 0.5 / (2.0 * std::numbers::ln2);
    const double p = waterfill_power(1.0, 0.5, zeta);
    CHECK(p == doctest::Approx(1.0).epsilon(1e-12));
    // Independent oracle: maximize 0.5*log2(1+P) - zeta*P over P in [0,100].
    double best_p = 0.0, best_u = -1.0;
    for (int i = 0; i <= 1000000; ++i) {
        const double cand = 1e-4 * i;
        const double u = 0.5 * std::log2(1.0 + cand) - zeta * cand;
        if (u > best_u) {
            best_u = u;
            best_p = cand;
        }
    }
    CHECK(std::abs(best_p - p) < 2e-4);
    const double ours = 0.5 * std::log2(1.0 + p) - zeta * p;
    CHECK(ours >= best_u - 1e-9);
}

TEST_CASE("waterfill_power threshold and edge cases") {
    const double weight = 0.7, zeta = 0.3;
    const double th = zeta * std::numbers::ln2 / weight;
    CHECK(waterfill_power(th * 0.999, weight, zeta) == 0.0);
    CHECK(waterfill_power(th * 1.001, weight, zeta) > 0.0);
    CHECK(waterfill_power(0.0, weight, zeta) == 0.0);
    CHECK(waterfill_power(1.0, 0.0, zeta) == 0.0);  // zero weight
    CHECK_THROWS_AS(waterfill_power(1.0, 0.5, 0.0), std::invalid_argument);
    CHECK_THROWS_AS(waterfill_power(-1.0, 0.5, 0.1), std::invalid_argument);
}

TEST_CASE("decide_adaptive endpoints and silence") {
    DualState d;
    d.mu = 1.0;
    d.zeta1 = 0.2;
    d.zetaB = 0.2;
    // Any gains with Lambda1 > 0 give the uplink; downlink weight is zero.
    const SlotDecision up = decide_adaptive({5.0, 100.0}, d);
    CHECK(up.state == NetworkState::UplinkTx);
    CHECK(up.rate > 0.0);

    d.mu = 0.5;
    d.zeta1 = 1.0;
    d.zetaB = 1.0;
    // Both gains below their thresholds zeta*ln2/weight -> silent, zero power.
    const double threshold = 1.0 * std::numbers::ln2 / 0.5;
    const SlotDecision s = decide_adaptive({threshold * 0.9, threshold * 0.9}, d);
    CHECK(s.state == NetworkState::Silent);
    CHECK(s.power == 0.0);
    CHECK(s.rate == 0.0);
}

TEST_CASE("decide_adaptive symmetric case prefers the stronger gain") {
    DualState d;
    d.mu = 0.5;
    d.zeta1 = 0.1;
    d.zetaB = 0.1;
    Xoshiro256pp rng(3);
    for (int i = 0; i < 2000; ++i) {
        const double lo = 0.5 + rng.next_exponential(2.0);
        const double hi = lo + 0.1 + rng.next_exponential(2.0);
        const SlotDecision dec = decide_adaptive({hi, lo}, d);
        // Lambda is strictly increasing in gain at the water-filled power, so
        // the uplink (stronger) wins whenever anything transmits.
        if (dec.state != NetworkState::Silent) {
            CHECK(dec.state == NetworkState::UplinkTx);
        }
        const SlotDecision mirrored = decide_adaptive({lo, hi}, d);
        if (mirrored.state != NetworkState::Silent) {
            CHECK(mirrored.state == NetworkState::DownlinkTx);
        }
    }
}

TEST_CASE("decide_fixed examples") {
    DualState d;
    d.mu = 0.5;
    d.zeta1 = 0.1;
    d.zetaB = 0.1;
    d.p1_fixed = 1.0;
    d.pB_fixed = 1.0;
    const SlotDecision s = decide_fixed({0.0, 0.0}, d);
    CHECK(s.state == NetworkState::Silent);

    // gamma1 = 3: Lambda1 = 0.5*log2(4) - 0.1 = 0.9, dominates a silent slot.
    const SlotDecision up = decide_fixed({3.0, 0.0}, d);
    CHECK(up.state == NetworkState::UplinkTx);
    CHECK(up.rate == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(up.power == 1.0);
    CHECK(0.5 * up.rate - 0.1 * up.power == doctest::Approx(0.9).epsilon(1e-12));

    // Symmetric weights and prices: the larger gain wins.
    const SlotDecision w = decide_fixed({2.0, 1.0}, d);
    CHECK(w.state == NetworkState::UplinkTx);
    const SlotDecision w2 = decide_fixed({1.0, 2.0}, d);
    CHECK(w2.state == NetworkState::DownlinkTx);
}

TEST_CASE("decide_discrete examples") {
    const DiscreteRateSet r0({1.0});
    DualState d;
    d.mu = 0.5;
    d.zeta1 = 0.1;
    d.zetaB = 0.1;
    d.p1_fixed = 1.0;
    d.pB_fixed = 1.0;
    // Neither link supports the rate: silent, outage on both links.
    const SlotDecision s = decide_discrete({0.1, 0.1}, d, r0, r0);
    CHECK(s.state == NetworkState::Silent);
    CHECK(s.outage);

    // O1 = 1, OB = 0: uplink.
    const SlotDecision up = decide_discrete({1.5, 0.1}, d, r0, r0);
    CHECK(up.state == NetworkState::UplinkTx);
    CHECK(up.rate == 1.0);
    CHECK_FALSE(up.outage);
    REQUIRE(up.rate_index.has_value());
    CHECK(*up.rate_index == 0);

    // Tie with both supported goes to the uplink.
    const SlotDecision tie = decide_discrete({1.5, 1.5}, d, r0, r0);
    CHECK(tie.state == NetworkState::UplinkTx);

    // rates {1,2}, capacity1 = 2.5, capacityB = 1.5, equal zeta*P:
    // Lambda1 = 0.5*2 - zP > LambdaB = 0.5*1 - zP -> uplink at rate 2.
    const DiscreteRateSet r12({1.0, 2.0});
    const SlotDecision two = decide_discrete(
        {std::exp2(2.5) - 1.0, std::exp2(1.5) - 1.0}, d, r12, r12);
    CHECK(two.state == NetworkState::UplinkTx);
    CHECK(two.rate == 2.0);
}

TEST_CASE("per-slot Lagrangian optimality (enumeration oracle)") {
    Xoshiro256pp rng(2024);
    const int n = 400;
    for (int i = 0; i < n; ++i) {
        SlotGains g{rng.next_exponential(2.0), rng.next_exponential(2.0)};
        DualState d;
        d.mu = 0.05 + 0.9 * rng.next_double();
        d.zeta1 = 0.05 + rng.next_double();
        d.zetaB = 0.05 + rng.next_double();
        d.p1_fixed = 0.1 + 4.0 * rng.next_double();
        d.pB_fixed = 0.1 + 4.0 * rng.next_double();

        const SlotDecision a = decide_adaptive(g, d);
        CHECK(lagrangian_value(a, d) >= enumerate_adaptive(g, d, 2000) - 1e-6);

        const SlotDecision f = decide_fixed(g, d);
        CHECK(lagrangian_value(f, d) >= enumerate_fixed(g, d) - 1e-12);

        const DiscreteRateSet r1 = DiscreteRateSet::ladder(1 + (rng.next() % 4),
                                                           0.5 + rng.next_double());
        const DiscreteRateSet rB = DiscreteRateSet::ladder(1 + (rng.next() % 4),
                                                           0.5 + rng.next_double());
        const SlotDecision dd = decide_discrete(g, d, r1, rB);
        CHECK(lagrangian_value(dd, d) >= enumerate_discrete(g, d, r1, rB) - 1e-12);
    }
}

TEST_CASE("zero-weight exclusion over random slots") {
    Xoshiro256pp rng(9);
    DualState d;
    d.zeta1 = 0.3;
    d.zetaB = 0.3;
    d.p1_fixed = 2.0;
    d.pB_fixed = 2.0;
    const DiscreteRateSet rset({0.5, 1.0, 2.0});
    for (int i = 0; i < 100000; ++i) {
        SlotGains g{rng.next_exponential(3.0), rng.next_exponential(3.0)};
        d.mu = 1.0;
        CHECK(decide_adaptive(g, d).state != NetworkState::DownlinkTx);
        CHECK(decide_fixed(g, d).state != NetworkState::DownlinkTx);
        CHECK(decide_discrete(g, d, rset, rset).state != NetworkState::DownlinkTx);
        d.mu = 0.0;
        CHECK(decide_adaptive(g, d).state != NetworkState::UplinkTx);
        CHECK(decide_fixed(g, d).state != NetworkState::UplinkTx);
        CHECK(decide_discrete(g, d, rset, rset).state != NetworkState::UplinkTx);
    }
}

TEST_CASE("discrete transmissions always carry a supportable rate") {
    Xoshiro256pp rng(17);
    const DiscreteRateSet rset({0.5, 1.0, 1.5, 2.0});
    for (int i = 0; i < 100000; ++i) {
        SlotGains g{rng.next_exponential(2.0), rng.next_exponential(2.0)};
        DualState d;
        d.mu = rng.next_double();
        d.zeta1 = 0.2 * rng.next_double();
        d.zetaB = 0.2 * rng.next_double();
        d.p1_fixed = 0.5 + 2.0 * rng.next_double();
        d.pB_fixed = 0.5 + 2.0 * rng.next_double();
        const SlotDecision dec = decide_discrete(g, d, rset, rset);
        if (dec.state == NetworkState::UplinkTx) {
            CHECK(dec.rate > 0.0);
            CHECK(discrete_supportable(dec.power, g.gamma1, dec.rate));
            CHECK_FALSE(dec.outage);
        } else if (dec.state == NetworkState::DownlinkTx) {
            CHECK(dec.rate > 0.0);
            CHECK(discrete_supportable(dec.power, g.gammaB, dec.rate));
            CHECK_FALSE(dec.outage);
        } else {
            CHECK(dec.outage);
        }
    }
}

TEST_CASE("state implies power accounting") {
    Xoshiro256pp rng(5);
    for (int i = 0; i < 5000; ++i) {
        SlotGains g{rng.next_exponential(1.0), rng.next_exponential(1.0)};
        DualState d;
        d.mu = rng.next_double();
        d.zeta1 = 0.05 + rng.next_double();
        d.zetaB = 0.05 + rng.next_double();
        const SlotDecision dec = decide_adaptive(g, d);
        if (dec.state == NetworkState::Silent) {
            CHECK(dec.power == 0.0);
            CHECK(dec.rate == 0.0);
        }
    }
}
