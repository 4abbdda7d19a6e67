#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <numbers>

#include "hdbs/calibration.hpp"
#include "hdbs/rng.hpp"

using namespace hdbs;

namespace {

SchemeConfig adaptive_cfg(double mu, double pb1 = 1.0, double pbB = 1.0) {
    SchemeConfig sc;
    sc.scheme = Scheme::AdaptivePower;
    sc.mu = mu;
    sc.pbar1 = pb1;
    sc.pbarB = pbB;
    return sc;
}

}  // namespace

TEST_CASE("average_consumed_power basics") {
    const ChannelTrace t = generate_trace(20000, 2.0, 2.0, 1);
    SchemeConfig sc = adaptive_cfg(0.5);
    DualState d;
    d.mu = 0.5;
    d.zeta1 = 1e6;  // price so high nothing transmits
    d.zetaB = 1e6;
    CHECK(average_consumed_power(t, sc, d, Link::Uplink) == 0.0);
    CHECK(average_consumed_power(t, sc, d, Link::Downlink) == 0.0);

    // mu = 1: the downlink never consumes anything.
    sc.mu = 1.0;
    d.mu = 1.0;
    d.zeta1 = 0.3;
    d.zetaB = 0.3;
    CHECK(average_consumed_power(t, sc, d, Link::Downlink) == 0.0);
    CHECK(average_consumed_power(t, sc, d, Link::Uplink) > 0.0);
}

TEST_CASE("average_consumed_power matches a hand-simulated tiny trace") {
    // Eight hand-picked slots, fixed-power scheme; walk the decision rule by
    // hand and compare the aggregate.
    ChannelTrace t;
    t.slots = {{3.0, 0.2}, {0.0, 0.0}, {1.0, 1.0}, {0.1, 4.0},
               {2.0, 2.0}, {0.05, 0.1}, {6.0, 0.5}, {0.3, 3.0}};
    SchemeConfig sc;
    sc.scheme = Scheme::FixedPower;
    sc.mu = 0.5;
    sc.p1_fixed = 1.0;
    sc.pB_fixed = 2.0;
    DualState d;
    d.mu = 0.5;
    d.zeta1 = 0.1;
    d.zetaB = 0.1;
    d.p1_fixed = 1.0;
    d.pB_fixed = 2.0;
    // Per slot: L1 = 0.5 log2(1+g1) - 0.1, LB = 0.5 log2(1+2 gB) - 0.2.
    std::size_t up = 0, down = 0;
    for (const SlotGains& g : t.slots) {
        const double l1 = 0.5 * std::log2(1.0 + g.gamma1) - 0.1;
        const double lB = 0.5 * std::log2(1.0 + 2.0 * g.gammaB) - 0.2;
        if (l1 >= lB && l1 > 0.0) {
            ++up;
        } else if (lB > l1 && lB > 0.0) {
            ++down;
        }
    }
    const double c1 = average_consumed_power(t, sc, d, Link::Uplink);
    const double cB = average_consumed_power(t, sc, d, Link::Downlink);
    CHECK(c1 == doctest::Approx(1.0 * up / 8.0).epsilon(1e-15));
    CHECK(cB == doctest::Approx(2.0 * down / 8.0).epsilon(1e-15));
}

TEST_CASE("calibrate_zeta meets the budget with equality") {
    const ChannelTrace t = generate_trace(200000, 10.0, 10.0, 42);
    const SchemeConfig sc = adaptive_cfg(0.5);
    const CalibResult r = calibrate_zeta(t, sc);
    CHECK(r.converged);
    CHECK(r.binding1);
    CHECK(r.bindingB);
    CHECK(std::abs(r.consumed1 - 1.0) <= 1e-3);
    CHECK(std::abs(r.consumedB - 1.0) <= 1e-3);
    CHECK(r.dual.zeta1 > 0.0);
    CHECK(r.dual.zetaB > 0.0);
}

TEST_CASE("calibrate_zeta consistency: reported consumption re-simulates bit-stably") {
    const ChannelTrace t = generate_trace(100000, 5.0, 7.0, 7);
    const SchemeConfig sc = adaptive_cfg(0.4);
    const CalibResult r = calibrate_zeta(t, sc);
    const double c1 = average_consumed_power(t, sc, r.dual, Link::Uplink);
    const double cB = average_consumed_power(t, sc, r.dual, Link::Downlink);
    CHECK(c1 == r.consumed1);  // bit-stable
    CHECK(cB == r.consumedB);
}

TEST_CASE("calibrate_zeta loose budget drives the price to zero") {
    // Fixed-power scheme: consumption is capped at P_fixed, so a huge budget
    // cannot bind and the returned price is zero with everything transmitting.
    const ChannelTrace t = generate_trace(50000, 5.0, 5.0, 3);
    SchemeConfig sc;
    sc.scheme = Scheme::FixedPower;
    sc.mu = 0.5;
    sc.p1_fixed = 1.0;
    sc.pB_fixed = 1.0;
    sc.pbar1 = 1000.0;
    sc.pbarB = 1000.0;
    CalibOptions opt;
    opt.throw_on_failure = false;
    const CalibResult r = calibrate_zeta(t, sc, opt);
    CHECK_FALSE(r.binding1);
    CHECK_FALSE(r.bindingB);
    CHECK(r.dual.zeta1 == 0.0);
    CHECK(r.dual.zetaB == 0.0);
    // With zero prices every slot with a positive gain transmits on one side.
    CHECK(r.consumed1 + r.consumedB ==
          doctest::Approx(1.0).epsilon(1e-6));  // (P1 = PB = 1, nothing silent)
}

TEST_CASE("calibrate_zeta symmetric setup gives symmetric prices") {
    const ChannelTrace t = generate_trace(200000, 8.0, 8.0, 11);
    const SchemeConfig sc = adaptive_cfg(0.5);
    const CalibResult r = calibrate_zeta(t, sc);
    // Swap-links oracle: calibrating the mirrored trace swaps the prices.
    ChannelTrace swapped = t;
    for (SlotGains& g : swapped.slots) std::swap(g.gamma1, g.gammaB);
    const CalibResult rs = calibrate_zeta(swapped, sc);
    CHECK(r.dual.zeta1 == doctest::Approx(rs.dual.zetaB).epsilon(0.02));
    CHECK(r.dual.zetaB == doctest::Approx(rs.dual.zeta1).epsilon(0.02));
    // And the two links of one run agree to 2% on an i.i.d. trace.
    CHECK(r.dual.zeta1 == doctest::Approx(r.dual.zetaB).epsilon(0.02));
}

TEST_CASE("calibrated duals hold out of sample") {
    const ChannelTrace cal = generate_trace(400000, 10.0, 10.0, 21);
    const ChannelTrace fresh = generate_trace(400000, 10.0, 10.0, 22);
    const SchemeConfig sc = adaptive_cfg(0.5);
    const CalibResult r = calibrate_zeta(cal, sc);
    const double c1 = average_consumed_power(fresh, sc, r.dual, Link::Uplink);
    const double cB = average_consumed_power(fresh, sc, r.dual, Link::Downlink);
    CHECK(std::abs(c1 - 1.0) < 0.02);
    CHECK(std::abs(cB - 1.0) < 0.02);
}

TEST_CASE("consumed power is nonincreasing in the own price") {
    const ChannelTrace t = generate_trace(50000, 6.0, 6.0, 13);
    const SchemeConfig sc = adaptive_cfg(0.5);
    DualState d;
    d.mu = 0.5;
    d.zetaB = 0.4;
    double prev = std::numeric_limits<double>::infinity();
    for (double z = 0.05; z < 3.0; z *= 1.5) {
        d.zeta1 = z;
        const double c = average_consumed_power(t, sc, d, Link::Uplink);
        CHECK(c <= prev + 1e-12);
        prev = c;
    }
}

TEST_CASE("solve_fixed_powers single-slot trace reproduces the water-filling relation") {
    ChannelTrace t;
    t.slots = {{2.5, 1.0}};
    const FixedPowerSolution s = solve_fixed_powers(t, 1.0, 0.7, 1.0);
    // The only slot transmits and consumes the budget with equality.
    CHECK(s.dual.p1_fixed == doctest::Approx(0.7).epsilon(1e-3));
    // Stationarity pins zeta to mu*gamma/(ln2 (1+P gamma)), i.e. the
    // water-filling relation P = mu/(zeta ln2) - 1/gamma.
    const double p_wf = 1.0 / (s.dual.zeta1 * std::numbers::ln2) - 1.0 / 2.5;
    CHECK(p_wf == doctest::Approx(s.dual.p1_fixed).epsilon(1e-6));
}

TEST_CASE("solve_fixed_powers symmetric setup") {
    const ChannelTrace t = generate_trace(150000, 10.0, 10.0, 31);
    const FixedPowerSolution s = solve_fixed_powers(t, 0.5, 1.0, 1.0);
    CHECK(s.converged);
    CHECK(s.dual.p1_fixed == doctest::Approx(s.dual.pB_fixed).epsilon(0.02));
    CHECK(std::abs(s.consumed1 - 1.0) <= 2e-3);
    CHECK(std::abs(s.consumedB - 1.0) <= 2e-3);
}

TEST_CASE("solve_fixed_powers against a 2-D grid-search oracle") {
    // 50x50 grid over (P1, PB) with per-point zeta calibration on a short
    // trace; the solver's weighted objective must come within 1%.
    const ChannelTrace t = generate_trace(10000, 5.0, 5.0, 57);
    const double mu = 0.5;
    CalibOptions opt;
    opt.throw_on_failure = false;
    const FixedPowerSolution s = solve_fixed_powers(t, mu, 1.0, 1.0, opt);
    SchemeConfig sc;
    sc.scheme = Scheme::FixedPower;
    sc.mu = mu;
    {
        sc.p1_fixed = s.dual.p1_fixed;
        sc.pB_fixed = s.dual.pB_fixed;
    }
    const RunStats ours = simulate(t, sc, s.dual);
    const double our_obj = mu * ours.r1_avg + (1.0 - mu) * ours.rB_avg;

    double best_obj = 0.0;
    for (int i = 1; i <= 50; ++i) {
        for (int j = 1; j <= 50; ++j) {
            SchemeConfig g;
            g.scheme = Scheme::FixedPower;
            g.mu = mu;
            g.pbar1 = 1.0;
            g.pbarB = 1.0;
            g.p1_fixed = 8.0 * i / 50.0;
            g.pB_fixed = 8.0 * j / 50.0;
            const CalibResult c = calibrate_zeta(t, g, opt);
            if (c.consumed1 > 1.0 * (1.0 + 5e-3) || c.consumedB > 1.0 * (1.0 + 5e-3)) continue;
            const RunStats st = simulate(t, g, c.dual);
            best_obj = std::max(best_obj, mu * st.r1_avg + (1.0 - mu) * st.rB_avg);
        }
    }
    CHECK(our_obj >= best_obj * 0.99);
}

TEST_CASE("solve_discrete_powers saturation and symmetry") {
    const ChannelTrace t = generate_trace(60000, 10.0, 10.0, 71);
    const DiscreteRateSet r0({1.0});

    // Very high budgets: the chosen power drives the support probability
    // towards one and the throughput towards R0 times the selection fraction.
    {
        CalibOptions opt;
        opt.throw_on_failure = false;
        const DiscreteSolution s = solve_discrete_powers(t, 0.5, 50.0, 50.0, r0, r0, opt);
        SchemeConfig sc;
        sc.scheme = Scheme::DiscreteRate;
        sc.mu = 0.5;
        sc.rates1 = r0;
        sc.ratesB = r0;
        sc.p1_fixed = s.dual.p1_fixed;
        sc.pB_fixed = s.dual.pB_fixed;
        const RunStats st = simulate(t, sc, s.dual);
        const double selection_fraction =
            static_cast<double>(st.uplink_slots + st.downlink_slots) /
            static_cast<double>(st.slots);
        CHECK(selection_fraction > 0.99);
        CHECK(st.r1_avg + st.rB_avg ==
              doctest::Approx(1.0 * selection_fraction).epsilon(1e-6));
    }

    // Swap-links mirror oracle: solving the mirrored problem mirrors the
    // solution. (The two powers of one run differ structurally at M = 1: the
    // tie rule hands every doubly-supportable slot to one link, so the other
    // link needs a much larger power to bind its budget.)
    {
        const DiscreteSolution s = solve_discrete_powers(t, 0.5, 1.0, 1.0, r0, r0);
        ChannelTrace swapped = t;
        for (SlotGains& g : swapped.slots) std::swap(g.gamma1, g.gammaB);
        const DiscreteSolution sm = solve_discrete_powers(swapped, 0.5, 1.0, 1.0, r0, r0);
        CHECK(s.dual.p1_fixed == doctest::Approx(sm.dual.pB_fixed).epsilon(0.02));
        CHECK(s.dual.pB_fixed == doctest::Approx(sm.dual.p1_fixed).epsilon(0.02));
        CHECK(std::abs(s.consumed1 - 1.0) <= 2e-3);
        CHECK(std::abs(s.consumedB - 1.0) <= 2e-3);
    }
}

TEST_CASE("solve_discrete_powers against a power-grid oracle") {
    const ChannelTrace t = generate_trace(20000, 5.0, 5.0, 99);
    const DiscreteRateSet r0({1.5});
    const double mu = 0.5;
    CalibOptions opt;
    opt.throw_on_failure = false;
    const DiscreteSolution s = solve_discrete_powers(t, mu, 1.0, 1.0, r0, r0, opt);
    const double our_obj = mu * s.thr1 + (1.0 - mu) * s.thrB;

    // 100-point log grid per link (joint scan decoupled as two nested 10-point
    // passes around the relevant range) with zeta recalibration.
    double best_obj = 0.0;
    for (int i = 0; i < 10; ++i) {
        for (int j = 0; j < 10; ++j) {
            SchemeConfig g;
            g.scheme = Scheme::DiscreteRate;
            g.mu = mu;
            g.pbar1 = 1.0;
            g.pbarB = 1.0;
            g.rates1 = r0;
            g.ratesB = r0;
            g.p1_fixed = std::exp(std::log(0.8) + (std::log(400.0) - std::log(0.8)) * i / 9.0);
            g.pB_fixed = std::exp(std::log(0.8) + (std::log(400.0) - std::log(0.8)) * j / 9.0);
            const CalibResult c = calibrate_zeta(t, g, opt);
            if (c.consumed1 > 1.0 + 5e-3 || c.consumedB > 1.0 + 5e-3) continue;
            const RunStats st = simulate(t, g, c.dual);
            best_obj = std::max(best_obj, mu * st.r1_avg + (1.0 - mu) * st.rB_avg);
        }
    }
    CHECK(our_obj >= best_obj * 0.99);
}

TEST_CASE("calibration record format") {
    const ChannelTrace t = generate_trace(1000, 2.0, 2.0, 5);
    const SchemeConfig sc = adaptive_cfg(0.25);
    CalibOptions opt;
    opt.throw_on_failure = false;
    const CalibResult r = calibrate_zeta(t, sc, opt);
    const std::string rec = calibration_record(t, sc, r);
    CHECK(rec.find("mu=0.25") != std::string::npos);
    CHECK(rec.find("trace_seed=5") != std::string::npos);
    CHECK(rec.find("n_slots=1000") != std::string::npos);
}
