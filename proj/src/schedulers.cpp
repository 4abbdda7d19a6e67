#include "hdbs/schedulers.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hdbs {

const char* scheme_name(Scheme s) {
    switch (s) {
        case Scheme::AdaptivePower: return "adaptive";
        case Scheme::FixedPower: return "fixed";
        case Scheme::DiscreteRate: return "discrete";
    }
    return "?";
}

double waterfill_power(double gain, double weight, double zeta) {
    if (!(zeta > 0.0)) {
        throw std::invalid_argument("waterfill_power: zeta must be > 0");
    }
    if (!(gain >= 0.0) || !std::isfinite(gain)) {
        throw std::invalid_argument("waterfill_power: gain must be finite and >= 0");
    }
    if (gain == 0.0) {
        return 0.0;
    }
    const double level = weight / (zeta * std::numbers::ln2);
    const double p = level - 1.0 / gain;
    return p > 0.0 ? p : 0.0;
}

namespace {

void check_mu(double mu) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw std::invalid_argument("decide: mu must lie in [0,1]");
    }
}

SlotDecision pick(NetworkState state, double p1, double r1, double pB, double rB) {
    SlotDecision d;
    d.state = state;
    if (state == NetworkState::UplinkTx) {
        d.power = p1;
        d.rate = r1;
    } else if (state == NetworkState::DownlinkTx) {
        d.power = pB;
        d.rate = rB;
    }
    return d;
}

}  // namespace

SlotDecision decide_adaptive(const SlotGains& g, const DualState& dual) {
    check_mu(dual.mu);
    const double mu = dual.mu;
    const double p1 = waterfill_power(g.gamma1, mu, dual.zeta1);
    const double pB = waterfill_power(g.gammaB, 1.0 - mu, dual.zetaB);
    const double r1 = std::log2(1.0 + p1 * g.gamma1);
    const double rB = std::log2(1.0 + pB * g.gammaB);
    SelectionMetrics m;
    m.lambda1 = mu * r1 - dual.zeta1 * p1;
    m.lambdaB = (1.0 - mu) * rB - dual.zetaB * pB;
    return pick(select_state(m), p1, r1, pB, rB);
}

SlotDecision decide_fixed(const SlotGains& g, const DualState& dual) {
    check_mu(dual.mu);
    const double mu = dual.mu;
    const double p1 = dual.p1_fixed;
    const double pB = dual.pB_fixed;
    const double r1 = std::log2(1.0 + p1 * g.gamma1);
    const double rB = std::log2(1.0 + pB * g.gammaB);
    SelectionMetrics m;
    m.lambda1 = mu * r1 - dual.zeta1 * p1;
    m.lambdaB = (1.0 - mu) * rB - dual.zetaB * pB;
    return pick(select_state(m), p1, r1, pB, rB);
}

SlotDecision decide_discrete(const SlotGains& g, const DualState& dual,
                             const DiscreteRateSet& rates1, const DiscreteRateSet& ratesB) {
    check_mu(dual.mu);
    const double mu = dual.mu;
    const BestRate u = best_discrete_rate(dual.p1_fixed, g.gamma1, rates1);
    const BestRate d = best_discrete_rate(dual.pB_fixed, g.gammaB, ratesB);
    SelectionMetrics m;
    m.lambda1 = mu * u.rate - dual.zeta1 * dual.p1_fixed;
    m.lambdaB = (1.0 - mu) * d.rate - dual.zetaB * dual.pB_fixed;
    SlotDecision out = pick(select_state(m), dual.p1_fixed, u.rate, dual.pB_fixed, d.rate);
    if (out.state == NetworkState::UplinkTx) {
        out.rate_index = u.index;
    } else if (out.state == NetworkState::DownlinkTx) {
        out.rate_index = d.index;
    }
    // A slot is wasted (outage on both links) when nothing transmits; a
    // transmitting slot always carries a supportable rate since Lambda > 0
    // requires a positive best-rate term.
    out.outage = (out.state == NetworkState::Silent) || (out.rate <= 0.0);
    return out;
}

}  // namespace hdbs
