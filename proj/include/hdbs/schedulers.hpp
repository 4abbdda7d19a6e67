#pragma once

#include "hdbs/core_model.hpp"

namespace hdbs {

enum class Scheme { AdaptivePower, FixedPower, DiscreteRate };

const char* scheme_name(Scheme s);

// Calibrated or tracked constants driving the per-slot decisions: power prices
// zeta (per-W utility), fixed powers for the fixed/discrete schemes, and the
// rate-region weight mu in [0,1].
struct DualState {
    double zeta1 = 0.0;
    double zetaB = 0.0;
    double p1_fixed = 0.0;
    double pB_fixed = 0.0;
    double mu = 0.5;
};

// Water-filling power max(0, weight/(zeta*ln2) - 1/gain); zero at gain == 0.
// Positive iff gain > zeta*ln2/weight. Throws std::invalid_argument for
// zeta <= 0 (the allocation would be unbounded).
double waterfill_power(double gain, double weight, double zeta);

// Continuous-rate, adaptive-power scheme: water-fill both links with weights
// mu and 1-mu, form Lambda_k at the optimized powers, select the state, and
// transmit at capacity on the chosen link. Requires zeta1, zetaB > 0.
SlotDecision decide_adaptive(const SlotGains& gains, const DualState& dual);

// Continuous-rate, fixed-power scheme: Lambda_k at the fixed powers, state
// selection, transmission at capacity on the chosen link.
SlotDecision decide_fixed(const SlotGains& gains, const DualState& dual);

// Discrete-rate scheme: per link take the largest supportable rate from the
// set, weight it in Lambda_k, select the state. A Silent slot is an outage
// (wasted) for both links.
SlotDecision decide_discrete(const SlotGains& gains, const DualState& dual,
                             const DiscreteRateSet& rates1, const DiscreteRateSet& ratesB);

}  // namespace hdbs
