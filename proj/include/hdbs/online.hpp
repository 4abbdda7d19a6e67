#pragma once

#include <cstddef>
#include <cstdint>

#include "hdbs/core_model.hpp"

namespace hdbs {

enum class Link { Uplink, Downlink };

// Decaying step size delta(i) = delta0 * i^(-exponent), delta(1) = delta0 < 1.
struct StepPolicy {
    double delta0 = 0.5;
    double exponent = 0.6;

    double delta(std::size_t i) const;
};

// Validates delta0 in (0,1) and exponent in (0.5, 1]; throws otherwise.
StepPolicy make_step_policy(double delta0, double exponent);

// Running state of the online estimators: price trackers, fixed-power
// trackers with their residual accumulators, consumed-power and rate running
// averages, and the fairness weight.
struct EstimatorState {
    double zeta_est1 = 0.0, zeta_estB = 0.0;
    double p_est1 = 0.0, p_estB = 0.0;
    double e_acc1 = 0.0, e_accB = 0.0;
    double p_avg_est1 = 0.0, p_avg_estB = 0.0;
    double mu_est = 0.5;
    double r_avg_est1 = 0.0, r_avg_estB = 0.0;
    std::size_t slot_index = 0;  // last processed slot i >= 1
};

// P_avg(i) = ((i-1)/i) P_avg(i-1) + (1/i) q_k(i) P_k(i). Uses state.slot_index
// as i; call with slot_index already set to the current slot.
void update_power_average(EstimatorState& est, const SlotDecision& decision, Link link);

// R_avg(i) = ((i-1)/i) R_avg(i-1) + (1/i) R_k(i).
void update_rate_average(EstimatorState& est, const SlotDecision& decision, Link link);

// zeta(i+1) = max(0, zeta(i) + delta(i) [P_avg(i) - pbar]); dual ascent on the
// power constraint, projected to stay admissible.
void update_zeta(EstimatorState& est, double pbar, const StepPolicy& policy, Link link);

// Fixed-power tracker: running stationarity residual
//   E(i) = ((i-1)/i) E(i-1) + (1/i) [ w q gamma / (ln2 (1 + P_est gamma)) - zeta_est q ]
// followed by P_est(i+1) = max(0, P_est(i) + delta(i) E(i)). w is mu for the
// uplink and 1-mu for the downlink.
void update_fixed_power(EstimatorState& est, const SlotGains& gains,
                        const SlotDecision& decision, double mu, const StepPolicy& policy,
                        Link link);

// Discrete-rate power tracker. The bracket multiplies the rate-weighted sum of
// the window indicators Delta^j(i) = 1 iff the capacity at P_est crossed R^j
// between slots i-1 and i (gain_prev == gain at slot 1, so the window is
// empty there).
void update_discrete_power(EstimatorState& est, double gain_prev, double gain,
                           const SlotDecision& decision, double mu,
                           const DiscreteRateSet& rates, const StepPolicy& policy, Link link);

// Prioritized fairness: mu(i+1) = clamp01( mu(i) - delta(i) [R_avg1(i) - r1_des] ).
// The negative feedback sign makes the loop stable: raising mu raises the
// uplink rate average.
void update_mu_prioritized(EstimatorState& est, double r1_des, const StepPolicy& policy);

// Proportional fairness: mu(i+1) = clamp01( mu(i) - delta(i) [R_avg1 - alpha R_avgB] ).
void update_mu_proportional(EstimatorState& est, double alpha, const StepPolicy& policy);

}  // namespace hdbs
