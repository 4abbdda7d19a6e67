#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "hdbs/channel.hpp"
#include "hdbs/online.hpp"
#include "hdbs/schedulers.hpp"

namespace hdbs {

// Everything needed to run one scheme: selector, weight, budgets, fixed
// powers, rate sets, and estimator step policies.
struct SchemeConfig {
    Scheme scheme = Scheme::AdaptivePower;
    double mu = 0.5;
    double pbar1 = 1.0;
    double pbarB = 1.0;
    double p1_fixed = 0.0;
    double pB_fixed = 0.0;
    DiscreteRateSet rates1;
    DiscreteRateSet ratesB;
    StepPolicy zeta_step{0.5, 0.6};
    StepPolicy power_step{0.5, 0.6};
};

struct CalibOptions {
    double tol = 1e-3;     // relative power mismatch
    int max_bisect = 200;  // bisection steps per link
    int max_outer = 50;    // alternations
    double zeta_lo = 1e-9;
    bool throw_on_failure = true;
};

struct CalibResult {
    DualState dual;  // calibrated zetas; mu and fixed powers echoed from the config
    double consumed1 = 0.0, consumedB = 0.0;
    double resid1 = 0.0, residB = 0.0;  // |consumed - pbar| / pbar on binding links
    bool binding1 = true, bindingB = true;  // false: budget slack even at zeta = 0
    int outer_iters = 0;
    bool converged = false;
};

class CalibrationError : public std::runtime_error {
public:
    CalibrationError(const std::string& what, const CalibResult& last)
        : std::runtime_error(what), last_iterate(last) {}
    CalibResult last_iterate;
};

// Long-run statistics of a run over a trace with frozen duals.
struct RunStats {
    double r1_avg = 0.0, rB_avg = 0.0;   // bits/symbol
    double p1_avg = 0.0, pB_avg = 0.0;   // consumed W
    std::size_t slots = 0;
    std::size_t uplink_slots = 0, downlink_slots = 0, silent_slots = 0;
    std::size_t outages1 = 0, outagesB = 0;  // discrete scheme accounting
    std::vector<SlotDecision> decisions;     // filled when keep_decisions
};

RunStats simulate(const ChannelTrace& trace, const SchemeConfig& cfg, const DualState& dual,
                  bool keep_decisions = false);

// (1/N) sum of q_k(i) P_k(i) over the trace under the scheme's decisions.
double average_consumed_power(const ChannelTrace& trace, const SchemeConfig& cfg,
                              const DualState& dual, Link link);

// Finds zeta1, zetaB such that each link's average consumed power meets its
// budget with equality (within tol), by damped alternating per-link bisection.
// Average consumed power is nonincreasing in the link's own zeta, which gives
// the bracket; the initial upper bound w/(ln2 * min positive gamma) is widened
// x10 up to 6 times if needed. A link whose consumption stays below budget
// even at zeta -> 0 is reported non-binding with zeta = 0. For the discrete
// scheme consumed power is a step function of zeta, so the bisection lands on
// the nearest feasible (under-budget) point and the residual is reported; the
// fixed-power solvers close the remaining gap through the powers themselves.
// warm_* seed the search from a previous calibration.
CalibResult calibrate_zeta(const ChannelTrace& trace, const SchemeConfig& cfg,
                           const CalibOptions& opt = {}, double warm_zeta1 = 0.0,
                           double warm_zetaB = 0.0);

struct FixedPowerSolution {
    DualState dual;
    double consumed1 = 0.0, consumedB = 0.0;
    double stat_resid1 = 0.0, stat_residB = 0.0;  // normalized stationarity residuals
    int outer_iters = 0;
    bool converged = false;
};

// Jointly solves the fixed-power stationarity conditions and the budget
// equalities on the trace: bracketing scan plus golden section on the
// calibrated weighted objective per link, then damped secant iterations on
// the stationarity residuals with zeta recalibrated per candidate.
FixedPowerSolution solve_fixed_powers(const ChannelTrace& trace, double mu, double pbar1,
                                      double pbarB, const CalibOptions& opt = {});

struct DiscreteSolution {
    DualState dual;
    double consumed1 = 0.0, consumedB = 0.0;
    double thr1 = 0.0, thrB = 0.0;  // throughputs at the solution
    bool converged = false;
};

// Optimizes the discrete-rate fixed powers by maximizing the weighted sample
// throughput directly: per-link golden section over a bracketed power range
// with zeta recalibrated per candidate, then alternating per-link power
// bisection that restores budget equality.
DiscreteSolution solve_discrete_powers(const ChannelTrace& trace, double mu, double pbar1,
                                       double pbarB, const DiscreteRateSet& rates1,
                                       const DiscreteRateSet& ratesB,
                                       const CalibOptions& opt = {});

// One-line text record {mu, zeta1, zetaB, p1, pB, trace_seed, n_slots,
// residuals} for reuse across experiments.
std::string calibration_record(const ChannelTrace& trace, const SchemeConfig& cfg,
                               const CalibResult& result);

}  // namespace hdbs
