#pragma once

#include <functional>
#include <string>
#include <vector>

#include "hdbs/calibration.hpp"
#include "hdbs/config.hpp"
#include "hdbs/fdd.hpp"

namespace hdbs {

// One point on a rate/throughput region boundary.
struct RegionPoint {
    std::string scheme;
    double mu = 0.0;
    double r1 = 0.0, rB = 0.0;
    double p1_consumed = 0.0, pB_consumed = 0.0;
    double zeta1 = 0.0, zetaB = 0.0;
    double budget_resid = 0.0;  // max binding-link |consumed - pbar| / pbar
    bool ok = true;
    std::string error;
};

struct SumRatePoint {
    std::string scheme;
    double snr_db = 0.0;
    double sum_rate = 0.0;
    double r1 = 0.0, rB = 0.0;
    double budget_resid = 0.0;
    bool ok = true;
    std::string error;
};

struct OutageResult {
    std::string scheme;
    double snr_db = 0.0;
    double pout1 = 0.0, poutB = 0.0;
    std::size_t slots = 0;
    bool low_confidence = false;       // fewer than the target event count expected
    std::size_t impossible_events = 0; // transmissions at an unsupported rate
    double fixed_power = 0.0;          // calibrated common power (proposed scheme)
};

struct FairnessRow {
    std::size_t slot = 0;
    double mu = 0.0;
    double r1_avg = 0.0, rB_avg = 0.0;
};

struct FairnessResult {
    std::vector<FairnessRow> rows;  // decimated trajectory
    double final_mu = 0.0;
    double final_r1 = 0.0, final_rB = 0.0;
    double endpoint_r1 = 0.0;  // mu = 1 rate used for the feasibility check
    bool target_feasible = true;
};

// Cosine-spaced mu grid over [0,1], denser near the endpoints.
std::vector<double> cosine_mu_grid(std::size_t points);

// Region sweep (rate/throughput region boundaries): per mu point, calibrate on
// a calibration trace and evaluate on a fresh trace, for each enabled scheme
// plus the FDD benchmarks. Failed points are marked and the sweep continues.
std::vector<RegionPoint> sweep_region(const Config& cfg, const std::vector<double>& mu_grid);

// Sum rate/throughput at mu = 1/2 versus SNR. The discrete scheme re-optimizes
// its rate per SNR point when rates.r == 0, otherwise uses the configured
// ladder.
std::vector<SumRatePoint> sweep_sum_rate(const Config& cfg,
                                         const std::vector<double>& snr_grid_db);

// Monte Carlo outage probabilities versus SNR for the proposed discrete scheme
// (M = L = 1 at rate r0, symmetric operating point with a common fixed power
// calibrated to the uplink budget) and the FDD benchmark. Slot counts are
// auto-scaled so the rarest event is expected at least cfg.outage_min_events
// times, capped at cfg.outage_max_slots (points beyond the cap are flagged).
std::vector<OutageResult> sweep_outage(const Config& cfg,
                                       const std::vector<double>& snr_grid_db, double r0);

struct DiversityFit {
    double order1 = 0.0;
    double orderB = 0.0;
    std::size_t points_used = 0;
};

// Least-squares slope of log10(pout) against snr_db/10 over the window,
// negated. Requires at least 4 points with positive probabilities in the
// window; throws std::invalid_argument otherwise.
DiversityFit fit_diversity_order(const std::vector<OutageResult>& results, double window_lo_db,
                                 double window_hi_db);

// Closed-loop fairness run of the adaptive-power scheme. The mu controller
// reads pre-calibrated prices from a quantized mu grid (cfg.mu_grid_points
// calibrations) unless cfg.joint_online is set, in which case zeta is tracked
// online alongside mu.
FairnessResult run_fairness(const Config& cfg, FairnessMode mode, double target);

struct ExperimentSummary {
    std::string experiment;
    std::size_t points_total = 0;
    std::size_t points_failed = 0;
    double max_budget_resid = 0.0;
    double wall_seconds = 0.0;
    std::vector<std::string> notes;
    int exit_code = 0;
};

// Dispatches one subcommand (region|sumrate|outage|fairness|calibrate), writes
// the experiment CSV plus the effective config echo into out_dir, and returns
// the run summary. All randomness flows from cfg.seed.
ExperimentSummary run_experiment(const Config& cfg, const std::string& subcommand,
                                 const std::string& out_dir);

}  // namespace hdbs
