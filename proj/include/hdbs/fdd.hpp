#pragma once

#include <utility>
#include <vector>

#include "hdbs/channel.hpp"

namespace hdbs {

// FDD benchmark: static bandwidth split mu/(1-mu) with spectral power boost
// pbar/mu against the same gains (the benchmark's own modeling convention; the
// noise is not rescaled with the band fraction).

struct FddRates {
    double r1 = 0.0;
    double rB = 0.0;
};

// R1 = (mu/N) sum log2(1 + (pbar1/mu) gamma1), downlink analogous. The mu = 0
// (resp. mu = 1) endpoint is the limit value 0 on the vanished band.
FddRates fdd_rate_pair(const ChannelTrace& trace, double mu, double pbar1, double pbarB);

// Single-rate throughputs: band fraction x rate x success fraction, where a
// slot succeeds iff the boosted-power capacity reaches the rate.
FddRates fdd_throughput_pair(const ChannelTrace& trace, double mu, double pbar1, double pbarB,
                             double rate1, double rateB);

struct FddOptimizedRates {
    double rate1 = 0.0, rateB = 0.0;
    double thr1 = 0.0, thrB = 0.0;
};

// Per-link throughput-maximizing rates over the candidate grid (the links
// decouple in FDD). Throws std::invalid_argument on an empty grid.
FddOptimizedRates fdd_optimize_rates(const ChannelTrace& trace, double mu, double pbar1,
                                     double pbarB, const std::vector<double>& grid);

// Default rate-optimization grid: n log-spaced points over [lo, hi].
std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n);

}  // namespace hdbs
