#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hdbs/core_model.hpp"

namespace hdbs {

// Physical link budget, path-loss model parameters plus thermal-noise
// bookkeeping. Antenna gains are linear here; dB conversions happen at the
// config boundary.
struct LinkBudget {
    double carrier_hz = 1.9e9;
    double distance_m = 700.0;
    double path_loss_exp = 3.6;
    double tx_antenna_gain = 1.0;  // linear
    double rx_antenna_gain = 1.0;  // linear
    double noise_figure_db = 0.0;
    double bandwidth_hz = 1.0;
    double noise_floor_dbm_per_hz = -174.0;
};

// Mean of |h|^2: (c / (4 pi f_c))^2 * d^-beta * G_tx * G_rx, c = 299792458 m/s.
// Throws std::invalid_argument when distance or carrier is not positive.
double mean_channel_gain(const LinkBudget& budget);

// Thermal noise power in W: 10^((noise_floor_dbm_per_hz + NF_dB)/10) mW/Hz
// times bandwidth, converted to W.
double noise_power_w(const LinkBudget& budget);

// An i.i.d. block-fading trace: gains are exponential (Rayleigh envelope) with
// the recorded means, independent across links and slots. Immutable after
// generation; identical (n, means, seed) give a bit-identical trace.
struct ChannelTrace {
    std::vector<SlotGains> slots;
    std::uint64_t seed = 0;
    double mean_gamma1 = 0.0;
    double mean_gammaB = 0.0;

    std::size_t size() const { return slots.size(); }
};

ChannelTrace generate_trace(std::size_t n, double mean_gamma1, double mean_gammaB,
                            std::uint64_t seed);

// CSV export/import, columns slot,gamma1,gammaB at full precision.
void write_trace_csv(const ChannelTrace& trace, const std::string& path);
ChannelTrace read_trace_csv(const std::string& path);

}  // namespace hdbs
