#include "hdbs/channel.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "hdbs/rng.hpp"

namespace hdbs {

namespace {
constexpr double kSpeedOfLight = 299792458.0;  // m/s
}

double mean_channel_gain(const LinkBudget& b) {
    if (!(b.distance_m > 0.0)) {
        throw std::invalid_argument("mean_channel_gain: distance_m must be > 0");
    }
    if (!(b.carrier_hz > 0.0)) {
        throw std::invalid_argument("mean_channel_gain: carrier_hz must be > 0");
    }
    const double wavelength_term = kSpeedOfLight / (4.0 * M_PI * b.carrier_hz);
    return wavelength_term * wavelength_term * std::pow(b.distance_m, -b.path_loss_exp) *
           b.tx_antenna_gain * b.rx_antenna_gain;
}

double noise_power_w(const LinkBudget& b) {
    const double dbm_per_hz = b.noise_floor_dbm_per_hz + b.noise_figure_db;
    const double mw_per_hz = std::pow(10.0, dbm_per_hz / 10.0);
    return mw_per_hz * b.bandwidth_hz * 1e-3;
}

ChannelTrace generate_trace(std::size_t n, double mean_gamma1, double mean_gammaB,
                            std::uint64_t seed) {
    if (n < 1) {
        throw std::invalid_argument("generate_trace: n must be >= 1");
    }
    if (!(mean_gamma1 > 0.0) || !(mean_gammaB > 0.0)) {
        throw std::invalid_argument("generate_trace: means must be > 0");
    }
    ChannelTrace trace;
    trace.seed = seed;
    trace.mean_gamma1 = mean_gamma1;
    trace.mean_gammaB = mean_gammaB;
    trace.slots.resize(n);
    // Two independent streams, one per link, derived from the trace seed.
    Xoshiro256pp rng1(mix_seed(seed, 1));
    Xoshiro256pp rngB(mix_seed(seed, 2));
    for (std::size_t i = 0; i < n; ++i) {
        trace.slots[i].gamma1 = rng1.next_exponential(mean_gamma1);
        trace.slots[i].gammaB = rngB.next_exponential(mean_gammaB);
    }
    return trace;
}

void write_trace_csv(const ChannelTrace& trace, const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) {
        throw std::runtime_error("write_trace_csv: cannot open " + path);
    }
    std::fputs("slot,gamma1,gammaB\n", f);
    for (std::size_t i = 0; i < trace.slots.size(); ++i) {
        std::fprintf(f, "%zu,%.17g,%.17g\n", i, trace.slots[i].gamma1, trace.slots[i].gammaB);
    }
    std::fclose(f);
}

ChannelTrace read_trace_csv(const std::string& path) {
    std::FILE* f = std::fopen(path.c_str(), "rb");
    if (!f) {
        throw std::runtime_error("read_trace_csv: cannot open " + path);
    }
    ChannelTrace trace;
    char line[256];
    bool header = true;
    while (std::fgets(line, sizeof(line), f)) {
        if (header) {
            header = false;
            continue;
        }
        std::size_t slot = 0;
        double g1 = 0.0, gB = 0.0;
        if (std::sscanf(line, "%zu,%lg,%lg", &slot, &g1, &gB) == 3) {
            trace.slots.push_back({g1, gB});
        }
    }
    std::fclose(f);
    if (trace.slots.empty()) {
        throw std::runtime_error("read_trace_csv: no rows in " + path);
    }
    return trace;
}

}  // namespace hdbs
