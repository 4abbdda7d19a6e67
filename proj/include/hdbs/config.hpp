#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace hdbs {

enum class ChannelMode { Snr, Physical };
enum class FairnessMode { Prioritized, Proportional };

// Effective experiment configuration. Parsed from a flat [section] key=value
// file; dB/dBm values are converted to linear here and nowhere else.
struct Config {
    // [run]
    std::vector<std::string> schemes{"adaptive", "fixed", "discrete"};
    double mu = 0.5;  // single-point calibrate runs
    std::uint64_t seed = 12345;
    std::size_t slots_cal = 200000;
    std::size_t slots_eval = 1000000;
    int threads = 0;  // 0 = hardware concurrency
    bool strict = false;

    // [channel]
    ChannelMode mode = ChannelMode::Snr;
    double snr_db = 10.0;
    std::vector<double> snr_grid_db;  // sumrate/outage sweeps
    double carrier_hz = 1.9e9;
    double distance_m = 700.0;
    double path_loss_exp = 3.6;
    double bs_antenna_gain = 1.0;    // linear (config key in dBi)
    double user_antenna_gain = 1.0;  // linear (config key in dBi)
    double noise_figure_bs_db = 2.0;
    double noise_figure_u2_db = 7.0;
    double bandwidth_hz = 200e3;
    double noise_floor_dbm_per_hz = -174.0;

    // [power] (linear W after parsing)
    double pbar1 = 1.0;
    double pbarB = 1.0;

    // [rates]
    std::size_t num_rates = 1;     // M = L
    double rate_step = 0.0;        // 0 -> optimize numerically per point
    double rate_grid_lo = 0.05;
    double rate_grid_hi = 20.0;
    std::size_t rate_grid_n = 200;

    // [calibration]
    double calib_tol = 1e-3;
    int calib_max_bisect = 200;
    int calib_max_outer = 50;

    // [estimator]
    double delta0_zeta = 0.5, exponent_zeta = 0.6;
    double delta0_power = 0.5, exponent_power = 0.6;
    double delta0_mu = 0.5, exponent_mu = 0.51;

    // [fairness]
    FairnessMode fairness_mode = FairnessMode::Prioritized;
    double r1_des = 5.0;
    double alpha = 5.0;
    double fairness_snr_db = 15.0;
    std::size_t fairness_slots = 1000000;
    std::size_t mu_grid_points = 101;
    bool joint_online = false;
    std::size_t trace_decimation = 1000;

    // [region]
    std::size_t mu_points = 41;

    // [outage]
    double r0 = 1.0;
    std::size_t outage_min_slots = 1000000;
    std::size_t outage_max_slots = 400000000;
    std::size_t outage_min_events = 100;

    // [output]
    std::string out_dir = "out";

    // Mean normalized gains implied by the channel section.
    double mean_gamma1() const;
    double mean_gammaB() const;
    // For a given SNR grid value in SNR mode.
    double mean_gamma_for_snr(double snr_db_value) const;
};

// Parses and validates; throws ConfigError with file/line context on parse
// errors, unknown keys, or invalid values.
class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

Config parse_config(const std::string& path);
Config parse_config_text(const std::string& text, const std::string& origin = "<string>");

// Serializes the effective configuration (defaults applied); parsing the
// result reproduces the same Config.
std::string render_config(const Config& cfg);

// "a:b:step" inclusive grid.
std::vector<double> parse_grid_spec(const std::string& spec);

double db_to_linear(double db);
double dbm_to_watt(double dbm);

}  // namespace hdbs
