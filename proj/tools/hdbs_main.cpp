// hdbs: experiment driver for the half-duplex in-band scheduling simulator.
//
// Subcommands run one experiment from a config file plus flag overrides and
// write CSV outputs (plus the effective config echo) into the output
// directory. Flags take precedence over config file values; the HDBS_OUT
// environment variable overrides the output directory last.

#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hdbs/config.hpp"
#include "hdbs/experiments.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    std::string snr_spec;
    std::string schemes;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int threads = -1;
    bool strict = false;
};

void add_common(CLI::App* cmd, CommonOpts& o) {
    cmd->add_option("-c,--config", o.config_path, "Config file (INI-style sections)");
    cmd->add_option("-o,--out", o.out_dir, "Output directory (overrides [output] dir)");
    cmd->add_option("--schemes", o.schemes, "Comma list: adaptive,fixed,discrete");
    cmd->add_option("--seed", o.seed, "Base seed")->each([&](const std::string&) {
        o.seed_set = true;
    });
    cmd->add_option("--threads", o.threads, "Worker threads (0 = all cores)");
    cmd->add_flag("--strict", o.strict, "Exit nonzero when any point fails");
}

hdbs::Config load_config(const CommonOpts& o) {
    hdbs::Config cfg;
    if (!o.config_path.empty()) cfg = hdbs::parse_config(o.config_path);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (!o.schemes.empty()) {
        cfg.schemes.clear();
        std::string item;
        std::stringstream ss(o.schemes);
        while (std::getline(ss, item, ',')) {
            if (!item.empty()) cfg.schemes.push_back(item);
        }
    }
    if (o.seed_set) cfg.seed = o.seed;
    if (o.threads >= 0) cfg.threads = o.threads;
    if (o.strict) cfg.strict = true;
    if (const char* env = std::getenv("HDBS_OUT")) {
        if (*env) cfg.out_dir = env;
    }
    return cfg;
}

int finish(const hdbs::ExperimentSummary& sum) {
    std::printf("experiment: %s\n", sum.experiment.c_str());
    std::printf("points: %zu (%zu failed)\n", sum.points_total, sum.points_failed);
    std::printf("max budget residual: %.3g\n", sum.max_budget_resid);
    std::printf("wall time: %.1f s\n", sum.wall_seconds);
    for (const std::string& n : sum.notes) std::printf("note: %s\n", n.c_str());
    return sum.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"half-duplex BS in-band uplink/downlink scheduling experiments"};
    app.require_subcommand(1);

    CommonOpts region_o, sumrate_o, outage_o, fairness_o, calibrate_o;
    std::size_t mu_points = 0;
    double r0 = 0.0;
    std::string fairness_mode;
    double fairness_target = -1.0;
    double calibrate_mu = -1.0;
    double snr_db_point = std::numeric_limits<double>::quiet_NaN();

    CLI::App* region = app.add_subcommand("region", "Rate/throughput region sweep over mu");
    add_common(region, region_o);
    region->add_option("--mu-points", mu_points, "Number of cosine-spaced mu grid points");

    CLI::App* sumrate = app.add_subcommand("sumrate", "Sum rate/throughput vs SNR at mu=1/2");
    add_common(sumrate, sumrate_o);
    sumrate->add_option("--snr", sumrate_o.snr_spec, "SNR grid a:b:step in dB");

    CLI::App* outage = app.add_subcommand("outage", "Outage probability vs SNR (M=L=1)");
    add_common(outage, outage_o);
    outage->add_option("--snr", outage_o.snr_spec, "SNR grid a:b:step in dB");
    outage->add_option("--r0", r0, "Single transmission rate R0 in bits/symbol");

    CLI::App* fairness = app.add_subcommand("fairness", "Closed-loop mu adaptation trace");
    add_common(fairness, fairness_o);
    fairness->add_option("--mode", fairness_mode, "prioritized | proportional");
    fairness->add_option("--target", fairness_target,
                         "Desired uplink rate (prioritized) or ratio alpha (proportional)");

    CLI::App* calibrate = app.add_subcommand("calibrate", "Calibrate duals at one mu");
    add_common(calibrate, calibrate_o);
    calibrate->add_option("--mu", calibrate_mu, "Rate-region weight in [0,1]");
    calibrate->add_option("--snr", snr_db_point, "Channel SNR in dB (snr mode)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (region->parsed()) {
            hdbs::Config cfg = load_config(region_o);
            if (mu_points > 0) cfg.mu_points = mu_points;
            return finish(hdbs::run_experiment(cfg, "region", cfg.out_dir));
        }
        if (sumrate->parsed()) {
            hdbs::Config cfg = load_config(sumrate_o);
            if (!sumrate_o.snr_spec.empty()) cfg.snr_grid_db = hdbs::parse_grid_spec(sumrate_o.snr_spec);
            return finish(hdbs::run_experiment(cfg, "sumrate", cfg.out_dir));
        }
        if (outage->parsed()) {
            hdbs::Config cfg = load_config(outage_o);
            if (!outage_o.snr_spec.empty()) cfg.snr_grid_db = hdbs::parse_grid_spec(outage_o.snr_spec);
            if (r0 > 0.0) cfg.r0 = r0;
            return finish(hdbs::run_experiment(cfg, "outage", cfg.out_dir));
        }
        if (fairness->parsed()) {
            hdbs::Config cfg = load_config(fairness_o);
            if (!fairness_mode.empty()) {
                if (fairness_mode == "prioritized") {
                    cfg.fairness_mode = hdbs::FairnessMode::Prioritized;
                } else if (fairness_mode == "proportional") {
                    cfg.fairness_mode = hdbs::FairnessMode::Proportional;
                } else {
                    throw hdbs::ConfigError("--mode must be prioritized or proportional");
                }
            }
            if (fairness_target >= 0.0) {
                if (cfg.fairness_mode == hdbs::FairnessMode::Prioritized) {
                    cfg.r1_des = fairness_target;
                } else {
                    cfg.alpha = fairness_target;
                }
            }
            return finish(hdbs::run_experiment(cfg, "fairness", cfg.out_dir));
        }
        if (calibrate->parsed()) {
            hdbs::Config cfg = load_config(calibrate_o);
            if (calibrate_mu >= 0.0) cfg.mu = calibrate_mu;
            if (!std::isnan(snr_db_point)) cfg.snr_db = snr_db_point;
            return finish(hdbs::run_experiment(cfg, "calibrate", cfg.out_dir));
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
