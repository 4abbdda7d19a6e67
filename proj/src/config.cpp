#include "hdbs/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "hdbs/channel.hpp"

namespace hdbs {

double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
double dbm_to_watt(double dbm) { return std::pow(10.0, dbm / 10.0) * 1e-3; }

namespace {

std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
    return s.substr(a, b - a);
}

double to_double(const std::string& v, const std::string& field) {
    try {
        std::size_t pos = 0;
        const double d = std::stod(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: field '" + field + "': cannot parse number '" + v + "'");
    }
}

std::uint64_t to_u64(const std::string& v, const std::string& field) {
    try {
        std::size_t pos = 0;
        const unsigned long long d = std::stoull(v, &pos);
        if (pos != v.size()) throw std::invalid_argument("trailing characters");
        return d;
    } catch (const std::exception&) {
        throw ConfigError("config: field '" + field + "': cannot parse integer '" + v + "'");
    }
}

std::size_t to_size(const std::string& v, const std::string& field) {
    const double d = to_double(v, field);
    if (d < 0 || d != std::floor(d)) {
        throw ConfigError("config: field '" + field + "': expected a nonnegative integer");
    }
    return static_cast<std::size_t>(d);
}

bool to_bool(const std::string& v, const std::string& field) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError("config: field '" + field + "': expected true/false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

}  // namespace

std::vector<double> parse_grid_spec(const std::string& spec) {
    // "a:b:step" inclusive; a bare number is a one-point grid.
    std::vector<double> out;
    const auto c1 = spec.find(':');
    if (c1 == std::string::npos) {
        out.push_back(to_double(trim(spec), "grid"));
        return out;
    }
    const auto c2 = spec.find(':', c1 + 1);
    if (c2 == std::string::npos) {
        throw ConfigError("config: grid spec '" + spec + "' must be a:b:step");
    }
    const double a = to_double(trim(spec.substr(0, c1)), "grid start");
    const double b = to_double(trim(spec.substr(c1 + 1, c2 - c1 - 1)), "grid end");
    const double step = to_double(trim(spec.substr(c2 + 1)), "grid step");
    if (!(step > 0.0) || b < a) {
        throw ConfigError("config: grid spec '" + spec + "' must have step > 0 and b >= a");
    }
    for (double x = a; x <= b + 1e-9 * step; x += step) out.push_back(x);
    return out;
}

Config parse_config_text(const std::string& text, const std::string& origin) {
    Config cfg;
    std::map<std::string, std::function<void(const std::string&, const std::string&)>> setters;

    auto num = [&](const char* key, double& field) {
        setters[key] = [&field](const std::string& v, const std::string& k) {
            field = to_double(v, k);
        };
    };
    auto integer = [&](const char* key, std::size_t& field) {
        setters[key] = [&field](const std::string& v, const std::string& k) {
            field = to_size(v, k);
        };
    };

    // [run]
    setters["run.schemes"] = [&cfg](const std::string& v, const std::string&) {
        cfg.schemes = split_list(v);
    };
    num("run.mu", cfg.mu);
    setters["run.seed"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.seed = to_u64(v, k);
    };
    integer("run.slots_cal", cfg.slots_cal);
    integer("run.slots_eval", cfg.slots_eval);
    setters["run.threads"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.threads = static_cast<int>(to_size(v, k));
    };
    setters["run.strict"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.strict = to_bool(v, k);
    };

    // [channel]
    setters["channel.mode"] = [&cfg](const std::string& v, const std::string&) {
        if (v == "snr") {
            cfg.mode = ChannelMode::Snr;
        } else if (v == "physical") {
            cfg.mode = ChannelMode::Physical;
        } else {
            throw ConfigError("config: channel.mode must be snr or physical, got '" + v + "'");
        }
    };
    num("channel.snr_db", cfg.snr_db);
    setters["channel.snr_grid_db"] = [&cfg](const std::string& v, const std::string&) {
        cfg.snr_grid_db = parse_grid_spec(v);
    };
    num("channel.carrier_hz", cfg.carrier_hz);
    num("channel.distance_m", cfg.distance_m);
    num("channel.path_loss_exp", cfg.path_loss_exp);
    setters["channel.bs_antenna_gain_dbi"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.bs_antenna_gain = db_to_linear(to_double(v, k));
    };
    setters["channel.user_antenna_gain_dbi"] = [&cfg](const std::string& v,
                                                      const std::string& k) {
        cfg.user_antenna_gain = db_to_linear(to_double(v, k));
    };
    num("channel.noise_figure_bs_db", cfg.noise_figure_bs_db);
    num("channel.noise_figure_u2_db", cfg.noise_figure_u2_db);
    num("channel.bandwidth_hz", cfg.bandwidth_hz);
    num("channel.noise_floor_dbm_per_hz", cfg.noise_floor_dbm_per_hz);

    // [power]
    num("power.pbar1", cfg.pbar1);
    num("power.pbarB", cfg.pbarB);
    setters["power.pbar1_dbm"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.pbar1 = dbm_to_watt(to_double(v, k));
    };
    setters["power.pbarB_dbm"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.pbarB = dbm_to_watt(to_double(v, k));
    };

    // [rates]
    integer("rates.m", cfg.num_rates);
    num("rates.r", cfg.rate_step);
    num("rates.grid_lo", cfg.rate_grid_lo);
    num("rates.grid_hi", cfg.rate_grid_hi);
    integer("rates.grid_n", cfg.rate_grid_n);

    // [calibration]
    num("calibration.tol", cfg.calib_tol);
    setters["calibration.max_bisect"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.calib_max_bisect = static_cast<int>(to_size(v, k));
    };
    setters["calibration.max_outer"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.calib_max_outer = static_cast<int>(to_size(v, k));
    };

    // [estimator]
    num("estimator.delta0_zeta", cfg.delta0_zeta);
    num("estimator.exponent_zeta", cfg.exponent_zeta);
    num("estimator.delta0_power", cfg.delta0_power);
    num("estimator.exponent_power", cfg.exponent_power);
    num("estimator.delta0_mu", cfg.delta0_mu);
    num("estimator.exponent_mu", cfg.exponent_mu);

    // [fairness]
    setters["fairness.mode"] = [&cfg](const std::string& v, const std::string&) {
        if (v == "prioritized") {
            cfg.fairness_mode = FairnessMode::Prioritized;
        } else if (v == "proportional") {
            cfg.fairness_mode = FairnessMode::Proportional;
        } else {
            throw ConfigError("config: fairness.mode must be prioritized or proportional");
        }
    };
    num("fairness.r1_des", cfg.r1_des);
    num("fairness.alpha", cfg.alpha);
    num("fairness.snr_db", cfg.fairness_snr_db);
    integer("fairness.slots", cfg.fairness_slots);
    integer("fairness.mu_grid_points", cfg.mu_grid_points);
    setters["fairness.joint_online"] = [&cfg](const std::string& v, const std::string& k) {
        cfg.joint_online = to_bool(v, k);
    };
    integer("fairness.trace_decimation", cfg.trace_decimation);

    // [region]
    integer("region.mu_points", cfg.mu_points);

    // [outage]
    num("outage.r0", cfg.r0);
    integer("outage.min_slots", cfg.outage_min_slots);
    integer("outage.max_slots", cfg.outage_max_slots);
    integer("outage.min_events", cfg.outage_min_events);

    // [output]
    setters["output.dir"] = [&cfg](const std::string& v, const std::string&) {
        cfg.out_dir = v;
    };

    std::istringstream in(text);
    std::string line, section;
    int line_no = 0;
    std::vector<std::string> unknown;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find_first_of("#;");
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']') {
                throw ConfigError(origin + ":" + std::to_string(line_no) +
                                  ": malformed section header '" + line + "'");
            }
            section = trim(line.substr(1, line.size() - 2));
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(origin + ":" + std::to_string(line_no) +
                              ": expected key = value, got '" + line + "'");
        }
        const std::string key = section + "." + trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        const auto it = setters.find(key);
        if (it == setters.end()) {
            unknown.push_back(key);
            continue;
        }
        it->second(value, key);
    }
    if (!unknown.empty()) {
        std::string msg = origin + ": unknown keys:";
        for (const auto& k : unknown) msg += " " + k;
        throw ConfigError(msg);
    }

    // Validation.
    if (!(cfg.mu >= 0.0 && cfg.mu <= 1.0)) throw ConfigError("config: mu out of [0,1]");
    for (const auto& s : cfg.schemes) {
        if (s != "adaptive" && s != "fixed" && s != "discrete") {
            throw ConfigError("config: schemes entries must be adaptive|fixed|discrete, got '" +
                              s + "'");
        }
    }
    if (cfg.schemes.empty()) throw ConfigError("config: schemes must be nonempty");
    if (!(cfg.pbar1 > 0.0) || !(cfg.pbarB > 0.0)) {
        throw ConfigError("config: power budgets must be > 0");
    }
    if (cfg.slots_cal < 1 || cfg.slots_eval < 1) {
        throw ConfigError("config: slot counts must be >= 1");
    }
    if (cfg.mu_points < 2) throw ConfigError("config: region.mu_points must be >= 2");
    if (cfg.num_rates < 1) throw ConfigError("config: rates.m must be >= 1");
    if (!(cfg.rate_step >= 0.0)) throw ConfigError("config: rates.r must be >= 0");
    if (cfg.mu_grid_points < 2) throw ConfigError("config: fairness.mu_grid_points must be >= 2");
    if (!(cfg.r1_des >= 0.0)) throw ConfigError("config: fairness.r1_des must be >= 0");
    if (!(cfg.alpha > 0.0)) throw ConfigError("config: fairness.alpha must be > 0");
    if (!(cfg.calib_tol > 0.0)) throw ConfigError("config: calibration.tol must be > 0");
    auto check_step = [](double d0, double ex, const char* who) {
        if (!(d0 > 0.0 && d0 < 1.0)) {
            throw ConfigError(std::string("config: ") + who + " delta0 must lie in (0,1)");
        }
        if (!(ex > 0.5 && ex <= 1.0)) {
            throw ConfigError(std::string("config: ") + who + " exponent must lie in (0.5,1]");
        }
    };
    check_step(cfg.delta0_zeta, cfg.exponent_zeta, "estimator zeta");
    check_step(cfg.delta0_power, cfg.exponent_power, "estimator power");
    check_step(cfg.delta0_mu, cfg.exponent_mu, "estimator mu");
    if (cfg.mode == ChannelMode::Physical) {
        if (!(cfg.carrier_hz > 0.0) || !(cfg.distance_m > 0.0)) {
            throw ConfigError("config: physical mode needs carrier_hz > 0 and distance_m > 0");
        }
        if (!(cfg.bandwidth_hz > 0.0)) throw ConfigError("config: bandwidth_hz must be > 0");
    }
    return cfg;
}

Config parse_config(const std::string& path) {
    std::ifstream f(path);
    if (!f) throw ConfigError("config: cannot open " + path);
    std::stringstream ss;
    ss << f.rdbuf();
    return parse_config_text(ss.str(), path);
}

double Config::mean_gamma_for_snr(double snr_db_value) const {
    // Average received SNR at the budgeted average power: mean gamma = SNR/pbar.
    // SNR mode uses equal budgets on both links.
    return db_to_linear(snr_db_value) / pbar1;
}

double Config::mean_gamma1() const {
    if (mode == ChannelMode::Snr) return db_to_linear(snr_db) / pbar1;
    LinkBudget b;
    b.carrier_hz = carrier_hz;
    b.distance_m = distance_m;
    b.path_loss_exp = path_loss_exp;
    b.tx_antenna_gain = user_antenna_gain;
    b.rx_antenna_gain = bs_antenna_gain;
    b.noise_figure_db = noise_figure_bs_db;
    b.bandwidth_hz = bandwidth_hz;
    b.noise_floor_dbm_per_hz = noise_floor_dbm_per_hz;
    return mean_channel_gain(b) / noise_power_w(b);
}

double Config::mean_gammaB() const {
    if (mode == ChannelMode::Snr) return db_to_linear(snr_db) / pbarB;
    LinkBudget b;
    b.carrier_hz = carrier_hz;
    b.distance_m = distance_m;
    b.path_loss_exp = path_loss_exp;
    b.tx_antenna_gain = bs_antenna_gain;
    b.rx_antenna_gain = user_antenna_gain;
    b.noise_figure_db = noise_figure_u2_db;
    b.bandwidth_hz = bandwidth_hz;
    b.noise_floor_dbm_per_hz = noise_floor_dbm_per_hz;
    return mean_channel_gain(b) / noise_power_w(b);
}

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

std::string render_config(const Config& c) {
    std::ostringstream o;
    o << "# effective configuration (defaults applied)\n";
    o << "[run]\n";
    o << "schemes = ";
    for (std::size_t i = 0; i < c.schemes.size(); ++i) {
        o << (i ? "," : "") << c.schemes[i];
    }
    o << "\n";
    o << "mu = " << fmt(c.mu) << "\n";
    o << "seed = " << c.seed << "\n";
    o << "slots_cal = " << c.slots_cal << "\n";
    o << "slots_eval = " << c.slots_eval << "\n";
    o << "threads = " << c.threads << "\n";
    o << "strict = " << (c.strict ? "true" : "false") << "\n";
    o << "\n[channel]\n";
    o << "mode = " << (c.mode == ChannelMode::Snr ? "snr" : "physical") << "\n";
    o << "snr_db = " << fmt(c.snr_db) << "\n";
    if (!c.snr_grid_db.empty()) {
        // Render an explicit grid as a:b:step when uniform, else first:last:step
        // of the first gap (grids parsed from specs are always uniform).
        const double a = c.snr_grid_db.front(), b = c.snr_grid_db.back();
        const double step = c.snr_grid_db.size() > 1 ? c.snr_grid_db[1] - c.snr_grid_db[0] : 1.0;
        o << "snr_grid_db = " << fmt(a) << ":" << fmt(b) << ":" << fmt(step) << "\n";
    }
    o << "carrier_hz = " << fmt(c.carrier_hz) << "\n";
    o << "distance_m = " << fmt(c.distance_m) << "\n";
    o << "path_loss_exp = " << fmt(c.path_loss_exp) << "\n";
    o << "bs_antenna_gain_dbi = " << fmt(10.0 * std::log10(c.bs_antenna_gain)) << "\n";
    o << "user_antenna_gain_dbi = " << fmt(10.0 * std::log10(c.user_antenna_gain)) << "\n";
    o << "noise_figure_bs_db = " << fmt(c.noise_figure_bs_db) << "\n";
    o << "noise_figure_u2_db = " << fmt(c.noise_figure_u2_db) << "\n";
    o << "bandwidth_hz = " << fmt(c.bandwidth_hz) << "\n";
    o << "noise_floor_dbm_per_hz = " << fmt(c.noise_floor_dbm_per_hz) << "\n";
    o << "\n[power]\n";
    o << "pbar1 = " << fmt(c.pbar1) << "\n";
    o << "pbarB = " << fmt(c.pbarB) << "\n";
    o << "\n[rates]\n";
    o << "m = " << c.num_rates << "\n";
    o << "r = " << fmt(c.rate_step) << "\n";
    o << "grid_lo = " << fmt(c.rate_grid_lo) << "\n";
    o << "grid_hi = " << fmt(c.rate_grid_hi) << "\n";
    o << "grid_n = " << c.rate_grid_n << "\n";
    o << "\n[calibration]\n";
    o << "tol = " << fmt(c.calib_tol) << "\n";
    o << "max_bisect = " << c.calib_max_bisect << "\n";
    o << "max_outer = " << c.calib_max_outer << "\n";
    o << "\n[estimator]\n";
    o << "delta0_zeta = " << fmt(c.delta0_zeta) << "\n";
    o << "exponent_zeta = " << fmt(c.exponent_zeta) << "\n";
    o << "delta0_power = " << fmt(c.delta0_power) << "\n";
    o << "exponent_power = " << fmt(c.exponent_power) << "\n";
    o << "delta0_mu = " << fmt(c.delta0_mu) << "\n";
    o << "exponent_mu = " << fmt(c.exponent_mu) << "\n";
    o << "\n[fairness]\n";
    o << "mode = " << (c.fairness_mode == FairnessMode::Prioritized ? "prioritized"
                                                                    : "proportional")
      << "\n";
    o << "r1_des = " << fmt(c.r1_des) << "\n";
    o << "alpha = " << fmt(c.alpha) << "\n";
    o << "snr_db = " << fmt(c.fairness_snr_db) << "\n";
    o << "slots = " << c.fairness_slots << "\n";
    o << "mu_grid_points = " << c.mu_grid_points << "\n";
    o << "joint_online = " << (c.joint_online ? "true" : "false") << "\n";
    o << "trace_decimation = " << c.trace_decimation << "\n";
    o << "\n[region]\n";
    o << "mu_points = " << c.mu_points << "\n";
    o << "\n[outage]\n";
    o << "r0 = " << fmt(c.r0) << "\n";
    o << "min_slots = " << c.outage_min_slots << "\n";
    o << "max_slots = " << c.outage_max_slots << "\n";
    o << "min_events = " << c.outage_min_events << "\n";
    o << "\n[output]\n";
    o << "dir = " << c.out_dir << "\n";
    return o.str();
}

}  // namespace hdbs
