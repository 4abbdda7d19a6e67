#include "hdbs/experiments.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <numbers>

#include "hdbs/parallel.hpp"
#include "hdbs/rng.hpp"

namespace hdbs {

namespace {

constexpr std::uint64_t kCalSalt = 0xCA11;
constexpr std::uint64_t kEvalSalt = 0xE7A1;
constexpr std::uint64_t kFairSalt = 0xFA11;

bool scheme_enabled(const Config& cfg, const char* name) {
    return std::find(cfg.schemes.begin(), cfg.schemes.end(), name) != cfg.schemes.end();
}

ChannelTrace make_prefix(const ChannelTrace& trace, std::size_t n) {
    ChannelTrace out;
    out.seed = trace.seed;
    out.mean_gamma1 = trace.mean_gamma1;
    out.mean_gammaB = trace.mean_gammaB;
    out.slots.assign(trace.slots.begin(),
                     trace.slots.begin() + std::min(n, trace.slots.size()));
    return out;
}

CalibOptions calib_options(const Config& cfg, bool throw_on_failure) {
    CalibOptions opt;
    opt.tol = cfg.calib_tol;
    opt.max_bisect = cfg.calib_max_bisect;
    opt.max_outer = cfg.calib_max_outer;
    opt.throw_on_failure = throw_on_failure;
    return opt;
}

double binding_resid(double consumed, double pbar, bool active) {
    if (!active) return 0.0;
    // A slack budget (complementary zeta = 0) is not a calibration error.
    if (consumed < pbar * 0.99) return 0.0;
    return std::abs(consumed - pbar) / pbar;
}

struct DiscreteRatesChoice {
    DiscreteRateSet rates1;
    DiscreteRateSet ratesB;
};

// Coordinate search over single-rate candidates for the M = 1 schemes; the
// ladder form (rates.r > 0) bypasses this.
DiscreteRatesChoice optimize_discrete_rates(const ChannelTrace& cal, const Config& cfg,
                                            double mu) {
    DiscreteRatesChoice out;
    const ChannelTrace fast = make_prefix(cal, std::min<std::size_t>(cal.size(), 40000));
    CalibOptions fast_opt;
    fast_opt.tol = 5e-3;
    fast_opt.max_bisect = 80;
    fast_opt.max_outer = 12;
    fast_opt.throw_on_failure = false;

    const FddOptimizedRates seed = fdd_optimize_rates(
        fast, std::clamp(mu, 0.05, 0.95), cfg.pbar1, cfg.pbarB,
        log_spaced_grid(cfg.rate_grid_lo, cfg.rate_grid_hi, 48));
    double best1 = seed.rate1 > 0.0 ? seed.rate1 : 1.0;
    double bestB = seed.rateB > 0.0 ? seed.rateB : 1.0;

    const std::vector<double> cands =
        log_spaced_grid(std::max(cfg.rate_grid_lo, 0.25), cfg.rate_grid_hi, 12);
    auto objective = [&](double r1v, double rBv) {
        const DiscreteSolution s =
            solve_discrete_powers(fast, mu, cfg.pbar1, cfg.pbarB,
                                  DiscreteRateSet({r1v}), DiscreteRateSet({rBv}), fast_opt);
        return mu * s.thr1 + (1.0 - mu) * s.thrB;
    };
    if (mu > 0.0) {
        double best_obj = -1.0;
        for (double r : cands) {
            const double obj = objective(r, bestB);
            if (obj > best_obj) {
                best_obj = obj;
                best1 = r;
            }
        }
    }
    if (mu < 1.0) {
        double best_obj = -1.0;
        for (double r : cands) {
            const double obj = objective(best1, r);
            if (obj > best_obj) {
                best_obj = obj;
                bestB = r;
            }
        }
    }
    out.rates1 = DiscreteRateSet({best1});
    out.ratesB = DiscreteRateSet({bestB});
    return out;
}

DiscreteRatesChoice configured_discrete_rates(const ChannelTrace& cal, const Config& cfg,
                                              double mu) {
    if (cfg.rate_step > 0.0) {
        DiscreteRatesChoice out;
        out.rates1 = DiscreteRateSet::ladder(cfg.num_rates, cfg.rate_step);
        out.ratesB = DiscreteRateSet::ladder(cfg.num_rates, cfg.rate_step);
        return out;
    }
    return optimize_discrete_rates(cal, cfg, mu);
}

struct PointTraces {
    ChannelTrace cal;
    ChannelTrace eval;
};

PointTraces point_traces(const Config& cfg, std::size_t index, double m1, double mB) {
    const std::uint64_t point_seed = cfg.seed ^ static_cast<std::uint64_t>(index);
    PointTraces t;
    t.cal = generate_trace(cfg.slots_cal, m1, mB, mix_seed(point_seed, kCalSalt));
    t.eval = generate_trace(cfg.slots_eval, m1, mB, mix_seed(point_seed, kEvalSalt));
    return t;
}

RegionPoint eval_point(const std::string& scheme, double mu, const Config& cfg,
                       const SchemeConfig& sc, const DualState& dual,
                       const ChannelTrace& eval) {
    RegionPoint p;
    p.scheme = scheme;
    p.mu = mu;
    const RunStats st = simulate(eval, sc, dual);
    p.r1 = st.r1_avg;
    p.rB = st.rB_avg;
    p.p1_consumed = st.p1_avg;
    p.pB_consumed = st.pB_avg;
    p.zeta1 = dual.zeta1;
    p.zetaB = dual.zetaB;
    p.budget_resid = std::max(binding_resid(st.p1_avg, cfg.pbar1, mu > 0.0),
                              binding_resid(st.pB_avg, cfg.pbarB, mu < 1.0));
    return p;
}

std::vector<RegionPoint> region_point(const Config& cfg, std::size_t index, double mu) {
    const double m1 = cfg.mean_gamma1();
    const double mB = cfg.mean_gammaB();
    const PointTraces tr = point_traces(cfg, index, m1, mB);
    const CalibOptions opt = calib_options(cfg, false);
    std::vector<RegionPoint> rows;

    auto push_failed = [&](const char* scheme, const std::string& why) {
        RegionPoint p;
        p.scheme = scheme;
        p.mu = mu;
        p.ok = false;
        p.error = why;
        rows.push_back(p);
    };

    if (scheme_enabled(cfg, "adaptive")) {
        try {
            SchemeConfig sc;
            sc.scheme = Scheme::AdaptivePower;
            sc.mu = mu;
            sc.pbar1 = cfg.pbar1;
            sc.pbarB = cfg.pbarB;
            const CalibResult c = calibrate_zeta(tr.cal, sc, opt);
            if (!c.converged) {
                push_failed("adaptive", "calibration residuals above tolerance");
            } else {
                rows.push_back(eval_point("adaptive", mu, cfg, sc, c.dual, tr.eval));
            }
        } catch (const std::exception& e) {
            push_failed("adaptive", e.what());
        }
    }
    if (scheme_enabled(cfg, "fixed")) {
        try {
            const FixedPowerSolution s =
                solve_fixed_powers(tr.cal, mu, cfg.pbar1, cfg.pbarB, opt);
            SchemeConfig sc;
            sc.scheme = Scheme::FixedPower;
            sc.mu = mu;
            sc.pbar1 = cfg.pbar1;
            sc.pbarB = cfg.pbarB;
            sc.p1_fixed = s.dual.p1_fixed;
            sc.pB_fixed = s.dual.pB_fixed;
            rows.push_back(eval_point("fixed", mu, cfg, sc, s.dual, tr.eval));
        } catch (const std::exception& e) {
            push_failed("fixed", e.what());
        }
    }
    if (scheme_enabled(cfg, "discrete")) {
        try {
            const DiscreteRatesChoice rates = configured_discrete_rates(tr.cal, cfg, mu);
            const DiscreteSolution s = solve_discrete_powers(
                tr.cal, mu, cfg.pbar1, cfg.pbarB, rates.rates1, rates.ratesB, opt);
            SchemeConfig sc;
            sc.scheme = Scheme::DiscreteRate;
            sc.mu = mu;
            sc.pbar1 = cfg.pbar1;
            sc.pbarB = cfg.pbarB;
            sc.p1_fixed = s.dual.p1_fixed;
            sc.pB_fixed = s.dual.pB_fixed;
            sc.rates1 = rates.rates1;
            sc.ratesB = rates.ratesB;
            rows.push_back(eval_point("discrete", mu, cfg, sc, s.dual, tr.eval));
        } catch (const std::exception& e) {
            push_failed("discrete", e.what());
        }
    }
    {
        RegionPoint p;
        p.scheme = "fdd";
        p.mu = mu;
        const FddRates r = fdd_rate_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB);
        p.r1 = r.r1;
        p.rB = r.rB;
        p.p1_consumed = mu > 0.0 ? cfg.pbar1 : 0.0;
        p.pB_consumed = mu < 1.0 ? cfg.pbarB : 0.0;
        rows.push_back(p);
    }
    if (scheme_enabled(cfg, "discrete")) {
        RegionPoint p;
        p.scheme = "fdd_discrete";
        p.mu = mu;
        if (mu > 0.0 && mu < 1.0) {
            const FddOptimizedRates best =
                fdd_optimize_rates(tr.cal, mu, cfg.pbar1, cfg.pbarB,
                                   log_spaced_grid(cfg.rate_grid_lo, cfg.rate_grid_hi,
                                                   cfg.rate_grid_n));
            const FddRates t =
                fdd_throughput_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB, best.rate1, best.rateB);
            p.r1 = t.r1;
            p.rB = t.rB;
        } else if (mu == 0.0) {
            const FddOptimizedRates best = fdd_optimize_rates(
                tr.cal, mu, cfg.pbar1, cfg.pbarB,
                log_spaced_grid(cfg.rate_grid_lo, cfg.rate_grid_hi, cfg.rate_grid_n));
            p.rB = best.rateB > 0.0
                       ? fdd_throughput_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB, 1.0, best.rateB).rB
                       : 0.0;
        } else {
            const FddOptimizedRates best = fdd_optimize_rates(
                tr.cal, mu, cfg.pbar1, cfg.pbarB,
                log_spaced_grid(cfg.rate_grid_lo, cfg.rate_grid_hi, cfg.rate_grid_n));
            p.r1 = best.rate1 > 0.0
                       ? fdd_throughput_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB, best.rate1, 1.0).r1
                       : 0.0;
        }
        p.p1_consumed = mu > 0.0 ? cfg.pbar1 : 0.0;
        p.pB_consumed = mu < 1.0 ? cfg.pbarB : 0.0;
        rows.push_back(p);
    }
    return rows;
}

}  // namespace

std::vector<double> cosine_mu_grid(std::size_t points) {
    std::vector<double> grid(points);
    for (std::size_t j = 0; j < points; ++j) {
        grid[j] = 0.5 * (1.0 - std::cos(M_PI * static_cast<double>(j) /
                                        static_cast<double>(points - 1)));
    }
    grid.front() = 0.0;
    grid.back() = 1.0;
    return grid;
}

std::vector<RegionPoint> sweep_region(const Config& cfg, const std::vector<double>& mu_grid) {
    std::vector<std::vector<RegionPoint>> per_point(mu_grid.size());
    parallel_for(mu_grid.size(), cfg.threads,
                 [&](std::size_t i) { per_point[i] = region_point(cfg, i, mu_grid[i]); });
    std::vector<RegionPoint> rows;
    for (auto& v : per_point) {
        for (auto& p : v) rows.push_back(std::move(p));
    }
    return rows;
}

std::vector<SumRatePoint> sweep_sum_rate(const Config& cfg,
                                         const std::vector<double>& snr_grid_db) {
    std::vector<std::vector<SumRatePoint>> per_point(snr_grid_db.size());
    parallel_for(snr_grid_db.size(), cfg.threads, [&](std::size_t i) {
        const double snr = snr_grid_db[i];
        Config point_cfg = cfg;
        point_cfg.snr_db = snr;
        const double mu = 0.5;
        const double m1 = point_cfg.mean_gamma1();
        const double mB = point_cfg.mean_gammaB();
        const PointTraces tr = point_traces(cfg, i, m1, mB);
        const CalibOptions opt = calib_options(cfg, false);
        std::vector<SumRatePoint>& rows = per_point[i];

        auto from_region = [&](const RegionPoint& rp) {
            SumRatePoint s;
            s.scheme = rp.scheme;
            s.snr_db = snr;
            s.r1 = rp.r1;
            s.rB = rp.rB;
            s.sum_rate = rp.r1 + rp.rB;
            s.budget_resid = rp.budget_resid;
            s.ok = rp.ok;
            s.error = rp.error;
            return s;
        };

        if (scheme_enabled(cfg, "adaptive")) {
            try {
                SchemeConfig sc;
                sc.scheme = Scheme::AdaptivePower;
                sc.mu = mu;
                sc.pbar1 = cfg.pbar1;
                sc.pbarB = cfg.pbarB;
                const CalibResult c = calibrate_zeta(tr.cal, sc, opt);
                SumRatePoint s = from_region(eval_point("adaptive", mu, cfg, sc, c.dual, tr.eval));
                s.ok = c.converged;
                rows.push_back(s);
            } catch (const std::exception& e) {
                rows.push_back({"adaptive", snr, 0, 0, 0, 0, false, e.what()});
            }
        }
        if (scheme_enabled(cfg, "fixed")) {
            try {
                const FixedPowerSolution sol =
                    solve_fixed_powers(tr.cal, mu, cfg.pbar1, cfg.pbarB, opt);
                SchemeConfig sc;
                sc.scheme = Scheme::FixedPower;
                sc.mu = mu;
                sc.pbar1 = cfg.pbar1;
                sc.pbarB = cfg.pbarB;
                sc.p1_fixed = sol.dual.p1_fixed;
                sc.pB_fixed = sol.dual.pB_fixed;
                rows.push_back(from_region(eval_point("fixed", mu, cfg, sc, sol.dual, tr.eval)));
            } catch (const std::exception& e) {
                rows.push_back({"fixed", snr, 0, 0, 0, 0, false, e.what()});
            }
        }
        if (scheme_enabled(cfg, "discrete")) {
            try {
                const DiscreteRatesChoice rates = configured_discrete_rates(tr.cal, point_cfg, mu);
                const DiscreteSolution sol = solve_discrete_powers(
                    tr.cal, mu, cfg.pbar1, cfg.pbarB, rates.rates1, rates.ratesB, opt);
                SchemeConfig sc;
                sc.scheme = Scheme::DiscreteRate;
                sc.mu = mu;
                sc.pbar1 = cfg.pbar1;
                sc.pbarB = cfg.pbarB;
                sc.p1_fixed = sol.dual.p1_fixed;
                sc.pB_fixed = sol.dual.pB_fixed;
                sc.rates1 = rates.rates1;
                sc.ratesB = rates.ratesB;
                rows.push_back(
                    from_region(eval_point("discrete", mu, cfg, sc, sol.dual, tr.eval)));
            } catch (const std::exception& e) {
                rows.push_back({"discrete", snr, 0, 0, 0, 0, false, e.what()});
            }
        }
        {
            const FddRates r = fdd_rate_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB);
            SumRatePoint s;
            s.scheme = "fdd";
            s.snr_db = snr;
            s.r1 = r.r1;
            s.rB = r.rB;
            s.sum_rate = r.r1 + r.rB;
            rows.push_back(s);
        }
        if (scheme_enabled(cfg, "discrete")) {
            const FddOptimizedRates best = fdd_optimize_rates(
                tr.cal, mu, cfg.pbar1, cfg.pbarB,
                log_spaced_grid(cfg.rate_grid_lo, cfg.rate_grid_hi, cfg.rate_grid_n));
            const FddRates t =
                fdd_throughput_pair(tr.eval, mu, cfg.pbar1, cfg.pbarB, best.rate1, best.rateB);
            SumRatePoint s;
            s.scheme = "fdd_discrete";
            s.snr_db = snr;
            s.r1 = t.r1;
            s.rB = t.rB;
            s.sum_rate = t.r1 + t.rB;
            rows.push_back(s);
        }
    });
    std::vector<SumRatePoint> rows;
    for (auto& v : per_point) {
        for (auto& p : v) rows.push_back(std::move(p));
    }
    return rows;
}

namespace {

// Symmetric single-rate operating point: a common fixed power calibrated so
// the uplink budget binds, with interior prices that keep Lambda positive
// exactly when the slot is supportable.
struct OutageSetup {
    double power = 0.0;
    double zeta1 = 0.0, zetaB = 0.0;
};

OutageSetup calibrate_outage_point(const Config& cfg, double mean1, double meanB,
                                   std::uint64_t seed, double r0) {
    const double mu = 0.5;
    const ChannelTrace cal = generate_trace(cfg.slots_cal, mean1, meanB, seed);
    const DiscreteRateSet rates({r0});
    SchemeConfig sc;
    sc.scheme = Scheme::DiscreteRate;
    sc.mu = mu;
    sc.pbar1 = cfg.pbar1;
    sc.pbarB = cfg.pbarB;
    sc.rates1 = rates;
    sc.ratesB = rates;

    auto consumed1 = [&](double p) {
        DualState d;
        d.mu = mu;
        d.p1_fixed = p;
        d.pB_fixed = p;
        d.zeta1 = 0.5 * mu * r0 / p;
        d.zetaB = 0.5 * (1.0 - mu) * r0 / p;
        return average_consumed_power(cal, sc, d, Link::Uplink);
    };
    double lo = cfg.pbar1, hi = cfg.pbar1 * 1e4;
    if (consumed1(lo) > cfg.pbar1) lo = cfg.pbar1 * 1e-3;
    for (int s = 0; s < 80; ++s) {
        const double mid = std::sqrt(lo * hi);
        const double c = consumed1(mid);
        if (std::abs(c - cfg.pbar1) <= 0.25 * cfg.calib_tol * cfg.pbar1) {
            lo = hi = mid;
            break;
        }
        (c < cfg.pbar1 ? lo : hi) = mid;
        if (hi - lo <= 1e-12 * hi) break;
    }
    OutageSetup out;
    out.power = 0.5 * (lo + hi);
    out.zeta1 = 0.5 * mu * r0 / out.power;
    out.zetaB = 0.5 * (1.0 - mu) * r0 / out.power;
    return out;
}

std::size_t scale_slots(const Config& cfg, double p_expected) {
    if (!(p_expected > 0.0)) return cfg.outage_max_slots;
    const double want = 1.3 * static_cast<double>(cfg.outage_min_events) / p_expected;
    const double clamped =
        std::clamp(want, static_cast<double>(cfg.outage_min_slots),
                   static_cast<double>(cfg.outage_max_slots));
    return static_cast<std::size_t>(clamped);
}

}  // namespace

std::vector<OutageResult> sweep_outage(const Config& cfg,
                                       const std::vector<double>& snr_grid_db, double r0) {
    if (!(r0 > 0.0)) throw std::invalid_argument("sweep_outage: r0 must be > 0");
    std::vector<std::vector<OutageResult>> per_point(snr_grid_db.size());
    parallel_for(snr_grid_db.size(), cfg.threads, [&](std::size_t i) {
        const double snr = snr_grid_db[i];
        const double mean1 = cfg.mean_gamma_for_snr(snr);
        const double meanB = db_to_linear(snr) / cfg.pbarB;
        const std::uint64_t point_seed = cfg.seed ^ static_cast<std::uint64_t>(i);
        std::vector<OutageResult>& rows = per_point[i];

        // Proposed discrete scheme at the symmetric operating point.
        {
            const OutageSetup setup =
                calibrate_outage_point(cfg, mean1, meanB, mix_seed(point_seed, kCalSalt), r0);
            const double gamma_th = (std::exp2(r0) - 1.0) / setup.power;
            const double p_sleep = 1.0 - std::exp(-gamma_th / mean1);
            const double p_expected = p_sleep * (1.0 - std::exp(-gamma_th / meanB));
            const std::size_t slots = scale_slots(cfg, p_expected);

            const double mu = 0.5;
            const double cost1 = setup.zeta1 * setup.power;
            const double costB = setup.zetaB * setup.power;
            const std::uint64_t eval_seed = mix_seed(point_seed, kEvalSalt);
            Xoshiro256pp rng1(mix_seed(eval_seed, 1));
            Xoshiro256pp rngB(mix_seed(eval_seed, 2));
            std::size_t out1 = 0, outB = 0, impossible = 0;
            for (std::size_t s = 0; s < slots; ++s) {
                const double g1 = rng1.next_exponential(mean1);
                const double gB = rngB.next_exponential(meanB);
                const bool o1 = g1 >= gamma_th;
                const bool oB = gB >= gamma_th;
                const double l1 = mu * (o1 ? r0 : 0.0) - cost1;
                const double lB = (1.0 - mu) * (oB ? r0 : 0.0) - costB;
                const bool up = l1 >= lB && l1 > 0.0;
                const bool down = !up && lB > l1 && lB > 0.0;
                if (!up && !down) {
                    ++out1;
                    ++outB;
                } else if (up && !o1) {
                    ++out1;
                    ++impossible;
                } else if (down && !oB) {
                    ++outB;
                    ++impossible;
                }
            }
            OutageResult r;
            r.scheme = "discrete";
            r.snr_db = snr;
            r.slots = slots;
            r.pout1 = static_cast<double>(out1) / static_cast<double>(slots);
            r.poutB = static_cast<double>(outB) / static_cast<double>(slots);
            r.low_confidence =
                p_expected * static_cast<double>(slots) < static_cast<double>(cfg.outage_min_events);
            r.impossible_events = impossible;
            r.fixed_power = setup.power;
            rows.push_back(r);
        }

        // FDD benchmark with the same single rate and band split 1/2.
        {
            const double mu = 0.5;
            const double th1 = (std::exp2(r0) - 1.0) / (cfg.pbar1 / mu);
            const double thB = (std::exp2(r0) - 1.0) / (cfg.pbarB / (1.0 - mu));
            const double p_expected =
                std::min(1.0 - std::exp(-th1 / mean1), 1.0 - std::exp(-thB / meanB));
            const std::size_t slots = scale_slots(cfg, p_expected);
            const std::uint64_t eval_seed = mix_seed(point_seed, kEvalSalt + 1);
            Xoshiro256pp rng1(mix_seed(eval_seed, 1));
            Xoshiro256pp rngB(mix_seed(eval_seed, 2));
            std::size_t out1 = 0, outB = 0;
            for (std::size_t s = 0; s < slots; ++s) {
                if (rng1.next_exponential(mean1) < th1) ++out1;
                if (rngB.next_exponential(meanB) < thB) ++outB;
            }
            OutageResult r;
            r.scheme = "fdd";
            r.snr_db = snr;
            r.slots = slots;
            r.pout1 = static_cast<double>(out1) / static_cast<double>(slots);
            r.poutB = static_cast<double>(outB) / static_cast<double>(slots);
            r.low_confidence =
                p_expected * static_cast<double>(slots) < static_cast<double>(cfg.outage_min_events);
            rows.push_back(r);
        }
    });
    std::vector<OutageResult> rows;
    for (auto& v : per_point) {
        for (auto& p : v) rows.push_back(std::move(p));
    }
    return rows;
}

DiversityFit fit_diversity_order(const std::vector<OutageResult>& results, double window_lo_db,
                                 double window_hi_db) {
    std::vector<double> x, y1, yB;
    for (const OutageResult& r : results) {
        if (r.snr_db < window_lo_db - 1e-9 || r.snr_db > window_hi_db + 1e-9) continue;
        if (!(r.pout1 > 0.0) || !(r.poutB > 0.0)) continue;
        x.push_back(r.snr_db / 10.0);
        y1.push_back(std::log10(r.pout1));
        yB.push_back(std::log10(r.poutB));
    }
    if (x.size() < 4) {
        throw std::invalid_argument(
            "fit_diversity_order: need at least 4 positive points in the window");
    }
    auto slope = [&](const std::vector<double>& y) {
        const double n = static_cast<double>(x.size());
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        for (std::size_t i = 0; i < x.size(); ++i) {
            sx += x[i];
            sy += y[i];
            sxx += x[i] * x[i];
            sxy += x[i] * y[i];
        }
        return (n * sxy - sx * sy) / (n * sxx - sx * sx);
    };
    DiversityFit fit;
    fit.order1 = -slope(y1);
    fit.orderB = -slope(yB);
    fit.points_used = x.size();
    return fit;
}

FairnessResult run_fairness(const Config& cfg, FairnessMode mode, double target) {
    const double mean1 = db_to_linear(cfg.fairness_snr_db) / cfg.pbar1;
    const double meanB = db_to_linear(cfg.fairness_snr_db) / cfg.pbarB;
    const std::size_t K = cfg.mu_grid_points;
    const ChannelTrace cal =
        generate_trace(cfg.slots_cal, mean1, meanB, mix_seed(cfg.seed, kCalSalt));

    // Pre-calibrated prices on the quantized mu grid.
    std::vector<double> z1(K, 1.0), zB(K, 1.0);
    CalibOptions opt = calib_options(cfg, false);
    const std::size_t chunk = 8;
    const std::size_t n_chunks = (K + chunk - 1) / chunk;
    parallel_for(n_chunks, cfg.threads, [&](std::size_t c) {
        double warm1 = 0.0, warmB = 0.0;
        for (std::size_t k = c * chunk; k < std::min(K, (c + 1) * chunk); ++k) {
            SchemeConfig sc;
            sc.scheme = Scheme::AdaptivePower;
            sc.mu = static_cast<double>(k) / static_cast<double>(K - 1);
            sc.pbar1 = cfg.pbar1;
            sc.pbarB = cfg.pbarB;
            const CalibResult r = calibrate_zeta(cal, sc, opt, warm1, warmB);
            z1[k] = r.dual.zeta1;
            zB[k] = r.dual.zetaB;
            warm1 = r.dual.zeta1;
            warmB = r.dual.zetaB;
        }
    });

    FairnessResult res;
    {
        SchemeConfig sc;
        sc.scheme = Scheme::AdaptivePower;
        sc.mu = 1.0;
        sc.pbar1 = cfg.pbar1;
        sc.pbarB = cfg.pbarB;
        DualState d;
        d.mu = 1.0;
        d.zeta1 = z1[K - 1];
        d.zetaB = zB[K - 1];
        res.endpoint_r1 = simulate(cal, sc, d).r1_avg;
    }
    if (mode == FairnessMode::Prioritized) {
        res.target_feasible = target <= res.endpoint_r1 * 1.001;
    }

    const StepPolicy mu_policy = make_step_policy(cfg.delta0_mu, cfg.exponent_mu);
    const StepPolicy zeta_policy = make_step_policy(cfg.delta0_zeta, cfg.exponent_zeta);
    EstimatorState est;
    est.mu_est = 0.5;
    est.zeta_est1 = z1[K / 2];
    est.zeta_estB = zB[K / 2];

    const std::uint64_t run_seed = mix_seed(cfg.seed, kFairSalt);
    Xoshiro256pp rng1(mix_seed(run_seed, 1));
    Xoshiro256pp rngB(mix_seed(run_seed, 2));
    const std::size_t N = cfg.fairness_slots;
    const std::size_t dec = std::max<std::size_t>(1, cfg.trace_decimation);
    for (std::size_t i = 1; i <= N; ++i) {
        est.slot_index = i;
        SlotGains g{rng1.next_exponential(mean1), rngB.next_exponential(meanB)};
        DualState d;
        if (cfg.joint_online) {
            d.mu = est.mu_est;
            d.zeta1 = std::max(est.zeta_est1, 1e-12);
            d.zetaB = std::max(est.zeta_estB, 1e-12);
        } else {
            const std::size_t k = static_cast<std::size_t>(
                std::lround(est.mu_est * static_cast<double>(K - 1)));
            d.mu = static_cast<double>(k) / static_cast<double>(K - 1);
            d.zeta1 = z1[k];
            d.zetaB = zB[k];
        }
        const SlotDecision dec_slot = decide_adaptive(g, d);
        update_rate_average(est, dec_slot, Link::Uplink);
        update_rate_average(est, dec_slot, Link::Downlink);
        if (cfg.joint_online) {
            update_power_average(est, dec_slot, Link::Uplink);
            update_power_average(est, dec_slot, Link::Downlink);
            update_zeta(est, cfg.pbar1, zeta_policy, Link::Uplink);
            update_zeta(est, cfg.pbarB, zeta_policy, Link::Downlink);
        }
        if (mode == FairnessMode::Prioritized) {
            update_mu_prioritized(est, target, mu_policy);
        } else {
            update_mu_proportional(est, target, mu_policy);
        }
        if (i % dec == 0 || i == N || i == 1) {
            res.rows.push_back({i, est.mu_est, est.r_avg_est1, est.r_avg_estB});
        }
    }
    res.final_mu = est.mu_est;
    res.final_r1 = est.r_avg_est1;
    res.final_rB = est.r_avg_estB;
    return res;
}

namespace {

void write_file(const std::string& path, const std::string& content) {
    std::FILE* f = std::fopen(path.c_str(), "wb");
    if (!f) throw std::runtime_error("cannot open for writing: " + path);
    std::fwrite(content.data(), 1, content.size(), f);
    std::fclose(f);
}

std::string region_csv(const std::vector<RegionPoint>& rows) {
    std::string out = "scheme,mu,r1,rB,p1_consumed,pB_consumed,zeta1,zetaB\n";
    char buf[400];
    for (const RegionPoint& p : rows) {
        if (!p.ok) continue;
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      p.scheme.c_str(), p.mu, p.r1, p.rB, p.p1_consumed, p.pB_consumed,
                      p.zeta1, p.zetaB);
        out += buf;
    }
    return out;
}

std::string sumrate_csv(const std::vector<SumRatePoint>& rows) {
    std::string out = "scheme,snr_db,sum_rate,r1,rB\n";
    char buf[300];
    for (const SumRatePoint& p : rows) {
        if (!p.ok) continue;
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%.17g\n", p.scheme.c_str(),
                      p.snr_db, p.sum_rate, p.r1, p.rB);
        out += buf;
    }
    return out;
}

std::string outage_csv(const std::vector<OutageResult>& rows) {
    std::string out = "scheme,snr_db,pout1,poutB,slots\n";
    char buf[300];
    for (const OutageResult& p : rows) {
        std::snprintf(buf, sizeof(buf), "%s,%.17g,%.17g,%.17g,%zu\n", p.scheme.c_str(),
                      p.snr_db, p.pout1, p.poutB, p.slots);
        out += buf;
    }
    return out;
}

std::string fairness_csv(const std::vector<FairnessRow>& rows) {
    std::string out = "slot,mu,r1avg,rBavg\n";
    char buf[240];
    for (const FairnessRow& p : rows) {
        std::snprintf(buf, sizeof(buf), "%zu,%.17g,%.17g,%.17g\n", p.slot, p.mu, p.r1_avg,
                      p.rB_avg);
        out += buf;
    }
    return out;
}

}  // namespace

ExperimentSummary run_experiment(const Config& cfg, const std::string& subcommand,
                                 const std::string& out_dir) {
    const auto t0 = std::chrono::steady_clock::now();
    std::filesystem::create_directories(out_dir);
    write_file(out_dir + "/effective.ini", render_config(cfg));

    ExperimentSummary sum;
    sum.experiment = subcommand;

    if (subcommand == "region") {
        const std::vector<double> grid = cosine_mu_grid(cfg.mu_points);
        const std::vector<RegionPoint> rows = sweep_region(cfg, grid);
        write_file(out_dir + "/region.csv", region_csv(rows));
        sum.points_total = rows.size();
        for (const RegionPoint& p : rows) {
            if (!p.ok) {
                ++sum.points_failed;
                sum.notes.push_back("failed " + p.scheme + " at mu=" + std::to_string(p.mu) +
                                    ": " + p.error);
            }
            sum.max_budget_resid = std::max(sum.max_budget_resid, p.budget_resid);
        }
    } else if (subcommand == "sumrate") {
        std::vector<double> grid = cfg.snr_grid_db;
        if (grid.empty()) grid = parse_grid_spec("0:20:2");
        const std::vector<SumRatePoint> rows = sweep_sum_rate(cfg, grid);
        write_file(out_dir + "/sumrate.csv", sumrate_csv(rows));
        sum.points_total = rows.size();
        for (const SumRatePoint& p : rows) {
            if (!p.ok) {
                ++sum.points_failed;
                sum.notes.push_back("failed " + p.scheme + " at snr=" + std::to_string(p.snr_db) +
                                    ": " + p.error);
            }
            sum.max_budget_resid = std::max(sum.max_budget_resid, p.budget_resid);
        }
    } else if (subcommand == "outage") {
        std::vector<double> grid = cfg.snr_grid_db;
        if (grid.empty()) grid = parse_grid_spec("10:30:2.5");
        const std::vector<OutageResult> rows = sweep_outage(cfg, grid, cfg.r0);
        write_file(out_dir + "/outage.csv", outage_csv(rows));
        sum.points_total = rows.size();
        for (const OutageResult& p : rows) {
            if (p.low_confidence) {
                sum.notes.push_back("low-confidence " + p.scheme +
                                    " point at snr=" + std::to_string(p.snr_db));
            }
        }
    } else if (subcommand == "fairness") {
        const double target =
            cfg.fairness_mode == FairnessMode::Prioritized ? cfg.r1_des : cfg.alpha;
        const FairnessResult res = run_fairness(cfg, cfg.fairness_mode, target);
        write_file(out_dir + "/fairness.csv", fairness_csv(res.rows));
        sum.points_total = res.rows.size();
        char buf[240];
        std::snprintf(buf, sizeof(buf),
                      "final mu=%.4f r1avg=%.4f rBavg=%.4f (mu=1 endpoint rate %.4f)",
                      res.final_mu, res.final_r1, res.final_rB, res.endpoint_r1);
        sum.notes.push_back(buf);
        if (!res.target_feasible) {
            sum.notes.push_back("warning: target above the mu=1 endpoint rate; proceeding");
        }
    } else if (subcommand == "calibrate") {
        const double m1 = cfg.mean_gamma1();
        const double mB = cfg.mean_gammaB();
        const ChannelTrace cal =
            generate_trace(cfg.slots_cal, m1, mB, mix_seed(cfg.seed, kCalSalt));
        std::string records;
        const CalibOptions opt = calib_options(cfg, false);
        if (scheme_enabled(cfg, "adaptive")) {
            SchemeConfig sc;
            sc.scheme = Scheme::AdaptivePower;
            sc.mu = cfg.mu;
            sc.pbar1 = cfg.pbar1;
            sc.pbarB = cfg.pbarB;
            const CalibResult r = calibrate_zeta(cal, sc, opt);
            records += "adaptive " + calibration_record(cal, sc, r) + "\n";
            if (!r.converged) ++sum.points_failed;
            ++sum.points_total;
            sum.max_budget_resid = std::max({sum.max_budget_resid, r.resid1, r.residB});
        }
        if (scheme_enabled(cfg, "fixed")) {
            const FixedPowerSolution s = solve_fixed_powers(cal, cfg.mu, cfg.pbar1, cfg.pbarB, opt);
            SchemeConfig sc;
            sc.scheme = Scheme::FixedPower;
            sc.mu = cfg.mu;
            CalibResult r;
            r.dual = s.dual;
            r.resid1 = s.stat_resid1;
            r.residB = s.stat_residB;
            records += "fixed " + calibration_record(cal, sc, r) + "\n";
            if (!s.converged) ++sum.points_failed;
            ++sum.points_total;
        }
        if (scheme_enabled(cfg, "discrete")) {
            const DiscreteRatesChoice rates = configured_discrete_rates(cal, cfg, cfg.mu);
            const DiscreteSolution s = solve_discrete_powers(cal, cfg.mu, cfg.pbar1, cfg.pbarB,
                                                             rates.rates1, rates.ratesB, opt);
            SchemeConfig sc;
            sc.scheme = Scheme::DiscreteRate;
            sc.mu = cfg.mu;
            CalibResult r;
            r.dual = s.dual;
            records += "discrete " + calibration_record(cal, sc, r) + "\n";
            if (!s.converged) ++sum.points_failed;
            ++sum.points_total;
        }
        write_file(out_dir + "/calibration.txt", records);
    } else {
        throw std::invalid_argument("run_experiment: unknown subcommand '" + subcommand + "'");
    }

    sum.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    if (cfg.strict && sum.points_failed > 0) sum.exit_code = 1;
    return sum;
}

}  // namespace hdbs
