#include "hdbs/fdd.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hdbs {

FddRates fdd_rate_pair(const ChannelTrace& trace, double mu, double pbar1, double pbarB) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw std::invalid_argument("fdd_rate_pair: mu must lie in [0,1]");
    }
    FddRates out;
    const double n = static_cast<double>(trace.slots.size());
    if (mu > 0.0) {
        const double boost = pbar1 / mu;
        double sum = 0.0;
        for (const SlotGains& g : trace.slots) sum += std::log2(1.0 + boost * g.gamma1);
        out.r1 = mu * sum / n;
    }
    if (mu < 1.0) {
        const double boost = pbarB / (1.0 - mu);
        double sum = 0.0;
        for (const SlotGains& g : trace.slots) sum += std::log2(1.0 + boost * g.gammaB);
        out.rB = (1.0 - mu) * sum / n;
    }
    return out;
}

FddRates fdd_throughput_pair(const ChannelTrace& trace, double mu, double pbar1, double pbarB,
                             double rate1, double rateB) {
    if (!(mu >= 0.0 && mu <= 1.0)) {
        throw std::invalid_argument("fdd_throughput_pair: mu must lie in [0,1]");
    }
    if (!(rate1 > 0.0) || !(rateB > 0.0)) {
        throw std::invalid_argument("fdd_throughput_pair: rates must be > 0");
    }
    FddRates out;
    const double n = static_cast<double>(trace.slots.size());
    if (mu > 0.0) {
        const double boost = pbar1 / mu;
        std::size_t ok = 0;
        for (const SlotGains& g : trace.slots) {
            if (std::log2(1.0 + boost * g.gamma1) >= rate1) ++ok;
        }
        out.r1 = mu * rate1 * static_cast<double>(ok) / n;
    }
    if (mu < 1.0) {
        const double boost = pbarB / (1.0 - mu);
        std::size_t ok = 0;
        for (const SlotGains& g : trace.slots) {
            if (std::log2(1.0 + boost * g.gammaB) >= rateB) ++ok;
        }
        out.rB = (1.0 - mu) * rateB * static_cast<double>(ok) / n;
    }
    return out;
}

FddOptimizedRates fdd_optimize_rates(const ChannelTrace& trace, double mu, double pbar1,
                                     double pbarB, const std::vector<double>& grid) {
    if (grid.empty()) {
        throw std::invalid_argument("fdd_optimize_rates: empty rate grid");
    }
    FddOptimizedRates best;
    // Sort each link's boosted capacities once; every rate candidate is then a
    // binary search for the success count.
    auto link_best = [&](bool uplink, double band, double pbar, double& rate, double& thr) {
        if (band <= 0.0) return;
        const double boost = pbar / band;
        std::vector<double> caps;
        caps.reserve(trace.slots.size());
        for (const SlotGains& g : trace.slots) {
            caps.push_back(std::log2(1.0 + boost * (uplink ? g.gamma1 : g.gammaB)));
        }
        std::sort(caps.begin(), caps.end());
        const double n = static_cast<double>(caps.size());
        for (double r : grid) {
            const auto it = std::lower_bound(caps.begin(), caps.end(), r);
            const double success = static_cast<double>(caps.end() - it) / n;
            const double t = band * r * success;
            if (t > thr) {
                thr = t;
                rate = r;
            }
        }
    };
    link_best(true, mu, pbar1, best.rate1, best.thr1);
    link_best(false, 1.0 - mu, pbarB, best.rateB, best.thrB);
    return best;
}

std::vector<double> log_spaced_grid(double lo, double hi, std::size_t n) {
    std::vector<double> g(n);
    const double llo = std::log(lo), lhi = std::log(hi);
    for (std::size_t i = 0; i < n; ++i) {
        const double t = n == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(n - 1);
        g[i] = std::exp(llo + t * (lhi - llo));
    }
    return g;
}

}  // namespace hdbs
