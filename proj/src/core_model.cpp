#include "hdbs/core_model.hpp"

#include <cmath>
#include <stdexcept>

namespace hdbs {

DiscreteRateSet::DiscreteRateSet(std::vector<double> rates) : rates_(std::move(rates)) {
    if (rates_.empty()) {
        throw std::invalid_argument("DiscreteRateSet: rate set must be nonempty");
    }
    double prev = 0.0;
    for (double r : rates_) {
        if (!std::isfinite(r) || r <= prev) {
            throw std::invalid_argument(
                "DiscreteRateSet: rates must be positive, finite and strictly increasing");
        }
        prev = r;
    }
}

DiscreteRateSet DiscreteRateSet::ladder(std::size_t count, double step) {
    std::vector<double> r;
    r.reserve(count);
    for (std::size_t k = 1; k <= count; ++k) {
        r.push_back(static_cast<double>(k) * step);
    }
    return DiscreteRateSet(std::move(r));
}

double capacity(double power, double gain) {
    if (!(power >= 0.0) || !std::isfinite(power)) {
        throw std::invalid_argument("capacity: power must be finite and >= 0");
    }
    if (!(gain >= 0.0) || !std::isfinite(gain)) {
        throw std::invalid_argument("capacity: gain must be finite and >= 0");
    }
    return std::log2(1.0 + power * gain);
}

NetworkState select_state(const SelectionMetrics& m) {
    if (m.lambda1 >= m.lambdaB && m.lambda1 > 0.0) {
        return NetworkState::UplinkTx;
    }
    if (m.lambdaB > m.lambda1 && m.lambdaB > 0.0) {
        return NetworkState::DownlinkTx;
    }
    return NetworkState::Silent;
}

bool discrete_supportable(double power, double gain, double rate) {
    return std::log2(1.0 + power * gain) >= rate;
}

BestRate best_discrete_rate(double power, double gain, const DiscreteRateSet& rates) {
    const double cap = std::log2(1.0 + power * gain);
    BestRate best;
    for (std::size_t i = rates.size(); i-- > 0;) {
        if (cap >= rates[i]) {
            best.rate = rates[i];
            best.index = i;
            break;
        }
    }
    return best;
}

}  // namespace hdbs
