#include "hdbs/online.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hdbs {

double StepPolicy::delta(std::size_t i) const {
    return delta0 * std::pow(static_cast<double>(i), -exponent);
}

StepPolicy make_step_policy(double delta0, double exponent) {
    if (!(delta0 > 0.0 && delta0 < 1.0)) {
        throw std::invalid_argument("StepPolicy: delta0 must lie in (0,1)");
    }
    if (!(exponent > 0.5 && exponent <= 1.0)) {
        throw std::invalid_argument("StepPolicy: exponent must lie in (0.5, 1]");
    }
    return StepPolicy{delta0, exponent};
}

namespace {

bool transmits(const SlotDecision& d, Link link) {
    return (link == Link::Uplink) ? d.state == NetworkState::UplinkTx
                                  : d.state == NetworkState::DownlinkTx;
}

double running(double prev, double sample, std::size_t i) {
    const double n = static_cast<double>(i);
    return (n - 1.0) / n * prev + sample / n;
}

}  // namespace

void update_power_average(EstimatorState& est, const SlotDecision& d, Link link) {
    const double qp = transmits(d, link) ? d.power : 0.0;
    double& avg = (link == Link::Uplink) ? est.p_avg_est1 : est.p_avg_estB;
    avg = running(avg, qp, est.slot_index);
}

void update_rate_average(EstimatorState& est, const SlotDecision& d, Link link) {
    const double qr = transmits(d, link) ? d.rate : 0.0;
    double& avg = (link == Link::Uplink) ? est.r_avg_est1 : est.r_avg_estB;
    avg = running(avg, qr, est.slot_index);
}

void update_zeta(EstimatorState& est, double pbar, const StepPolicy& policy, Link link) {
    if (!(pbar > 0.0)) {
        throw std::invalid_argument("update_zeta: pbar must be > 0");
    }
    const double d = policy.delta(est.slot_index);
    double& zeta = (link == Link::Uplink) ? est.zeta_est1 : est.zeta_estB;
    const double avg = (link == Link::Uplink) ? est.p_avg_est1 : est.p_avg_estB;
    zeta = std::max(0.0, zeta + d * (avg - pbar));
}

void update_fixed_power(EstimatorState& est, const SlotGains& gains, const SlotDecision& dec,
                        double mu, const StepPolicy& policy, Link link) {
    const bool up = link == Link::Uplink;
    const double q = transmits(dec, link) ? 1.0 : 0.0;
    const double gamma = up ? gains.gamma1 : gains.gammaB;
    const double w = up ? mu : 1.0 - mu;
    double& p_est = up ? est.p_est1 : est.p_estB;
    double& e_acc = up ? est.e_acc1 : est.e_accB;
    const double zeta = up ? est.zeta_est1 : est.zeta_estB;
    const double term =
        w * q * gamma / (std::numbers::ln2 * (1.0 + p_est * gamma)) - zeta * q;
    e_acc = running(e_acc, term, est.slot_index);
    p_est = std::max(0.0, p_est + policy.delta(est.slot_index) * e_acc);
}

void update_discrete_power(EstimatorState& est, double gain_prev, double gain,
                           const SlotDecision& dec, double mu, const DiscreteRateSet& rates,
                           const StepPolicy& policy, Link link) {
    const bool up = link == Link::Uplink;
    const double q = transmits(dec, link) ? 1.0 : 0.0;
    const double w = up ? mu : 1.0 - mu;
    double& p_est = up ? est.p_est1 : est.p_estB;
    double& e_acc = up ? est.e_acc1 : est.e_accB;
    const double zeta = up ? est.zeta_est1 : est.zeta_estB;

    const double cap_prev = std::log2(1.0 + p_est * gain_prev);
    const double cap_now = std::log2(1.0 + p_est * gain);
    auto window = [&](std::size_t j) {  // Delta^j(i)
        const double r = rates[j];
        return (cap_prev <= r && r <= cap_now) ? 1.0 : 0.0;
    };
    double bracket = 0.0;
    for (std::size_t m = 0; m < rates.size(); ++m) {
        bracket += rates[m] * window(m);
    }
    for (std::size_t m = 0; m + 1 < rates.size(); ++m) {
        bracket -= rates[m] * window(m + 1);
    }
    const double term =
        w * q * gain * bracket / (std::numbers::ln2 * (1.0 + p_est * gain)) - zeta * q;
    e_acc = running(e_acc, term, est.slot_index);
    p_est = std::max(0.0, p_est + policy.delta(est.slot_index) * e_acc);
}

void update_mu_prioritized(EstimatorState& est, double r1_des, const StepPolicy& policy) {
    if (!(r1_des >= 0.0)) {
        throw std::invalid_argument("update_mu_prioritized: r1_des must be >= 0");
    }
    const double d = policy.delta(est.slot_index);
    est.mu_est = std::clamp(est.mu_est - d * (est.r_avg_est1 - r1_des), 0.0, 1.0);
}

void update_mu_proportional(EstimatorState& est, double alpha, const StepPolicy& policy) {
    if (!(alpha > 0.0)) {
        throw std::invalid_argument("update_mu_proportional: alpha must be > 0");
    }
    const double d = policy.delta(est.slot_index);
    est.mu_est = std::clamp(est.mu_est - d * (est.r_avg_est1 - alpha * est.r_avg_estB), 0.0, 1.0);
}

}  // namespace hdbs
