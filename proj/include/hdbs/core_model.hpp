#pragma once

#include <cstddef>
#include <optional>
#include <vector>

namespace hdbs {

// Normalized magnitude-squared fading gains for one slot, gamma = |h|^2 / sigma^2
// (units 1/W), so that capacity = log2(1 + P * gamma).
struct SlotGains {
    double gamma1 = 0.0;  // U1 -> BS
    double gammaB = 0.0;  // BS -> U2
};

// Network state of the half-duplex BS in one slot. Exactly one of:
//   Silent     -- q1 = qB = 0
//   UplinkTx   -- q1 = 1 (U1 transmits, BS receives)
//   DownlinkTx -- qB = 1 (BS transmits to U2)
enum class NetworkState { Silent, UplinkTx, DownlinkTx };

// State-selection metrics (Lambda_1, Lambda_B): per-slot weighted utility minus
// power cost. May be negative.
struct SelectionMetrics {
    double lambda1 = 0.0;
    double lambdaB = 0.0;
};

// Strictly increasing set of positive transmission rates in bits/symbol.
class DiscreteRateSet {
public:
    DiscreteRateSet() = default;
    // Throws std::invalid_argument unless rates are positive, finite and
    // strictly increasing.
    explicit DiscreteRateSet(std::vector<double> rates);

    // Ladder {step, 2*step, ..., count*step}.
    static DiscreteRateSet ladder(std::size_t count, double step);

    std::size_t size() const { return rates_.size(); }
    bool empty() const { return rates_.empty(); }
    double operator[](std::size_t i) const { return rates_[i]; }
    double largest() const { return rates_.back(); }
    const std::vector<double>& values() const { return rates_; }

private:
    std::vector<double> rates_;
};

// Outcome of one slot. state == Silent implies power == 0 and rate == 0.
// rate_index and the outage flag are meaningful for the discrete-rate scheme
// only; continuous-rate schemes leave outage false.
struct SlotDecision {
    NetworkState state = NetworkState::Silent;
    double power = 0.0;  // W consumed by the transmitting node
    double rate = 0.0;   // bits/symbol carried this slot
    std::optional<std::size_t> rate_index;
    bool outage = false;
};

// Shannon capacity log2(1 + power * gain) in bits/symbol. Zero when either
// argument is zero. Throws std::invalid_argument on negative or non-finite
// input.
double capacity(double power, double gain);

// Three-way state selection:
//   UplinkTx   iff lambda1 >= lambdaB and lambda1 > 0
//   DownlinkTx iff lambdaB >  lambda1 and lambdaB > 0
//   Silent     iff lambda1 <= 0 and lambdaB <= 0
// The clauses partition the plane; a tie lambda1 == lambdaB > 0 falls in the
// first clause and selects the uplink.
NetworkState select_state(const SelectionMetrics& metrics);

// Outage indicator complement: true iff log2(1 + power*gain) >= rate, i.e. a
// codeword at `rate` survives. The comparison is an exact >=, no epsilon.
bool discrete_supportable(double power, double gain, double rate);

struct BestRate {
    double rate = 0.0;  // 0 when nothing is supportable
    std::optional<std::size_t> index;
};

// Largest supportable rate in the set (equivalently arg max_m R^m * O^m since
// the set is strictly increasing), or (0, nullopt) when none is supportable.
BestRate best_discrete_rate(double power, double gain, const DiscreteRateSet& rates);

}  // namespace hdbs
