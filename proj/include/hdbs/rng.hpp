#pragma once

#include <cmath>
#include <cstdint>

namespace hdbs {

// splitmix64 step; used for seeding and for deriving independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// Deterministic combination of a base seed and a salt (grid index, stream id).
inline std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    std::uint64_t s = base ^ (salt * 0x9E3779B97F4A7C15ULL + 0x632BE59BD9B23C6DULL);
    return splitmix64(s);
}

// xoshiro256++ (Blackman & Vigna). Pinned generator so that traces and golden
// CSVs are reproducible across platforms; seeded from 64 bits via splitmix64.
class Xoshiro256pp {
public:
    explicit Xoshiro256pp(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1) with 53 random bits.
    double next_double() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    // Exponential with the given mean via inverse CDF, -mean*ln(1-U). U < 1
    // always, so the log argument stays positive.
    double next_exponential(double mean) { return -mean * std::log1p(-next_double()); }

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    std::uint64_t s_[4];
};

}  // namespace hdbs
