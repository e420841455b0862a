#include "ybsim/rng.hpp"

#include <cmath>

namespace ybsim {

namespace {

std::uint64_t splitmix64(std::uint64_t& x) {
    x += 0x9e3779b97f4a7c15ULL;
    std::uint64_t z = x;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
}

}  // namespace

RngStream::RngStream(std::uint64_t master_seed, RngPurpose purpose,
                     std::uint64_t a, std::uint64_t b) {
    // Mix the identifying tuple into the seeding chain one word at a time.
    std::uint64_t x = master_seed;
    (void)splitmix64(x);
    x ^= 0xd1342543de82ef95ULL * static_cast<std::uint64_t>(purpose);
    (void)splitmix64(x);
    x ^= 0xaf251af3b0f025b5ULL * (a + 1);
    (void)splitmix64(x);
    x ^= 0x9e6c63d0876a9a47ULL * (b + 1);
    for (auto& word : s_) word = splitmix64(x);
    // xoshiro must not start from the all-zero state.
    if ((s_[0] | s_[1] | s_[2] | s_[3]) == 0) s_[0] = 1;
}

std::uint64_t RngStream::next_u64() {
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

double RngStream::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double RngStream::uniform_pos() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

double RngStream::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

double RngStream::exponential(double rate) {
    return -std::log(uniform_pos()) / rate;
}

double RngStream::normal(double mean, double stddev) {
    // Box-Muller; the second variate is discarded so each call consumes a
    // fixed number of words regardless of surrounding calls.
    const double u1 = uniform_pos();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    return mean + stddev * r * std::cos(2.0 * M_PI * u2);
}

long RngStream::poisson(double mean) {
    if (mean <= 0.0) return 0;
    if (mean < 30.0) {
        // Inversion by sequential search.
        double p = std::exp(-mean);
        double cdf = p;
        const double u = uniform();
        long k = 0;
        while (u > cdf && k < 10000) {
            ++k;
            p *= mean / static_cast<double>(k);
            cdf += p;
        }
        return k;
    }
    // PTRS transformed rejection (Hormann 1993).
    const double b = 0.931 + 2.53 * std::sqrt(mean);
    const double a = -0.059 + 0.02483 * b;
    const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
    const double v_r = 0.9277 - 3.6224 / (b - 2.0);
    const double log_mean = std::log(mean);
    for (;;) {
        double u = uniform() - 0.5;
        double v = uniform();
        double us = 0.5 - std::fabs(u);
        double k = std::floor((2.0 * a / us + b) * u + mean + 0.43);
        if (us >= 0.07 && v <= v_r) return static_cast<long>(k);
        if (k < 0.0 || (us < 0.013 && v > us)) continue;
        if (std::log(v * inv_alpha / (a / (us * us) + b)) <=
            k * log_mean - mean - std::lgamma(k + 1.0)) {
            return static_cast<long>(k);
        }
    }
}

bool RngStream::bernoulli(double p) {
    return uniform() < p;
}

}  // namespace ybsim
