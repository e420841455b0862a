#pragma once

#include <cstdint>

namespace ybsim {

// Purpose tags used when deriving per-task random streams from the master
// seed.  Every (purpose, index...) tuple maps to its own stream, so results
// do not depend on thread scheduling or evaluation order.
enum class RngPurpose : std::uint64_t {
    trajectory = 1,
    detection = 2,
    shot_noise = 3,
    scrambled_phase = 4,
    bin_noise = 5,
    bootstrap = 6,
    preparation = 7,
};

// Small deterministic random stream (xoshiro256++ core, SplitMix64 seeding).
// Stateless derivation: identical (seed, purpose, a, b) always yields the
// same sequence on every platform.
class RngStream {
  public:
    RngStream() : RngStream(0, RngPurpose::trajectory, 0, 0) {}
    RngStream(std::uint64_t master_seed, RngPurpose purpose,
              std::uint64_t a = 0, std::uint64_t b = 0);

    std::uint64_t next_u64();

    // Uniform on [0, 1) with 53-bit resolution.
    double uniform();
    // Uniform on (0, 1]; safe as a log() argument.
    double uniform_pos();
    double uniform(double lo, double hi);

    double exponential(double rate);
    double normal(double mean, double stddev);
    // Exact Poisson sampling (inversion below 30, PTRS rejection above).
    long poisson(double mean);
    bool bernoulli(double p);

  private:
    std::uint64_t s_[4];
};

}  // namespace ybsim
