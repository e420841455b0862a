#include <doctest.h>

#include <cmath>

#include "ybsim/qubit.hpp"
#include "ybsim/rng.hpp"

using namespace ybsim;

namespace {

MicrowavePulse pulse(double area_over_pi, double phase = 0,
                     double detuning_hz = 0) {
    MicrowavePulse p;
    p.rabi_frequency_rad_per_s = M_PI / 6.0e-6;  // 6 us pi time
    p.duration_s = area_over_pi * 6.0e-6;
    p.phase_rad = phase;
    p.detuning_hz = detuning_hz;
    return p;
}

}  // namespace

TEST_CASE("resonant pi pulse inverts the qubit") {
    const QubitState out = apply_pulse(QubitState{}, pulse(1.0), 0.0);
    CHECK(out.prob_one() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(out.norm() == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zero-duration pulse is the identity") {
    QubitState q;
    q.c0 = {0.6, 0.0};
    q.c1 = {0.0, 0.8};
    const QubitState out = apply_pulse(q, pulse(0.0), 123.0);
    CHECK(out.c0 == q.c0);
    CHECK(out.c1 == q.c1);
}

TEST_CASE("two pi/2 pulses interfere as cos^2(phi/2)") {
    for (double phi : {0.0, 0.4, M_PI / 2, 1.9, M_PI, 5.0}) {
        QubitState q;
        q = apply_pulse(q, pulse(0.5, 0.0), 0.0);
        q = apply_pulse(q, pulse(0.5, phi), 0.0);
        CHECK(q.prob_one() ==
              doctest::Approx(std::cos(phi / 2) * std::cos(phi / 2))
                  .epsilon(1e-10));
    }
}

TEST_CASE("free precession advances the relative phase") {
    // pi/2, free evolution for half a detuning period, pi/2 of the same
    // phase: the qubit returns to |0>.
    const double detuning = 1000.0;  // Hz
    QubitState q;
    q = apply_pulse(q, pulse(0.5), detuning * 0 + 0.0);
    MicrowavePulse free;
    free.duration_s = 0.5 / detuning;
    q = apply_pulse(q, free, detuning);
    q = apply_pulse(q, pulse(0.5), 0.0);
    CHECK(q.prob_one() == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("norm is preserved over 1e4 composed pulses") {
    RngStream rng(17, RngPurpose::bootstrap, 0);
    QubitState q;
    for (int i = 0; i < 10000; ++i) {
        MicrowavePulse p;
        p.rabi_frequency_rad_per_s = rng.uniform(0.0, 2e6);
        p.duration_s = rng.uniform(0.0, 20e-6);
        p.phase_rad = rng.uniform(0.0, 2 * M_PI);
        p.detuning_hz = rng.uniform(-5e4, 5e4);
        q = apply_pulse(q, p, rng.uniform(-1e3, 1e3));
    }
    CHECK(std::fabs(q.norm() - 1.0) < 1e-12);
}

TEST_CASE("shot detuning sampling") {
    MagneticEnvironment env;
    env.freq_noise_rms_hz = 0;
    CHECK(sample_shot_detuning(env, 0, 9, 4) == 0.0);
    CHECK(sample_shot_detuning(env, 1, 9, 4) == doctest::Approx(2430.0));

    env.freq_noise_rms_hz = 10.0;
    const int n = 100000;
    double s1 = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double d = sample_shot_detuning(env, 0, 9, k);
        s1 += d;
        s2 += d * d;
    }
    const double mean = s1 / n;
    const double std = std::sqrt(s2 / n - mean * mean);
    CHECK(std == doctest::Approx(10.0).epsilon(0.02));

    // Deterministic per (site, shot); sites differ by the configured offset.
    CHECK(sample_shot_detuning(env, 0, 9, 7) ==
          sample_shot_detuning(env, 0, 9, 7));
    double diff = 0;
    for (int k = 0; k < n; ++k) {
        diff += sample_shot_detuning(env, 1, 9, k) -
                sample_shot_detuning(env, 0, 9, k);
    }
    CHECK(diff / n == doctest::Approx(2430.0).epsilon(0.05));
}
