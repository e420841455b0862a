#pragma once

#include <complex>
#include <cstdint>

#include "ybsim/atom.hpp"
#include "ybsim/fields.hpp"
#include "ybsim/rng.hpp"

namespace ybsim {

// Two-level state (c0, c1) for the hyperfine qubit |0>, |1>.
struct QubitState {
    std::complex<double> c0{1.0, 0.0};
    std::complex<double> c1{0.0, 0.0};

    double prob_one() const { return std::norm(c1); }
    double norm() const { return std::norm(c0) + std::norm(c1); }
    void validate() const;  // norm 1 within 1e-12
};

// Exact generalized-Rabi rotation.  The effective detuning is
// pulse.detuning - shot_detuning (drive relative to the shifted atom);
// a zero-Rabi pulse reduces to free precession.
QubitState apply_pulse(const QubitState& q, const MicrowavePulse& pulse,
                       double shot_detuning_hz);

// Quasi-static per-shot frequency offset of one ion site: Gaussian with
// std freq_noise_rms about the site's deterministic offset (site 0 sits at
// zero, site 1 at differential_offset).
double sample_shot_detuning(const MagneticEnvironment& env, int site,
                            std::uint64_t seed, std::uint64_t shot_index);

}  // namespace ybsim
