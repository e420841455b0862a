#include "ybsim/qubit.hpp"

#include <cmath>

#include "ybsim/errors.hpp"

namespace ybsim {

void QubitState::validate() const {
    if (std::fabs(norm() - 1.0) > 1e-12) {
        throw ConstraintViolation("qubit state must be normalized");
    }
}

QubitState apply_pulse(const QubitState& q, const MicrowavePulse& pulse,
                       double shot_detuning_hz) {
    const double t = pulse.duration_s;
    if (t <= 0) return q;
    const double omega = pulse.rabi_frequency_rad_per_s;
    // Atom minus drive, angular.
    const double delta =
        2.0 * M_PI * (shot_detuning_hz - pulse.detuning_hz);
    const double omega_gen = std::hypot(omega, delta);
    if (omega_gen == 0) return q;

    const double half = 0.5 * omega_gen * t;
    const double c = std::cos(half);
    const double s = std::sin(half);
    const double az = delta / omega_gen;
    const double ax = omega / omega_gen;
    const std::complex<double> i(0.0, 1.0);
    const std::complex<double> phase(std::cos(pulse.phase_rad),
                                     std::sin(pulse.phase_rad));

    // U = cos(x) I - i sin(x) n.sigma with n = (ax cos, ax sin, -az)... the
    // diagonal carries the detuning, the off-diagonal the drive phase.
    QubitState out;
    out.c0 = (c + i * az * s) * q.c0 - i * ax * s * std::conj(phase) * q.c1;
    out.c1 = -i * ax * s * phase * q.c0 + (c - i * az * s) * q.c1;
    return out;
}

double sample_shot_detuning(const MagneticEnvironment& env, int site,
                            std::uint64_t seed, std::uint64_t shot_index) {
    env.validate();
    const double mean = site == 0 ? 0.0 : env.differential_offset_hz;
    if (env.freq_noise_rms_hz == 0) return mean;
    RngStream rng(seed, RngPurpose::shot_noise,
                  static_cast<std::uint64_t>(site), shot_index);
    return rng.normal(mean, env.freq_noise_rms_hz);
}

}  // namespace ybsim
