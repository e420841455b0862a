#pragma once

#include <map>
#include <string>
#include <vector>

namespace ybsim {

enum class WavelengthClass { nm369, nm935, nm638 };

struct LaserBeam {
    WavelengthClass wavelength = WavelengthClass::nm369;
    double carrier_detuning_hz = 0;  // relative to the class reference
    double power_w = 0;
    double waist_m = 30e-6;  // provenance only; intensity enters via p/p_sat
    double p_sat_w = 0.8e-6;
    bool enabled = true;

    void validate() const;
};

// EOM-style phase modulator: integer sideband orders and the power fraction
// each carries.  Whatever the listed orders do not claim stays in the
// carrier (order 0).
struct Modulator {
    double drive_frequency_hz = 0;
    std::map<int, double> order_fractions;

    void validate() const;
    double carrier_fraction() const;
};

struct SpectralComponent {
    double frequency_offset_hz = 0;
    double power_w = 0;
};

struct MicrowavePulse {
    double rabi_frequency_rad_per_s = 0;
    double duration_s = 0;
    double phase_rad = 0;
    double detuning_hz = 0;  // drive relative to the qubit splitting
    bool phase_scrambled = false;
};

struct BeamWithModulators {
    LaserBeam beam;
    std::vector<Modulator> modulators;
};

struct TimelineInterval {
    double duration_s = 0;
    std::vector<BeamWithModulators> beams;
    std::vector<MicrowavePulse> pulses;  // at most one is valid
    std::string label;
};

struct Timeline {
    std::vector<TimelineInterval> intervals;

    double total_duration_s() const;
};

// Expand a beam through its modulator chain into spectral components.
// Orders compose additively and fractions multiply; total returned power
// never exceeds the beam power.
std::vector<SpectralComponent> effective_spectrum(
    const LaserBeam& beam, const std::vector<Modulator>& mods);

// Dimensionless saturation parameter s = p / p_sat.
double saturation_parameter(const LaserBeam& beam);
double saturation_parameter(const SpectralComponent& component,
                            const LaserBeam& beam);

// Returns every invariant violation (empty list means the timeline is ok).
std::vector<std::string> validate_timeline(const Timeline& timeline);

}  // namespace ybsim
