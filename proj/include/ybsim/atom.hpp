#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace ybsim {

enum class Isotope { Yb171, Yb174 };

struct AtomSpecies {
    Isotope isotope = Isotope::Yb171;
};

// Electronic levels kept in the model.  S12/P12 form the cycling transition,
// D32 is the metastable branch, D3half the repump intermediate, F72 the rare
// collisional trap.
enum class Term { S12, P12, D32, D3half, F72 };

// Wavelength class of a decay channel.  Only the 369 nm class is countable
// by the fluorescence detector.
enum class EmissionClass { nm369, nm935, nm297 };

struct HyperfineManifold {
    Term term = Term::S12;
    int f = 0;                    // total angular momentum
    double energy_offset_hz = 0;  // within its electronic level
    int degeneracy = 1;           // 2F+1
    std::string label;
};

struct DecayChannel {
    int upper = 0;  // manifold index
    int lower = 0;
    double branching_fraction = 0;
    EmissionClass emission_class = EmissionClass::nm369;
};

struct PhysicalConstants {
    double gamma_p12_per_s = 1.0 / 8.07e-9;  // P12 decay rate
    double r_branch = 0.00501;               // P12 -> D32 branching ratio
    double tau_d32_s = 52.7e-3;              // D32 lifetime
    // D3half decay rate; not independently constrained here, defaults to the
    // P12 rate and is config-overridable.
    double gamma_d3half_per_s = 1.0 / 8.07e-9;
    double s12_splitting_hz = 12642812118.5;
    double p12_splitting_hz = 2.1e9;
    double d32_splitting_hz = 0.86e9;
    double d3half_splitting_hz = 2.2095e9;
    double zeeman_coeff_hz_per_gauss2 = 310.8;
    double f72_trap_rate_per_s = 0;     // collisional trapping, off by default
    double f72_repump_delay_s = 0.1;    // time to clear F72 once trapped

    void validate() const;  // throws ConstraintViolation naming the field
};

struct MagneticEnvironment {
    double b_static_gauss = 5.0;
    double freq_noise_rms_hz = 0;        // quasi-static shot-to-shot spread
    double differential_offset_hz = 2.43e3;  // between the two ion sites

    void validate() const;
};

struct LevelScheme {
    AtomSpecies species;
    std::vector<HyperfineManifold> manifolds;
    std::vector<DecayChannel> channels;
    PhysicalConstants constants;

    int index_of(Term term, int f) const;  // -1 when absent
    const HyperfineManifold& manifold(int idx) const { return manifolds[idx]; }
    // Total decay rate out of a manifold (0 for stable ones).
    double decay_rate_out(int idx) const;

    // Canonical text form; identical schemes serialize identically.
    std::string serialize() const;
};

LevelScheme build_level_scheme(const AtomSpecies& species,
                               const PhysicalConstants& constants);

// Qubit transition frequency including the second-order Zeeman shift.
double qubit_splitting_hz(const PhysicalConstants& constants,
                          const MagneticEnvironment& env);

// Frequency of (lower -> upper) relative to the reference transition of its
// wavelength class: S12 F=1 <-> P12 F=0 for 369 nm, D32 F=1 <-> D3half F=0
// for 935 nm.  Throws ForbiddenTransition for dipole-forbidden pairs.
double transition_offset_hz(const LevelScheme& scheme, int lower, int upper);

// True when the (lower, upper) pair is an allowed optical transition.
bool transition_allowed(const LevelScheme& scheme, int lower, int upper);

const char* term_name(Term t);

}  // namespace ybsim
