#include "ybsim/atom.hpp"

#include <cmath>
#include <cstdio>
#include <sstream>

#include "ybsim/errors.hpp"

namespace ybsim {

namespace {

void require_positive(double v, const char* field) {
    if (!(v > 0) || !std::isfinite(v)) {
        throw ConstraintViolation(std::string(field) +
                                  " must be strictly positive");
    }
}

void require_nonnegative(double v, const char* field) {
    if (!(v >= 0) || !std::isfinite(v)) {
        throw ConstraintViolation(std::string(field) +
                                  " must be non-negative");
    }
}

std::string manifold_label(Term t, int f, Isotope iso) {
    std::string s = term_name(t);
    if (iso == Isotope::Yb171 && t != Term::F72) {
        s += " F=" + std::to_string(f);
    }
    return s;
}

}  // namespace

const char* term_name(Term t) {
    switch (t) {
        case Term::S12: return "S12";
        case Term::P12: return "P12";
        case Term::D32: return "D32";
        case Term::D3half: return "D3half";
        case Term::F72: return "F72";
    }
    return "?";
}

void PhysicalConstants::validate() const {
    require_positive(gamma_p12_per_s, "gamma_p12_per_s");
    require_positive(tau_d32_s, "tau_d32_s");
    require_positive(gamma_d3half_per_s, "gamma_d3half_per_s");
    require_positive(s12_splitting_hz, "s12_splitting_hz");
    require_positive(p12_splitting_hz, "p12_splitting_hz");
    require_positive(d32_splitting_hz, "d32_splitting_hz");
    require_positive(d3half_splitting_hz, "d3half_splitting_hz");
    require_positive(zeeman_coeff_hz_per_gauss2, "zeeman_coeff_hz_per_gauss2");
    require_positive(f72_repump_delay_s, "f72_repump_delay_s");
    require_nonnegative(f72_trap_rate_per_s, "f72_trap_rate_per_s");
    if (!(r_branch >= 0 && r_branch < 1)) {
        throw ConstraintViolation("r_branch must lie in [0, 1)");
    }
}

void MagneticEnvironment::validate() const {
    require_nonnegative(b_static_gauss, "b_static_gauss");
    require_nonnegative(freq_noise_rms_hz, "freq_noise_rms_hz");
    if (!std::isfinite(differential_offset_hz)) {
        throw ConstraintViolation("differential_offset_hz must be finite");
    }
}

int LevelScheme::index_of(Term term, int f) const {
    for (std::size_t i = 0; i < manifolds.size(); ++i) {
        if (manifolds[i].term == term &&
            (species.isotope == Isotope::Yb174 || manifolds[i].f == f)) {
            return static_cast<int>(i);
        }
    }
    return -1;
}

double LevelScheme::decay_rate_out(int idx) const {
    switch (manifolds[idx].term) {
        case Term::P12: return constants.gamma_p12_per_s;
        case Term::D3half: return constants.gamma_d3half_per_s;
        case Term::D32: return 1.0 / constants.tau_d32_s;
        case Term::F72: return 1.0 / constants.f72_repump_delay_s;
        case Term::S12: return 0.0;
    }
    return 0.0;
}

std::string LevelScheme::serialize() const {
    std::ostringstream out;
    char buf[64];
    auto num = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "species = " << (species.isotope == Isotope::Yb171 ? "Yb171" : "Yb174")
        << "\n";
    for (const auto& m : manifolds) {
        out << "manifold " << term_name(m.term) << " F=" << m.f
            << " offset_hz=" << num(m.energy_offset_hz)
            << " degeneracy=" << m.degeneracy << "\n";
    }
    for (const auto& c : channels) {
        out << "channel " << manifolds[c.upper].label << " -> "
            << manifolds[c.lower].label << " fraction=" << num(c.branching_fraction)
            << " class="
            << (c.emission_class == EmissionClass::nm369   ? "369"
                : c.emission_class == EmissionClass::nm935 ? "935"
                                                           : "297")
            << "\n";
    }
    out << "gamma_p12_per_s = " << num(constants.gamma_p12_per_s) << "\n"
        << "r_branch = " << num(constants.r_branch) << "\n"
        << "tau_d32_s = " << num(constants.tau_d32_s) << "\n"
        << "gamma_d3half_per_s = " << num(constants.gamma_d3half_per_s) << "\n"
        << "s12_splitting_hz = " << num(constants.s12_splitting_hz) << "\n"
        << "p12_splitting_hz = " << num(constants.p12_splitting_hz) << "\n"
        << "d32_splitting_hz = " << num(constants.d32_splitting_hz) << "\n"
        << "d3half_splitting_hz = " << num(constants.d3half_splitting_hz) << "\n"
        << "zeeman_coeff_hz_per_gauss2 = "
        << num(constants.zeeman_coeff_hz_per_gauss2) << "\n"
        << "f72_trap_rate_per_s = " << num(constants.f72_trap_rate_per_s) << "\n"
        << "f72_repump_delay_s = " << num(constants.f72_repump_delay_s) << "\n";
    return out.str();
}

LevelScheme build_level_scheme(const AtomSpecies& species,
                               const PhysicalConstants& constants) {
    constants.validate();

    LevelScheme scheme;
    scheme.species = species;
    scheme.constants = constants;

    auto add = [&](Term t, int f, double offset) {
        HyperfineManifold m;
        m.term = t;
        m.f = f;
        m.energy_offset_hz = offset;
        m.degeneracy = species.isotope == Isotope::Yb171 ? 2 * f + 1 : 1;
        m.label = manifold_label(t, f, species.isotope);
        scheme.manifolds.push_back(m);
        return static_cast<int>(scheme.manifolds.size()) - 1;
    };
    auto decay = [&](int upper, int lower, double fraction, EmissionClass cls) {
        scheme.channels.push_back({upper, lower, fraction, cls});
    };

    const double r = constants.r_branch;

    if (species.isotope == Isotope::Yb171) {
        // Level ordering within each electronic level: the D32 hyperfine
        // structure is inverted (F=2 below F=1), which puts the
        // D32 F=2 <-> D3half F=1 repump component at
        // d32_splitting + d3half_splitting above the 935 nm reference.
        const int s0 = add(Term::S12, 0, 0.0);
        const int s1 = add(Term::S12, 1, constants.s12_splitting_hz);
        const int p0 = add(Term::P12, 0, 0.0);
        const int p1 = add(Term::P12, 1, constants.p12_splitting_hz);
        const int d2 = add(Term::D32, 2, 0.0);
        const int d1 = add(Term::D32, 1, constants.d32_splitting_hz);
        const int h0 = add(Term::D3half, 0, 0.0);
        const int h1 = add(Term::D3half, 1, constants.d3half_splitting_hz);
        const int f72 = add(Term::F72, 3, 0.0);

        // P12 F=0: F=0 -> F=0 is forbidden, so everything lands in S F=1;
        // the D32 branch can only reach F=1.
        decay(p0, s1, 1.0 - r, EmissionClass::nm369);
        decay(p0, d1, r, EmissionClass::nm935);
        // P12 F=1: statistical weights give the 1/3 ground-state route to
        // |0> and a 3:5 split over the D32 manifolds.
        decay(p1, s0, (1.0 - r) / 3.0, EmissionClass::nm369);
        decay(p1, s1, 2.0 * (1.0 - r) / 3.0, EmissionClass::nm369);
        decay(p1, d1, r * 3.0 / 8.0, EmissionClass::nm935);
        decay(p1, d2, r * 5.0 / 8.0, EmissionClass::nm935);
        // D3half returns to the ground state.
        decay(h0, s1, 1.0, EmissionClass::nm297);
        decay(h1, s0, 1.0 / 3.0, EmissionClass::nm297);
        decay(h1, s1, 2.0 / 3.0, EmissionClass::nm297);
        // Metastable D32 decay, statistical weights over S manifolds.
        decay(d1, s0, 1.0 / 4.0, EmissionClass::nm297);
        decay(d1, s1, 3.0 / 4.0, EmissionClass::nm297);
        decay(d2, s1, 1.0, EmissionClass::nm297);
        // F72 clears back into the cooling cycle.
        decay(f72, s1, 1.0, EmissionClass::nm297);
    } else {
        const int s = add(Term::S12, 0, 0.0);
        const int p = add(Term::P12, 0, 0.0);
        const int d = add(Term::D32, 0, 0.0);
        const int h = add(Term::D3half, 0, 0.0);
        const int f72 = add(Term::F72, 0, 0.0);

        decay(p, s, 1.0 - r, EmissionClass::nm369);
        decay(p, d, r, EmissionClass::nm935);
        decay(h, s, 1.0, EmissionClass::nm297);
        decay(d, s, 1.0, EmissionClass::nm297);
        decay(f72, s, 1.0, EmissionClass::nm297);
    }

    return scheme;
}

double qubit_splitting_hz(const PhysicalConstants& constants,
                          const MagneticEnvironment& env) {
    env.validate();
    const double b = env.b_static_gauss;
    return constants.s12_splitting_hz +
           constants.zeeman_coeff_hz_per_gauss2 * b * b;
}

bool transition_allowed(const LevelScheme& scheme, int lower, int upper) {
    const auto& lo = scheme.manifolds[lower];
    const auto& up = scheme.manifolds[upper];
    const bool class_ok =
        (lo.term == Term::S12 && up.term == Term::P12) ||
        (lo.term == Term::D32 && up.term == Term::D3half);
    if (!class_ok) return false;
    if (scheme.species.isotope == Isotope::Yb174) return true;
    const int df = std::abs(lo.f - up.f);
    if (df > 1) return false;
    if (lo.f == 0 && up.f == 0) return false;
    return true;
}

double transition_offset_hz(const LevelScheme& scheme, int lower, int upper) {
    if (!transition_allowed(scheme, lower, upper)) {
        throw ForbiddenTransition("transition " +
                                  scheme.manifolds[lower].label + " <-> " +
                                  scheme.manifolds[upper].label +
                                  " is not dipole allowed");
    }
    const auto& lo = scheme.manifolds[lower];
    const auto& up = scheme.manifolds[upper];
    double ref = 0.0;
    if (scheme.species.isotope == Isotope::Yb171) {
        if (up.term == Term::P12) {
            // Reference: S12 F=1 <-> P12 F=0.
            ref = 0.0 - scheme.constants.s12_splitting_hz;
        } else {
            // Reference: D32 F=1 <-> D3half F=0.
            ref = 0.0 - scheme.constants.d32_splitting_hz;
        }
    }
    return (up.energy_offset_hz - lo.energy_offset_hz) - ref;
}

}  // namespace ybsim
