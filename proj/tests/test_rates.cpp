#include <doctest.h>

#include <cmath>

#include "ybsim/atom.hpp"
#include "ybsim/errors.hpp"
#include "ybsim/fields.hpp"
#include "ybsim/rates.hpp"

using namespace ybsim;

namespace {

BeamWithModulators resonant_369(double s, double p_sat = 0.8e-6) {
    BeamWithModulators bm;
    bm.beam.wavelength = WavelengthClass::nm369;
    bm.beam.p_sat_w = p_sat;
    bm.beam.power_w = s * p_sat;
    return bm;
}

}  // namespace

TEST_CASE("excited population formula") {
    const double gamma = 1.0 / 8.07e-9;
    CHECK(excited_population(1.0, 0.0, gamma) == doctest::Approx(0.25));
    CHECK(excited_population(1e6, 0.0, gamma) > 0.4999);
    CHECK(excited_population(0.0, 0.0, gamma) == 0.0);
    // Detuning such that (4 pi delta / gamma)^2 = 2.
    const double delta = std::sqrt(2.0) * gamma / (4.0 * M_PI);
    CHECK(excited_population(1.0, delta, gamma) == doctest::Approx(0.125));
}

TEST_CASE("scattering rate") {
    const double gamma = 1.0 / 8.07e-9;
    CHECK(scattering_rate(0.5, gamma, 1.0) ==
          doctest::Approx(6.195e7).epsilon(1e-3));
    CHECK(scattering_rate(0.0, gamma, 1.0) == 0.0);
    CHECK(scattering_rate(0.25, gamma, 1.0 / 3.0) ==
          doctest::Approx(gamma / 12.0));
}

TEST_CASE("two-level steady state matches the resonant formula") {
    PhysicalConstants c;
    c.r_branch = 0;  // close the cycling transition
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, c);
    const int p12 = scheme.index_of(Term::P12, 0);
    for (double s : {0.01, 0.1, 1.0, 10.0, 100.0}) {
        const RateMatrix m = build_rate_matrix(scheme, {resonant_369(s)}, {});
        const PopulationVector ss = steady_state(m);
        CHECK(std::fabs(ss.p[p12] - 0.5 * s / (1.0 + s)) < 1e-9);
    }
}

TEST_CASE("detuned steady state follows the Lorentzian") {
    PhysicalConstants c;
    c.r_branch = 0;
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, c);
    const int p12 = scheme.index_of(Term::P12, 0);
    BeamWithModulators bm = resonant_369(2.0);
    bm.beam.carrier_detuning_hz = 12e6;
    const RateMatrix m = build_rate_matrix(scheme, {bm}, {});
    const PopulationVector ss = steady_state(m);
    CHECK(ss.p[p12] ==
          doctest::Approx(excited_population(2.0, 12e6, c.gamma_p12_per_s))
              .epsilon(1e-9));
}

TEST_CASE("dark-state factor reproduces the reduced scattering rate") {
    PhysicalConstants c;
    c.r_branch = 0;
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, c);
    RateOptions opt;
    opt.kappa_detect = 1.0 / 3.0;
    opt.far_detuned_weight = 0;  // leaks off: closed S1 <-> P0 pair
    const RateMatrix m = build_rate_matrix(scheme, {resonant_369(1.0)}, opt);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.dim());
    v[scheme.index_of(Term::S12, 1)] = 1.0;
    const PopulationVector p =
        evolve_populations(m, PopulationVector{v}, 1e-5);
    CHECK(fluorescence_rate(scheme, p.p) ==
          doctest::Approx(scattering_rate(0.25, c.gamma_p12_per_s, 1.0 / 3.0))
              .epsilon(1e-9));
}

TEST_CASE("rate matrix conserves probability") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, {});
    BeamWithModulators b935;
    b935.beam.wavelength = WavelengthClass::nm935;
    b935.beam.power_w = 5e-3;
    b935.beam.p_sat_w = 1e-3;
    Modulator eom;
    eom.drive_frequency_hz = 3.07e9;
    eom.order_fractions = {{1, 1.0 / 3}, {-1, 1.0 / 3}};
    b935.modulators.push_back(eom);
    const RateMatrix m =
        build_rate_matrix(scheme, {resonant_369(7.5), b935}, {});
    for (int col = 0; col < m.dim(); ++col) {
        CHECK(std::fabs(m.m.col(col).sum()) <= 1e-9 * m.max_rate());
    }

    // Long evolution keeps the total within 1e-9.
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.dim());
    v[scheme.index_of(Term::S12, 0)] = 1.0;
    PopulationVector p{v};
    for (int step = 0; step < 50; ++step) {
        p = evolve_populations(m, p, 20e-6);
    }
    CHECK(std::fabs(p.p.sum() - 1.0) <= 1e-9);
}

TEST_CASE("evolution identities") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, {});
    const int n = static_cast<int>(scheme.manifolds.size());
    RateMatrix zero;
    zero.m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[0] = 0.25;
    v[1] = 0.75;
    const PopulationVector p0{v};
    const PopulationVector p = evolve_populations(zero, p0, 1.0);
    for (int i = 0; i < n; ++i) CHECK(p.p[i] == doctest::Approx(p0.p[i]));

    // Two-level closed system relaxes to the analytic steady state.
    PhysicalConstants c;
    c.r_branch = 0;
    const LevelScheme two = build_level_scheme({Isotope::Yb174}, c);
    const RateMatrix m = build_rate_matrix(two, {resonant_369(3.0)}, {});
    Eigen::VectorXd g = Eigen::VectorXd::Zero(m.dim());
    g[two.index_of(Term::S12, 0)] = 1.0;
    const PopulationVector relaxed = evolve_populations(
        m, PopulationVector{g}, 100.0 / c.gamma_p12_per_s);
    CHECK(relaxed.p[two.index_of(Term::P12, 0)] ==
          doctest::Approx(0.5 * 3.0 / 4.0).epsilon(1e-6));
}

TEST_CASE("rk4 companion integrator agrees with the matrix exponential") {
    PhysicalConstants c;
    c.r_branch = 0;
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, c);
    const RateMatrix m = build_rate_matrix(scheme, {resonant_369(1.0)}, {});
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.dim());
    v[scheme.index_of(Term::S12, 0)] = 1.0;
    const double t = 30e-9;
    const PopulationVector a = evolve_populations(m, PopulationVector{v}, t);
    const PopulationVector b =
        evolve_populations_rk4(m, PopulationVector{v}, t);
    for (int i = 0; i < m.dim(); ++i) {
        CHECK(a.p[i] == doctest::Approx(b.p[i]).epsilon(1e-7));
    }
    CHECK(std::fabs(b.p.sum() - 1.0) <= 1e-9);
}

TEST_CASE("non-conservative matrix is rejected") {
    RateMatrix bad;
    bad.m = Eigen::MatrixXd::Zero(2, 2);
    bad.m(0, 0) = -1.0;  // outflow with no destination
    Eigen::VectorXd v(2);
    v << 1.0, 0.0;
    CHECK_THROWS_AS(evolve_populations(bad, PopulationVector{v}, 1.0),
                    ConstraintViolation);
}

TEST_CASE("fluorescence bins integrate the 369 nm emission") {
    // Static population in P12: the integral is exact.
    PhysicalConstants c;
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, c);
    const int n = static_cast<int>(scheme.manifolds.size());
    RateMatrix frozen;
    frozen.m = Eigen::MatrixXd::Zero(n, n);
    Eigen::VectorXd v = Eigen::VectorXd::Zero(n);
    v[scheme.index_of(Term::P12, 0)] = 1.0;
    PopulationVector p{v};
    const auto bins = fluorescence_bins(scheme, frozen, p, 16e-9, 4);
    const double expect = c.gamma_p12_per_s * (1.0 - c.r_branch) * 16e-9;
    for (double b : bins) CHECK(b == doctest::Approx(expect).epsilon(1e-12));
}
