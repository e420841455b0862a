#include "ybsim/rates.hpp"

#include <cmath>
#include <unsupported/Eigen/MatrixFunctions>

#include "ybsim/errors.hpp"

namespace ybsim {

void DarkStateFactor::validate() const {
    if (!(kappa > 0 && kappa <= 1)) {
        throw ConstraintViolation("kappa must lie in (0, 1]");
    }
}

double excited_population(double s, double delta_hz, double gamma_per_s) {
    if (!(s >= 0)) throw ConstraintViolation("saturation parameter must be >= 0");
    if (!(gamma_per_s > 0)) throw ConstraintViolation("gamma must be > 0");
    const double d = 4.0 * M_PI * delta_hz / gamma_per_s;  // 2 * Delta / gamma
    return 0.5 * s / (1.0 + s + d * d);
}

double scattering_rate(double p_e, double gamma_per_s, double kappa) {
    return kappa * gamma_per_s * p_e;
}

void PopulationVector::validate() const {
    double sum = 0;
    for (int i = 0; i < p.size(); ++i) {
        if (!(p[i] >= -1e-12 && p[i] <= 1.0 + 1e-9)) {
            throw ConstraintViolation("population entry out of [0, 1]");
        }
        sum += p[i];
    }
    if (std::fabs(sum - 1.0) > 1e-9) {
        throw ConstraintViolation("populations must sum to 1 within 1e-9");
    }
}

double RateMatrix::max_rate() const {
    double r = 0;
    for (int i = 0; i < m.rows(); ++i) r = std::max(r, std::fabs(m(i, i)));
    return r;
}

namespace {

std::vector<std::pair<int, int>> allowed_pairs(const LevelScheme& scheme,
                                               WavelengthClass wl) {
    Term lower_term, upper_term;
    switch (wl) {
        case WavelengthClass::nm369:
            lower_term = Term::S12;
            upper_term = Term::P12;
            break;
        case WavelengthClass::nm935:
            lower_term = Term::D32;
            upper_term = Term::D3half;
            break;
        default:
            return {};  // 638 nm clearing is modeled via the F72 delay only
    }
    std::vector<std::pair<int, int>> pairs;
    for (std::size_t lo = 0; lo < scheme.manifolds.size(); ++lo) {
        if (scheme.manifolds[lo].term != lower_term) continue;
        for (std::size_t up = 0; up < scheme.manifolds.size(); ++up) {
            if (scheme.manifolds[up].term != upper_term) continue;
            if (transition_allowed(scheme, static_cast<int>(lo),
                                   static_cast<int>(up))) {
                pairs.emplace_back(static_cast<int>(lo), static_cast<int>(up));
            }
        }
    }
    return pairs;
}

void assemble(RateMatrix& rm) {
    const int n = rm.dim();
    rm.m.setZero();
    for (const auto& ch : rm.channels) {
        rm.m(ch.to, ch.from) += ch.rate_per_s;
    }
    for (int col = 0; col < n; ++col) {
        double outflow = 0;
        for (int row = 0; row < n; ++row) {
            if (row != col) outflow += rm.m(row, col);
        }
        rm.m(col, col) = -outflow;
    }
}

void check_conservative(const RateMatrix& matrix) {
    const double scale = std::max(1.0, matrix.max_rate());
    for (int col = 0; col < matrix.dim(); ++col) {
        if (std::fabs(matrix.m.col(col).sum()) > 1e-9 * scale) {
            throw ConstraintViolation("rate matrix is not probability conserving");
        }
    }
}

}  // namespace

RateMatrix build_rate_matrix(const LevelScheme& scheme,
                             const std::vector<BeamWithModulators>& beams,
                             const RateOptions& options) {
    const int n = static_cast<int>(scheme.manifolds.size());
    RateMatrix rm;
    rm.m.resize(n, n);

    // Spontaneous decay.
    for (std::size_t ci = 0; ci < scheme.channels.size(); ++ci) {
        const auto& dc = scheme.channels[ci];
        const double rate =
            dc.branching_fraction * scheme.decay_rate_out(dc.upper);
        if (rate <= 0) continue;
        rm.channels.push_back({dc.upper, dc.lower, rate,
                               RateChannel::Kind::spontaneous,
                               static_cast<int>(ci), false});
    }

    // Collisional trapping into F72 (state independent, usually off).
    const double trap = scheme.constants.f72_trap_rate_per_s;
    if (trap > 0) {
        const int f72 = scheme.index_of(Term::F72, 3) >= 0
                            ? scheme.index_of(Term::F72, 3)
                            : scheme.index_of(Term::F72, 0);
        for (int i = 0; i < n; ++i) {
            if (i == f72) continue;
            rm.channels.push_back(
                {i, f72, trap, RateChannel::Kind::trap, -1, false});
        }
    }

    // Optical pumping, one term per (component, allowed transition).
    const int detect_lower = scheme.species.isotope == Isotope::Yb171
                                 ? scheme.index_of(Term::S12, 1)
                                 : -1;
    const int detect_upper = scheme.species.isotope == Isotope::Yb171
                                 ? scheme.index_of(Term::P12, 0)
                                 : -1;
    for (const auto& bm : beams) {
        if (!bm.beam.enabled || bm.beam.power_w <= 0) continue;
        const auto pairs = allowed_pairs(scheme, bm.beam.wavelength);
        if (pairs.empty()) continue;
        const auto components = effective_spectrum(bm.beam, bm.modulators);
        for (const auto& comp : components) {
            const double s = saturation_parameter(comp, bm.beam);
            if (s <= 0) continue;
            for (const auto& [lo, up] : pairs) {
                const double gamma_u = scheme.decay_rate_out(up);
                const double delta =
                    comp.frequency_offset_hz -
                    transition_offset_hz(scheme, lo, up);
                const double kappa = (lo == detect_lower && up == detect_upper)
                                         ? options.kappa_detect
                                         : 1.0;
                const double q = kappa * excited_population(s, delta, gamma_u);
                if (q >= 0.5) {
                    throw ConstraintViolation(
                        "pump rate diverges (kappa * P_e reached 1/2)");
                }
                double w = gamma_u * q / (1.0 - 2.0 * q);
                const bool far =
                    std::fabs(delta) > options.far_detuned_threshold_hz;
                if (far) w *= options.far_detuned_weight;
                if (w <= 0) continue;
                rm.channels.push_back(
                    {lo, up, w, RateChannel::Kind::pump_absorption, -1, far});
                rm.channels.push_back(
                    {up, lo, w, RateChannel::Kind::stimulated_emission, -1,
                     far});
            }
        }
    }

    assemble(rm);
    return rm;
}

PopulationVector evolve_populations(const RateMatrix& matrix,
                                    const PopulationVector& p0,
                                    double duration_s) {
    p0.validate();
    check_conservative(matrix);
    if (duration_s <= 0) return p0;
    Eigen::MatrixXd propagator = (matrix.m * duration_s).exp();
    PopulationVector out{propagator * p0.p};
    for (int i = 0; i < out.p.size(); ++i) {
        if (out.p[i] < 0 && out.p[i] > -1e-12) out.p[i] = 0;
    }
    out.validate();
    return out;
}

PopulationVector evolve_populations_rk4(const RateMatrix& matrix,
                                        const PopulationVector& p0,
                                        double duration_s) {
    p0.validate();
    check_conservative(matrix);
    if (duration_s <= 0) return p0;
    const double max_rate = std::max(matrix.max_rate(), 1.0);
    const double dt_target = 0.01 / max_rate;
    const long steps =
        std::max(1L, static_cast<long>(std::ceil(duration_s / dt_target)));
    const double dt = duration_s / static_cast<double>(steps);
    Eigen::VectorXd p = p0.p;
    Eigen::VectorXd k1, k2, k3, k4;
    for (long i = 0; i < steps; ++i) {
        k1 = matrix.m * p;
        k2 = matrix.m * (p + 0.5 * dt * k1);
        k3 = matrix.m * (p + 0.5 * dt * k2);
        k4 = matrix.m * (p + dt * k3);
        p += (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    }
    PopulationVector out{std::move(p)};
    for (int i = 0; i < out.p.size(); ++i) {
        if (out.p[i] < 0 && out.p[i] > -1e-10) out.p[i] = 0;
    }
    out.validate();
    return out;
}

PopulationVector steady_state(const RateMatrix& matrix) {
    check_conservative(matrix);
    const int n = matrix.dim();
    Eigen::MatrixXd a = matrix.m;
    a.row(0).setOnes();
    Eigen::VectorXd b = Eigen::VectorXd::Zero(n);
    b[0] = 1.0;
    Eigen::FullPivLU<Eigen::MatrixXd> lu(a);
    if (lu.isInvertible()) {
        Eigen::VectorXd p = lu.solve(b);
        bool ok = true;
        for (int i = 0; i < n; ++i) {
            if (p[i] < -1e-9) ok = false;
        }
        if (ok && std::fabs(p.sum() - 1.0) < 1e-9) {
            for (int i = 0; i < n; ++i) p[i] = std::max(p[i], 0.0);
            return PopulationVector{p};
        }
    }
    // Reducible chain: take the long-time limit from a uniform start.
    double slowest = matrix.max_rate();
    for (int i = 0; i < n; ++i) {
        const double out = -matrix.m(i, i);
        if (out > 0) slowest = std::min(slowest, out);
    }
    PopulationVector p0{Eigen::VectorXd::Constant(n, 1.0 / n)};
    return evolve_populations(matrix, p0, 100.0 / slowest);
}

Eigen::MatrixXd population_trace(const RateMatrix& matrix,
                                 const PopulationVector& p0, double dt_s,
                                 int steps) {
    p0.validate();
    check_conservative(matrix);
    const int n = matrix.dim();
    Eigen::MatrixXd step = (matrix.m * dt_s).exp();
    Eigen::MatrixXd trace(n, steps + 1);
    Eigen::VectorXd p = p0.p;
    trace.col(0) = p;
    for (int k = 1; k <= steps; ++k) {
        p = step * p;
        trace.col(k) = p;
    }
    return trace;
}

namespace {

Eigen::VectorXd countable_weights(const LevelScheme& scheme) {
    Eigen::VectorXd w = Eigen::VectorXd::Zero(
        static_cast<int>(scheme.manifolds.size()));
    for (const auto& dc : scheme.channels) {
        if (dc.emission_class == EmissionClass::nm369) {
            w[dc.upper] += dc.branching_fraction * scheme.decay_rate_out(dc.upper);
        }
    }
    return w;
}

}  // namespace

double fluorescence_rate(const LevelScheme& scheme,
                         const Eigen::VectorXd& populations) {
    return countable_weights(scheme).dot(populations);
}

std::vector<double> fluorescence_bins(const LevelScheme& scheme,
                                      const RateMatrix& matrix,
                                      PopulationVector& p0, double dt_s,
                                      int bins) {
    p0.validate();
    check_conservative(matrix);
    const int n = matrix.dim();
    // Augment with a photon-integral row so each bin integral is exact.
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(n + 1, n + 1);
    a.topLeftCorner(n, n) = matrix.m;
    a.row(n).head(n) = countable_weights(scheme).transpose();
    Eigen::MatrixXd step = (a * dt_s).exp();

    std::vector<double> counts(bins);
    Eigen::VectorXd state(n + 1);
    state.head(n) = p0.p;
    for (int k = 0; k < bins; ++k) {
        state[n] = 0.0;
        state = step * state;
        counts[k] = state[n];
    }
    p0.p = state.head(n);
    return counts;
}

}  // namespace ybsim
