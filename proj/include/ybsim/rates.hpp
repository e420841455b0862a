#pragma once

#include <Eigen/Dense>
#include <vector>

#include "ybsim/atom.hpp"
#include "ybsim/fields.hpp"

namespace ybsim {

// Scattering-rate multiplier standing in for coherent dark states on the
// detection transition (S12 F=1 <-> P12 F=0).
struct DarkStateFactor {
    double kappa = 1.0 / 3.0;

    void validate() const;
};

// Steady-state excited fraction of a driven two-level system.  delta is the
// detuning in Hz, gamma the (angular) decay rate in 1/s; on resonance this
// is s / (2 (1 + s)).
double excited_population(double s, double delta_hz, double gamma_per_s);

// Photon scattering rate kappa * gamma * P_e.
double scattering_rate(double p_e, double gamma_per_s, double kappa);

struct PopulationVector {
    Eigen::VectorXd p;

    void validate() const;  // entries in [0,1], sum 1 within 1e-9
};

// One elementary transition of the jump process.  Pump channels come in
// absorption/stimulated-emission pairs; spontaneous channels reference the
// scheme's decay channel and are the only photon emitters.
struct RateChannel {
    int from = 0;
    int to = 0;
    double rate_per_s = 0;
    enum class Kind { pump_absorption, stimulated_emission, spontaneous, trap }
        kind = Kind::spontaneous;
    int decay_channel = -1;       // index into LevelScheme::channels
    bool far_detuned_leak = false;  // flagged when the leak weight applied
};

struct RateMatrix {
    Eigen::MatrixXd m;  // m(j, i): rate i -> j; diagonal = -outflow
    std::vector<RateChannel> channels;

    int dim() const { return static_cast<int>(m.rows()); }
    // Largest |diagonal| entry, used for step-size heuristics.
    double max_rate() const;
};

struct RateOptions {
    // Applied to the pump rate of the S F=1 <-> P F=0 transition (Yb171).
    double kappa_detect = 1.0;
    // Scalar weight on pump terms detuned beyond the threshold; calibrated
    // against the detection error model, 1 by default.
    double far_detuned_weight = 1.0;
    double far_detuned_threshold_hz = 1.0e9;
};

// Assemble pump and decay rates for one field configuration.  Pump rates
// follow gamma * q / (1 - 2q) with q = kappa * P_e(s, delta), which makes
// the jump/rate steady state reproduce scattering_rate() exactly; decay
// rates are branching fractions times the upper manifold's decay rate.
RateMatrix build_rate_matrix(const LevelScheme& scheme,
                             const std::vector<BeamWithModulators>& beams,
                             const RateOptions& options = {});

// Propagate dp/dt = M p over `duration` (matrix exponential; exact for a
// piecewise-constant matrix).  Throws if the matrix does not conserve
// probability.
PopulationVector evolve_populations(const RateMatrix& matrix,
                                    const PopulationVector& p0,
                                    double duration_s);

// Fixed-step RK4 companion integrator (step <= 0.01 / max rate).
PopulationVector evolve_populations_rk4(const RateMatrix& matrix,
                                        const PopulationVector& p0,
                                        double duration_s);

// Stationary distribution of the rate matrix (unique when every manifold
// drains into the driven component).
PopulationVector steady_state(const RateMatrix& matrix);

// Population trace sampled on a uniform grid: column k holds p(k * dt).
Eigen::MatrixXd population_trace(const RateMatrix& matrix,
                                 const PopulationVector& p0, double dt_s,
                                 int steps);

// Mean countable-photon rate (369 nm spontaneous emission) for a given
// population, i.e. sum over P manifolds of gamma_369 * p.
double fluorescence_rate(const LevelScheme& scheme,
                         const Eigen::VectorXd& populations);

// Integral of fluorescence_rate over consecutive bins of width dt, starting
// from p0 (exact via an augmented matrix exponential).  Returns expected
// photon counts per bin and advances p0 to the final state.
std::vector<double> fluorescence_bins(const LevelScheme& scheme,
                                      const RateMatrix& matrix,
                                      PopulationVector& p0, double dt_s,
                                      int bins);

}  // namespace ybsim
