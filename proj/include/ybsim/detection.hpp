#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "ybsim/atom.hpp"
#include "ybsim/rng.hpp"
#include "ybsim/trajectory.hpp"

namespace ybsim {

struct DetectionConfig {
    double window_s = 1000e-6;
    long threshold_counts = 1;  // counts > threshold  =>  |1>
    double efficiency = 0.001;  // per emitted 369 nm photon
    double dark_rate_per_s = 150.0;

    void validate() const;
};

enum class QubitLabel { zero, one };

struct Histogram {
    std::map<long, long> occurrences;
    long total_shots = 0;

    void add(long count);
    // Shard merging; associative and commutative.
    void merge(const Histogram& other);
    long shots_at_most(long count) const;
    long shots_above(long count) const;
};

struct FidelityReport {
    double fidelity_dark = 0;    // correct-|0> probability
    double fidelity_bright = 0;  // correct-|1> probability
    double average = 0;
    double err_dark = 0;  // binomial standard errors
    double err_bright = 0;
    double err_average = 0;
    long threshold_counts = 0;
    long shots_dark = 0;
    long shots_bright = 0;

    std::string to_json() const;
};

// Geometric race error model: per scattered photon the detector wins with
// probability eta and the off-resonant leak with q_eff; an error is at most
// one detected photon before the leak.
struct LeakModel {
    double q_leak = 2.46e-6;   // per scattered photon, natural-rate regime
    bool kappa_applied = true;  // dark-state regime triples the per-photon leak

    void validate() const;
};

// Thinned detector counts: each countable (369 nm) event survives with
// probability `efficiency`, plus Poisson dark counts over the window.
long detect_counts(const std::vector<PhotonEvent>& events,
                   const LevelScheme& scheme, const DetectionConfig& cfg,
                   std::uint64_t seed, std::uint64_t shot_index);

QubitLabel classify(long count, const DetectionConfig& cfg);

Histogram accumulate_histogram(const std::vector<long>& counts);

FidelityReport estimate_fidelity(const Histogram& hist_dark,
                                 const Histogram& hist_bright,
                                 const DetectionConfig& cfg);

// Closed-form theoretical fidelity: mu = eta / q_eff with
// q_eff = 3 q_leak in the dark-state regime, error = (1+2mu)/(1+mu)^2.
double theoretical_fidelity(double efficiency, const LeakModel& leak);

// Solve the race model for q_leak from one (efficiency, fidelity) anchor in
// the dark-state regime.
double calibrate_q_leak(double efficiency, double fidelity);

// Per-scattered-photon leak probability implied by the rate model itself
// (steady-state far-detuned pump flow over photon flow, times the
// one-third dark branching).  Diagnostic companion to the calibrated value.
double physical_leak_estimate(const LevelScheme& scheme,
                              const RateMatrix& detection_matrix);

struct ThresholdSweepPoint {
    long threshold_counts = 0;
    double average_fidelity = 0;
};

// Average fidelity as a function of the classification threshold.
std::vector<ThresholdSweepPoint> sweep_threshold(const Histogram& hist_dark,
                                                 const Histogram& hist_bright,
                                                 long max_threshold);

void histogram_to_csv(std::ostream& out, const Histogram& hist);

}  // namespace ybsim
