#include "ybsim/detection.hpp"

#include <cmath>
#include <ostream>
#include <sstream>

#include "ybsim/errors.hpp"

namespace ybsim {

void DetectionConfig::validate() const {
    if (!(window_s > 0)) throw ConstraintViolation("window_s must be > 0");
    if (!(efficiency > 0 && efficiency <= 1)) {
        throw ConstraintViolation("efficiency must lie in (0, 1]");
    }
    if (!(dark_rate_per_s >= 0)) {
        throw ConstraintViolation("dark_rate_per_s must be >= 0");
    }
    if (threshold_counts < 0) {
        throw ConstraintViolation("threshold_counts must be >= 0");
    }
}

void Histogram::add(long count) {
    ++occurrences[count];
    ++total_shots;
}

void Histogram::merge(const Histogram& other) {
    for (const auto& [count, n] : other.occurrences) occurrences[count] += n;
    total_shots += other.total_shots;
}

long Histogram::shots_at_most(long count) const {
    long n = 0;
    for (const auto& [c, occ] : occurrences) {
        if (c <= count) n += occ;
    }
    return n;
}

long Histogram::shots_above(long count) const {
    return total_shots - shots_at_most(count);
}

void LeakModel::validate() const {
    if (!(q_leak > 0 && q_leak < 1)) {
        throw ConstraintViolation("q_leak must lie in (0, 1)");
    }
}

long detect_counts(const std::vector<PhotonEvent>& events,
                   const LevelScheme& scheme, const DetectionConfig& cfg,
                   std::uint64_t seed, std::uint64_t shot_index) {
    cfg.validate();
    RngStream rng(seed, RngPurpose::detection, shot_index);
    long n = 0;
    for (const auto& ev : events) {
        if (ev.channel < 0 ||
            scheme.channels[ev.channel].emission_class != EmissionClass::nm369) {
            continue;
        }
        if (rng.bernoulli(cfg.efficiency)) ++n;
    }
    n += rng.poisson(cfg.dark_rate_per_s * cfg.window_s);
    return n;
}

QubitLabel classify(long count, const DetectionConfig& cfg) {
    return count > cfg.threshold_counts ? QubitLabel::one : QubitLabel::zero;
}

Histogram accumulate_histogram(const std::vector<long>& counts) {
    Histogram h;
    for (long c : counts) h.add(c);
    return h;
}

namespace {

// Binomial standard error; lightly smoothed so it stays positive at the
// boundary outcomes.
double binomial_err(long k, long n) {
    const double f = (static_cast<double>(k) + 0.5) /
                     (static_cast<double>(n) + 1.0);
    return std::sqrt(f * (1.0 - f) / static_cast<double>(n));
}

}  // namespace

FidelityReport estimate_fidelity(const Histogram& hist_dark,
                                 const Histogram& hist_bright,
                                 const DetectionConfig& cfg) {
    if (hist_dark.total_shots == 0 || hist_bright.total_shots == 0) {
        throw InsufficientData("both histograms must contain shots");
    }
    FidelityReport report;
    report.threshold_counts = cfg.threshold_counts;
    report.shots_dark = hist_dark.total_shots;
    report.shots_bright = hist_bright.total_shots;

    const long dark_correct = hist_dark.shots_at_most(cfg.threshold_counts);
    const long bright_correct = hist_bright.shots_above(cfg.threshold_counts);
    report.fidelity_dark =
        static_cast<double>(dark_correct) / hist_dark.total_shots;
    report.fidelity_bright =
        static_cast<double>(bright_correct) / hist_bright.total_shots;
    report.average = 0.5 * (report.fidelity_dark + report.fidelity_bright);
    report.err_dark = binomial_err(dark_correct, hist_dark.total_shots);
    report.err_bright = binomial_err(bright_correct, hist_bright.total_shots);
    report.err_average = 0.5 * std::hypot(report.err_dark, report.err_bright);
    return report;
}

std::string FidelityReport::to_json() const {
    std::ostringstream out;
    out.precision(12);
    out << "{\n"
        << "  \"fidelity_dark\": " << fidelity_dark << ",\n"
        << "  \"fidelity_bright\": " << fidelity_bright << ",\n"
        << "  \"average\": " << average << ",\n"
        << "  \"err_dark\": " << err_dark << ",\n"
        << "  \"err_bright\": " << err_bright << ",\n"
        << "  \"err_average\": " << err_average << ",\n"
        << "  \"threshold_counts\": " << threshold_counts << ",\n"
        << "  \"shots_dark\": " << shots_dark << ",\n"
        << "  \"shots_bright\": " << shots_bright << "\n"
        << "}\n";
    return out.str();
}

double theoretical_fidelity(double efficiency, const LeakModel& leak) {
    if (!(efficiency > 0 && efficiency <= 1)) {
        throw ConstraintViolation("efficiency must lie in (0, 1]");
    }
    leak.validate();
    const double q_eff = leak.kappa_applied ? 3.0 * leak.q_leak : leak.q_leak;
    const double mu = efficiency / q_eff;
    const double error = (1.0 + 2.0 * mu) / ((1.0 + mu) * (1.0 + mu));
    return 1.0 - error;
}

double calibrate_q_leak(double efficiency, double fidelity) {
    const double e = 1.0 - fidelity;
    if (!(e > 0 && e < 1)) {
        throw ConstraintViolation("calibration fidelity must lie in (0, 1)");
    }
    // (1+2mu)/(1+mu)^2 = e  =>  mu = ((1-e) + sqrt(1-e)) / e.
    const double mu = ((1.0 - e) + std::sqrt(1.0 - e)) / e;
    return efficiency / mu / 3.0;  // anchor row is in the dark-state regime
}

double physical_leak_estimate(const LevelScheme& scheme,
                              const RateMatrix& detection_matrix) {
    const PopulationVector ss = steady_state(detection_matrix);
    double leak_flow = 0;
    for (const auto& ch : detection_matrix.channels) {
        if (ch.far_detuned_leak &&
            ch.kind == RateChannel::Kind::pump_absorption) {
            leak_flow += ch.rate_per_s * ss.p[ch.from];
        }
    }
    const double photon_flow = fluorescence_rate(scheme, ss.p);
    if (photon_flow <= 0) return 0;
    // Roughly one third of leak excitations relax into the dark state.
    return leak_flow / 3.0 / photon_flow;
}

std::vector<ThresholdSweepPoint> sweep_threshold(const Histogram& hist_dark,
                                                 const Histogram& hist_bright,
                                                 long max_threshold) {
    std::vector<ThresholdSweepPoint> sweep;
    for (long th = 0; th <= max_threshold; ++th) {
        const double fd =
            static_cast<double>(hist_dark.shots_at_most(th)) /
            std::max(1L, hist_dark.total_shots);
        const double fb =
            static_cast<double>(hist_bright.shots_above(th)) /
            std::max(1L, hist_bright.total_shots);
        sweep.push_back({th, 0.5 * (fd + fb)});
    }
    return sweep;
}

void histogram_to_csv(std::ostream& out, const Histogram& hist) {
    out << "count,occurrences\n";
    long max_count = 0;
    for (const auto& [c, n] : hist.occurrences) max_count = std::max(max_count, c);
    for (long c = 0; c <= max_count; ++c) {
        auto it = hist.occurrences.find(c);
        out << c << "," << (it == hist.occurrences.end() ? 0 : it->second)
            << "\n";
    }
}

}  // namespace ybsim
