#include "ybsim/experiments.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <json.hpp>

#include "ybsim/errors.hpp"
#include "ybsim/fit.hpp"
#include "ybsim/peaks.hpp"
#include "ybsim/qubit.hpp"
#include "ybsim/trajectory.hpp"

namespace ybsim {

namespace {

class Stopwatch {
  public:
    Stopwatch() : start_(std::chrono::steady_clock::now()) {}
    double elapsed_s() const {
        return std::chrono::duration<double>(
                   std::chrono::steady_clock::now() - start_)
            .count();
    }

  private:
    std::chrono::steady_clock::time_point start_;
};

// Index-sharded parallel loop; every index writes only its own slot, so the
// result is independent of the thread count.
void parallel_for(long n, int threads, const std::function<void(long)>& fn) {
    if (threads <= 0) {
        threads = static_cast<int>(std::thread::hardware_concurrency());
        if (threads <= 0) threads = 1;
    }
    if (threads == 1 || n < 2) {
        for (long i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<long> next{0};
    const long chunk = std::max(1L, n / (threads * 16));
    auto worker = [&] {
        for (;;) {
            const long begin = next.fetch_add(chunk);
            if (begin >= n) return;
            const long end = std::min(n, begin + chunk);
            for (long i = begin; i < end; ++i) fn(i);
        }
    };
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
}

void def(Config& cfg, const std::string& key, const std::string& value) {
    if (!cfg.has(key)) cfg.set(key, value);
}

void def_num(Config& cfg, const std::string& key, double value) {
    def(cfg, key, format_double(value));
}

std::map<int, double> parse_orders(const std::string& text) {
    std::map<int, double> orders;
    std::istringstream in(text);
    std::string item;
    while (std::getline(in, item, ',')) {
        const std::size_t colon = item.find(':');
        if (colon == std::string::npos) {
            throw ConfigError("sideband order list item needs order:fraction");
        }
        orders[std::stoi(item.substr(0, colon))] =
            std::stod(item.substr(colon + 1));
    }
    return orders;
}

int threads_from(const Config& cfg) {
    return static_cast<int>(cfg.get_long("threads", 0));
}

int born_outcome(double prob_one, RngStream& rng) {
    return rng.uniform() < prob_one ? 1 : 0;
}

nlohmann::json fit_json(const FitResult& fit) {
    nlohmann::json doc;
    doc["parameters"] = nlohmann::json::object();
    for (std::size_t i = 0; i < fit.names.size(); ++i) {
        doc["parameters"][fit.names[i]] = fit.values[static_cast<int>(i)];
    }
    auto& cov = doc["covariance"] = nlohmann::json::array();
    for (int r = 0; r < fit.covariance.rows(); ++r) {
        nlohmann::json row = nlohmann::json::array();
        for (int c = 0; c < fit.covariance.cols(); ++c) {
            row.push_back(fit.covariance(r, c));
        }
        cov.push_back(row);
    }
    doc["chi2_reduced"] = fit.chi2_reduced;
    doc["converged"] = fit.converged;
    doc["degenerate"] = fit.degenerate;
    doc["iterations"] = fit.iterations;
    if (!fit.diagnostic.empty()) doc["diagnostic"] = fit.diagnostic;
    return doc;
}

// ---------------------------------------------------------------------------
// Default resolution
// ---------------------------------------------------------------------------

void resolve_constants(Config& cfg) {
    const PhysicalConstants d;
    def_num(cfg, "constants.gamma_p12_per_s", d.gamma_p12_per_s);
    def_num(cfg, "constants.r_branch", d.r_branch);
    def_num(cfg, "constants.tau_d32_s", d.tau_d32_s);
    def_num(cfg, "constants.gamma_d3half_per_s", d.gamma_d3half_per_s);
    def_num(cfg, "constants.s12_splitting_hz", d.s12_splitting_hz);
    def_num(cfg, "constants.p12_splitting_hz", d.p12_splitting_hz);
    def_num(cfg, "constants.d32_splitting_hz", d.d32_splitting_hz);
    def_num(cfg, "constants.d3half_splitting_hz", d.d3half_splitting_hz);
    def_num(cfg, "constants.zeeman_coeff_hz_per_gauss2",
            d.zeeman_coeff_hz_per_gauss2);
    def_num(cfg, "constants.f72_trap_rate_per_s", d.f72_trap_rate_per_s);
    def_num(cfg, "constants.f72_repump_delay_s", d.f72_repump_delay_s);
}

void resolve_environment(Config& cfg) {
    const MagneticEnvironment d;
    def_num(cfg, "magnetic.b_static_gauss", d.b_static_gauss);
    def_num(cfg, "magnetic.freq_noise_rms_hz", d.freq_noise_rms_hz);
    def_num(cfg, "magnetic.differential_offset_hz", d.differential_offset_hz);
}

void resolve_beams(Config& cfg) {
    // 369 nm detect/pump beam.
    def_num(cfg, "beam369.power_w", 0.8e-6);
    def_num(cfg, "beam369.detuning_hz", 0.0);
    def_num(cfg, "beam369.p_sat_w", 0.8e-6);
    def_num(cfg, "beam369.waist_m", 30e-6);
    // 935 nm repump with its fiber EOM.
    def_num(cfg, "beam935.power_w", 5e-3);
    def_num(cfg, "beam935.detuning_hz", 0.0);
    def_num(cfg, "beam935.p_sat_w", 1.0e-3);
    def_num(cfg, "beam935.waist_m", 200e-6);
    def_num(cfg, "beam935.eom_drive_hz", 3.07e9);
    def(cfg, "beam935.eom_orders", "1:0.3333333333333333,-1:0.3333333333333333");
    // Pump EOM (2.1 GHz).  The modulation depth is a placeholder: fractions
    // are Bessel weights at the carrier null (beta = 2.405).
    def_num(cfg, "pump.power_w", 50e-6);
    def_num(cfg, "pump.eom_drive_hz", 2.1e9);
    def(cfg, "pump.eom_orders", "1:0.27,-1:0.27,2:0.18,-2:0.18,3:0.05,-3:0.05");
    // Cooling beam with the 7.37 GHz EOM (placeholder depths as well).
    def_num(cfg, "cool.power_w", 6e-6);
    def_num(cfg, "cool.detuning_hz", -10e6);
    def_num(cfg, "cool.p_sat_w", 0.8e-6);
    def_num(cfg, "cool.waist_m", 30e-6);
    def_num(cfg, "cool.eom_drive_hz", 7.37e9);
    def(cfg, "cool.eom_orders", "1:0.25,-1:0.25,2:0.1,-2:0.1");
}

void resolve_detection(Config& cfg) {
    def_num(cfg, "detection.window_s", 1000e-6);
    def(cfg, "detection.threshold_counts", "1");
    def_num(cfg, "detection.efficiency", 6.3e-4);
    def_num(cfg, "detection.dark_rate_per_s", 150.0);
    def_num(cfg, "detection.kappa", 1.0 / 3.0);
    def(cfg, "detection.leak_channels", "on");
    def_num(cfg, "detection.leak_weight", 0.18);
    def(cfg, "detection.mode", "trajectory");
}

void resolve_common(Config& cfg, const std::string& scenario,
                    const std::string& species) {
    def(cfg, "scenario", scenario);
    def(cfg, "species", species);
    def(cfg, "seed", "20070917");
    def(cfg, "format", "csv");
    def(cfg, "threads", "0");
    if (!cfg.has("out_dir")) {
        const char* env = std::getenv("YBSIM_OUT_DIR");
        cfg.set("out_dir", env && *env ? std::string(env) + "/" + scenario
                                       : "out/" + scenario);
    }
    resolve_constants(cfg);
    resolve_environment(cfg);
    resolve_beams(cfg);
    resolve_detection(cfg);
}

}  // namespace

PhysicalConstants constants_from_config(const Config& cfg) {
    PhysicalConstants c;
    c.gamma_p12_per_s = cfg.get_double("constants.gamma_p12_per_s", c.gamma_p12_per_s);
    c.r_branch = cfg.get_double("constants.r_branch", c.r_branch);
    c.tau_d32_s = cfg.get_double("constants.tau_d32_s", c.tau_d32_s);
    c.gamma_d3half_per_s =
        cfg.get_double("constants.gamma_d3half_per_s", c.gamma_d3half_per_s);
    c.s12_splitting_hz =
        cfg.get_double("constants.s12_splitting_hz", c.s12_splitting_hz);
    c.p12_splitting_hz =
        cfg.get_double("constants.p12_splitting_hz", c.p12_splitting_hz);
    c.d32_splitting_hz =
        cfg.get_double("constants.d32_splitting_hz", c.d32_splitting_hz);
    c.d3half_splitting_hz =
        cfg.get_double("constants.d3half_splitting_hz", c.d3half_splitting_hz);
    c.zeeman_coeff_hz_per_gauss2 = cfg.get_double(
        "constants.zeeman_coeff_hz_per_gauss2", c.zeeman_coeff_hz_per_gauss2);
    c.f72_trap_rate_per_s =
        cfg.get_double("constants.f72_trap_rate_per_s", c.f72_trap_rate_per_s);
    c.f72_repump_delay_s =
        cfg.get_double("constants.f72_repump_delay_s", c.f72_repump_delay_s);
    return c;
}

MagneticEnvironment environment_from_config(const Config& cfg) {
    MagneticEnvironment env;
    env.b_static_gauss = cfg.get_double("magnetic.b_static_gauss", env.b_static_gauss);
    env.freq_noise_rms_hz =
        cfg.get_double("magnetic.freq_noise_rms_hz", env.freq_noise_rms_hz);
    env.differential_offset_hz = cfg.get_double(
        "magnetic.differential_offset_hz", env.differential_offset_hz);
    return env;
}

LevelScheme scheme_from_config(const Config& cfg) {
    AtomSpecies species;
    const std::string name = cfg.get_string("species", "Yb171");
    if (name == "Yb171") {
        species.isotope = Isotope::Yb171;
    } else if (name == "Yb174") {
        species.isotope = Isotope::Yb174;
    } else {
        throw ConfigError("unknown species " + name);
    }
    return build_level_scheme(species, constants_from_config(cfg));
}

namespace {

LaserBeam beam_from(const Config& cfg, const std::string& section,
                    WavelengthClass wl) {
    LaserBeam beam;
    beam.wavelength = wl;
    beam.power_w = cfg.require_double(section + ".power_w");
    beam.carrier_detuning_hz = cfg.get_double(section + ".detuning_hz", 0.0);
    beam.p_sat_w = cfg.require_double(section + ".p_sat_w");
    beam.waist_m = cfg.get_double(section + ".waist_m", 30e-6);
    return beam;
}

Modulator modulator_from(const Config& cfg, const std::string& prefix) {
    Modulator mod;
    mod.drive_frequency_hz = cfg.require_double(prefix + "_drive_hz");
    mod.order_fractions = parse_orders(cfg.get_string(prefix + "_orders"));
    mod.validate();
    return mod;
}

BeamWithModulators repump_935(const Config& cfg, bool eom_on) {
    BeamWithModulators bm;
    bm.beam = beam_from(cfg, "beam935", WavelengthClass::nm935);
    if (eom_on) bm.modulators.push_back(modulator_from(cfg, "beam935.eom"));
    return bm;
}

}  // namespace

std::vector<BeamWithModulators> detection_beams(const Config& cfg) {
    std::vector<BeamWithModulators> beams;
    BeamWithModulators detect;
    detect.beam = beam_from(cfg, "beam369", WavelengthClass::nm369);
    beams.push_back(detect);
    beams.push_back(repump_935(cfg, true));
    return beams;
}

std::vector<BeamWithModulators> pump_beams(const Config& cfg) {
    std::vector<BeamWithModulators> beams;
    BeamWithModulators pump;
    pump.beam = beam_from(cfg, "beam369", WavelengthClass::nm369);
    pump.beam.power_w = cfg.require_double("pump.power_w");
    pump.modulators.push_back(modulator_from(cfg, "pump.eom"));
    beams.push_back(pump);
    beams.push_back(repump_935(cfg, true));
    return beams;
}

double simulate_optical_pumping(const Config& raw, double duration_s) {
    Config cfg = raw;
    resolve_common(cfg, "prep", "Yb171");
    const LevelScheme scheme = scheme_from_config(cfg);
    const RateMatrix matrix = build_rate_matrix(scheme, pump_beams(cfg), {});
    const int n = static_cast<int>(scheme.manifolds.size());
    PopulationVector p0{Eigen::VectorXd::Zero(n)};
    p0.p[scheme.index_of(Term::S12, 1)] = 1.0;  // pump from |1>
    const PopulationVector p = evolve_populations(matrix, p0, duration_s);
    return p.p[scheme.index_of(Term::S12, 0)];
}

// ---------------------------------------------------------------------------
// Detection scenario
// ---------------------------------------------------------------------------

namespace {

struct DetectionEngine {
    LevelScheme scheme;
    CompiledTimeline compiled;
    DetectionConfig det;
    std::string mode;  // trajectory | poisson
    double analytic_bright_rate = 0;
    int manifold_dark = 0;
    int manifold_bright = 0;
    std::uint64_t seed = 0;

    static DetectionEngine make(const Config& cfg) {
        DetectionEngine eng;
        eng.scheme = scheme_from_config(cfg);
        eng.det.window_s = cfg.require_double("detection.window_s");
        eng.det.threshold_counts = cfg.get_long("detection.threshold_counts", 1);
        eng.det.efficiency = cfg.require_double("detection.efficiency");
        eng.det.dark_rate_per_s = cfg.require_double("detection.dark_rate_per_s");
        eng.det.validate();
        eng.mode = cfg.get_string("detection.mode", "trajectory");
        eng.seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));

        RateOptions options;
        options.kappa_detect = cfg.get_double("detection.kappa", 1.0 / 3.0);
        options.far_detuned_weight =
            cfg.get_bool("detection.leak_channels", true)
                ? cfg.get_double("detection.leak_weight", 1.0)
                : 0.0;
        Timeline timeline;
        timeline.intervals.push_back(
            {eng.det.window_s, detection_beams(cfg), {}, "detect"});
        eng.compiled = CompiledTimeline::compile(eng.scheme, timeline, options);

        const auto& c = eng.scheme.constants;
        const double s =
            cfg.require_double("beam369.power_w") /
            cfg.require_double("beam369.p_sat_w");
        eng.analytic_bright_rate =
            scattering_rate(excited_population(s, 0.0, c.gamma_p12_per_s),
                            c.gamma_p12_per_s, options.kappa_detect) *
            (1.0 - c.r_branch);

        eng.manifold_dark = eng.scheme.index_of(Term::S12, 0);
        eng.manifold_bright =
            eng.scheme.species.isotope == Isotope::Yb171
                ? eng.scheme.index_of(Term::S12, 1)
                : eng.scheme.index_of(Term::S12, 0);
        return eng;
    }

    // Counts for one shot; RNG use matches detect_counts() applied to a
    // stored trajectory bit for bit.
    long shot(std::uint64_t shot_index, bool bright) const {
        RngStream det_rng(seed, RngPurpose::detection, shot_index);
        long n = 0;
        if (mode == "poisson") {
            if (bright) {
                n += det_rng.poisson(analytic_bright_rate * det.window_s *
                                     det.efficiency);
            }
        } else {
            RngStream traj_rng(seed, RngPurpose::trajectory, shot_index);
            const int start = bright ? manifold_bright : manifold_dark;
            run_jump_process(
                compiled, traj_rng, start,
                [&](double, const RateChannel& ch, int) {
                    if (ch.kind == RateChannel::Kind::spontaneous &&
                        scheme.channels[ch.decay_channel].emission_class ==
                            EmissionClass::nm369 &&
                        det_rng.bernoulli(det.efficiency)) {
                        ++n;
                    }
                });
        }
        n += det_rng.poisson(det.dark_rate_per_s * det.window_s);
        return n;
    }
};

}  // namespace

RunArtifact run_detection(const Config& raw) {
    Stopwatch watch;
    Config cfg = raw;
    resolve_common(cfg, "detect", "Yb171");
    def(cfg, "detect.shots_dark", "15290");
    def(cfg, "detect.shots_bright", "16497");
    if (cfg.has("shots_override")) {
        cfg.set("detect.shots_dark", cfg.get_string("shots_override"));
        cfg.set("detect.shots_bright", cfg.get_string("shots_override"));
    }
    const auto violations = validate_scenario_config(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());

    const long shots_dark = cfg.get_long("detect.shots_dark", 0);
    const long shots_bright = cfg.get_long("detect.shots_bright", 0);
    const DetectionEngine engine = DetectionEngine::make(cfg);
    const int threads = threads_from(cfg);

    std::vector<long> counts_dark(shots_dark);
    std::vector<long> counts_bright(shots_bright);
    parallel_for(shots_dark, threads, [&](long i) {
        counts_dark[i] = engine.shot(static_cast<std::uint64_t>(i), false);
    });
    parallel_for(shots_bright, threads, [&](long i) {
        counts_bright[i] =
            engine.shot(static_cast<std::uint64_t>(shots_dark + i), true);
    });

    const Histogram hist_dark = accumulate_histogram(counts_dark);
    const Histogram hist_bright = accumulate_histogram(counts_bright);
    const FidelityReport report =
        estimate_fidelity(hist_dark, hist_bright, engine.det);

    RunArtifact artifact;
    artifact.out_dir = cfg.get_string("out_dir");
    write_resolved_config(artifact, cfg);
    const std::uint64_t seed = engine.seed;
    const std::string format = cfg.get_string("format", "csv");

    auto hist_table = [](const std::string& name, const Histogram& h) {
        Table t;
        t.name = name;
        t.columns = {"count", "occurrences"};
        long max_count = 0;
        for (const auto& [c, n] : h.occurrences) max_count = std::max(max_count, c);
        for (long c = 0; c <= max_count; ++c) {
            auto it = h.occurrences.find(c);
            t.rows.push_back({static_cast<double>(c),
                              static_cast<double>(
                                  it == h.occurrences.end() ? 0 : it->second)});
        }
        return t;
    };
    write_table(artifact, hist_table("hist_dark", hist_dark), format, cfg,
                seed, watch.elapsed_s());
    write_table(artifact, hist_table("hist_bright", hist_bright), format, cfg,
                seed, watch.elapsed_s());

    Table sweep;
    sweep.name = "threshold_sweep";
    sweep.columns = {"threshold_counts", "average_fidelity"};
    for (const auto& pt : sweep_threshold(hist_dark, hist_bright, 10)) {
        sweep.rows.push_back({static_cast<double>(pt.threshold_counts),
                              pt.average_fidelity});
    }
    write_table(artifact, sweep, format, cfg, seed, watch.elapsed_s());

    // Closed-form companions for the measured numbers.
    LeakModel leak;
    leak.q_leak = calibrate_q_leak(0.003, 0.9951);
    leak.kappa_applied = true;
    const double theory = theoretical_fidelity(engine.det.efficiency, leak);
    const double physical_q =
        physical_leak_estimate(engine.scheme,
                               engine.compiled.intervals().front().matrix);

    nlohmann::json doc = nlohmann::json::parse(report.to_json());
    doc["theoretical_fidelity_at_efficiency"] = theory;
    doc["q_leak_calibrated"] = leak.q_leak;
    doc["q_leak_physical_estimate"] = physical_q;
    write_text(artifact, "fidelity.json", doc.dump(2) + "\n");

    artifact.derived["fidelity_dark"] = report.fidelity_dark;
    artifact.derived["fidelity_bright"] = report.fidelity_bright;
    artifact.derived["fidelity_average"] = report.average;
    artifact.derived["fidelity_error"] = report.err_average;
    return artifact;
}

// ---------------------------------------------------------------------------
// Rabi scenario
// ---------------------------------------------------------------------------

RunArtifact run_rabi(const Config& raw) {
    Stopwatch watch;
    Config cfg = raw;
    resolve_common(cfg, "rabi", "Yb171");
    def_num(cfg, "rabi.pi_time_s", 6.0e-6);
    def_num(cfg, "rabi.duration_max_s", 24.0e-6);
    def(cfg, "rabi.points", "33");
    def(cfg, "rabi.shots_per_point", "1000");
    def_num(cfg, "rabi.detuning_hz", 0.0);
    if (cfg.has("shots_override")) {
        cfg.set("rabi.shots_per_point", cfg.get_string("shots_override"));
    }
    const auto violations = validate_scenario_config(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());

    const double pi_time = cfg.require_double("rabi.pi_time_s");
    const double t_max = cfg.require_double("rabi.duration_max_s");
    const long points = cfg.get_long("rabi.points", 33);
    const long shots = cfg.get_long("rabi.shots_per_point", 1000);
    const double omega = M_PI / pi_time;
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    const MagneticEnvironment env = environment_from_config(cfg);
    const DetectionEngine engine = DetectionEngine::make(cfg);
    const std::string mode = cfg.get_string("detection.mode", "trajectory");
    const int threads = threads_from(cfg);

    std::vector<double> durations(points);
    for (long i = 0; i < points; ++i) {
        durations[i] = points == 1 ? t_max : t_max * i / (points - 1);
    }

    std::vector<double> p_one(points), p_err(points);
    parallel_for(points, threads, [&](long pt) {
        long ones = 0;
        for (long k = 0; k < shots; ++k) {
            const std::uint64_t shot =
                static_cast<std::uint64_t>(pt) * shots + k;
            MicrowavePulse pulse;
            pulse.rabi_frequency_rad_per_s = omega;
            pulse.duration_s = durations[pt];
            pulse.detuning_hz = cfg.get_double("rabi.detuning_hz", 0.0);
            const double detuning =
                env.freq_noise_rms_hz > 0
                    ? sample_shot_detuning(env, 0, seed, shot)
                    : 0.0;
            const QubitState q = apply_pulse(QubitState{}, pulse, detuning);
            RngStream born(seed, RngPurpose::preparation, shot);
            const int outcome = born_outcome(q.prob_one(), born);
            if (mode == "ideal") {
                ones += outcome;
            } else {
                const long count = engine.shot(shot, outcome == 1);
                if (classify(count, engine.det) == QubitLabel::one) ++ones;
            }
        }
        p_one[pt] = static_cast<double>(ones) / shots;
        p_err[pt] = std::sqrt(std::max(p_one[pt] * (1 - p_one[pt]), 0.25 / shots) /
                              shots);
    });

    DataSeries series;
    series.x = durations;
    series.y = p_one;
    series.sigma_y = p_err;
    series.x_label = "duration_s";
    series.y_label = "p_one";
    const FitResult fit = fit_sinusoid(series);
    const double f = std::fabs(fit.value("f"));
    const double pi_time_fit = 0.5 / f;

    RunArtifact artifact;
    artifact.out_dir = cfg.get_string("out_dir");
    write_resolved_config(artifact, cfg);
    const std::string format = cfg.get_string("format", "csv");
    Table table;
    table.name = "rabi";
    table.columns = {"duration_s", "p_one", "p_one_err"};
    for (long i = 0; i < points; ++i) {
        table.rows.push_back({durations[i], p_one[i], p_err[i]});
    }
    write_table(artifact, table, format, cfg, seed, watch.elapsed_s());

    nlohmann::json doc;
    doc["rabi_frequency_hz"] = f;
    doc["rabi_frequency_err_hz"] = fit.error("f");
    doc["pi_time_s"] = pi_time_fit;
    doc["amplitude"] = std::fabs(fit.value("A"));
    doc["offset"] = fit.value("offset");
    doc["fit"] = fit_json(fit);
    write_text(artifact, "rabi_fit.json", doc.dump(2) + "\n");

    artifact.derived["pi_time_s"] = pi_time_fit;
    artifact.derived["rabi_frequency_hz"] = f;
    return artifact;
}

// ---------------------------------------------------------------------------
// Branching-ratio scenario (App-style pulsed repump sequence)
// ---------------------------------------------------------------------------

namespace {

struct BranchingSetup {
    LevelScheme scheme;
    RateMatrix on_matrix;   // repump sideband on
    RateMatrix off_matrix;  // sideband off, carrier only
    PopulationVector bright_steady;
};

BranchingSetup branching_setup(const Config& cfg, double power_w) {
    BranchingSetup setup;
    setup.scheme = scheme_from_config(cfg);

    BeamWithModulators b369;
    b369.beam = beam_from(cfg, "beam369", WavelengthClass::nm369);
    b369.beam.power_w = power_w;

    std::vector<BeamWithModulators> on{b369, repump_935(cfg, true)};
    std::vector<BeamWithModulators> off{b369, repump_935(cfg, false)};
    setup.on_matrix = build_rate_matrix(setup.scheme, on, {});
    setup.off_matrix = build_rate_matrix(setup.scheme, off, {});
    setup.bright_steady = steady_state(setup.on_matrix);
    return setup;
}

}  // namespace

RunArtifact run_branching(const Config& raw) {
    Stopwatch watch;
    Config cfg = raw;
    // 935 nm geometry for this sequence: weak beam, carrier parked 3 GHz
    // below the repump transition, first-order sideband driven back onto
    // resonance.  Applied before the shared defaults so they take effect.
    def(cfg, "beam935.power_w", "2.0e-5");
    def(cfg, "beam935.detuning_hz", "-3.0e9");
    def(cfg, "beam935.eom_drive_hz", "3.0e9");
    resolve_common(cfg, "branching", "Yb174");
    def(cfg, "branching.powers_w",
        "0.16e-6,0.4e-6,0.8e-6,1.6e-6,4.0e-6,8.0e-6");
    def(cfg, "branching.n_reps", "1500000");
    def_num(cfg, "branching.bin_width_s", 16e-9);
    def_num(cfg, "branching.repump_on_s", 100e-6);
    def_num(cfg, "branching.decay_window_s", 95e-6);
    def(cfg, "branching.mode", "ode");
    def(cfg, "branching.mc_reps", "2000");
    def_num(cfg, "branching.efficiency", 1.0e-3);
    def_num(cfg, "branching.dark_rate_per_s", 150.0);
    def(cfg, "branching.write_traces", "on");
    if (cfg.has("shots_override")) {
        cfg.set("branching.n_reps", cfg.get_string("shots_override"));
        cfg.set("branching.mc_reps", cfg.get_string("shots_override"));
    }
    const auto violations = validate_scenario_config(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());

    const std::vector<double> powers = cfg.get_double_list("branching.powers_w");
    const double n_reps = cfg.get_double("branching.n_reps", 0);
    const double bin_width = cfg.require_double("branching.bin_width_s");
    const double window = cfg.require_double("branching.decay_window_s");
    const double efficiency = cfg.require_double("branching.efficiency");
    const double dark_rate = cfg.require_double("branching.dark_rate_per_s");
    const std::string mode = cfg.get_string("branching.mode", "ode");
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    const int threads = threads_from(cfg);
    const int bins = static_cast<int>(window / bin_width);

    RunArtifact artifact;
    artifact.out_dir = cfg.get_string("out_dir");
    write_resolved_config(artifact, cfg);
    const std::string format = cfg.get_string("format", "csv");
    const bool write_traces = cfg.get_bool("branching.write_traces", true);

    const int n_powers = static_cast<int>(powers.size());
    std::vector<std::vector<long>> traces(n_powers);
    parallel_for(n_powers, threads, [&](long pi) {
        const BranchingSetup setup = branching_setup(cfg, powers[pi]);
        std::vector<long>& counts = traces[pi];
        counts.assign(bins, 0);
        if (mode == "ode") {
            // Expected per-bin counts from the rate equations, Poisson noise
            // matched to the repetition count.
            PopulationVector p = setup.bright_steady;
            const std::vector<double> expected = fluorescence_bins(
                setup.scheme, setup.off_matrix, p, bin_width, bins);
            for (int k = 0; k < bins; ++k) {
                const double mean =
                    n_reps * (expected[k] * efficiency + dark_rate * bin_width);
                RngStream rng(seed, RngPurpose::bin_noise,
                              static_cast<std::uint64_t>(pi),
                              static_cast<std::uint64_t>(k));
                counts[k] = rng.poisson(mean);
            }
        } else {
            // Jump trajectories over the decay window from the bright
            // steady state, thinned to detector counts.
            Timeline timeline;
            BeamWithModulators b369;
            b369.beam = beam_from(cfg, "beam369", WavelengthClass::nm369);
            b369.beam.power_w = powers[pi];
            timeline.intervals.push_back(
                {window, {b369, repump_935(cfg, false)}, {}, "decay"});
            const CompiledTimeline compiled =
                CompiledTimeline::compile(setup.scheme, timeline, {});
            const long reps = cfg.get_long("branching.mc_reps", 2000);
            for (long rep = 0; rep < reps; ++rep) {
                const std::uint64_t idx =
                    static_cast<std::uint64_t>(pi) * reps + rep;
                RngStream traj(seed, RngPurpose::trajectory, idx);
                RngStream thin(seed, RngPurpose::detection, idx);
                const int start =
                    sample_initial_manifold(setup.bright_steady, traj);
                run_jump_process(
                    compiled, traj, start,
                    [&](double t, const RateChannel& ch, int) {
                        if (ch.kind == RateChannel::Kind::spontaneous &&
                            setup.scheme.channels[ch.decay_channel]
                                    .emission_class == EmissionClass::nm369 &&
                            thin.bernoulli(efficiency)) {
                            const int k = static_cast<int>(t / bin_width);
                            if (k >= 0 && k < bins) ++counts[k];
                        }
                    });
            }
            RngStream dark(seed, RngPurpose::bin_noise,
                           static_cast<std::uint64_t>(pi), 0xdac0);
            for (int k = 0; k < bins; ++k) {
                counts[k] += dark.poisson(reps * dark_rate * bin_width);
            }
        }
    });

    // Per-power exponential fits.
    std::vector<double> decay_b(n_powers), decay_b_err(n_powers);
    for (int pi = 0; pi < n_powers; ++pi) {
        DataSeries series;
        series.x.resize(bins);
        series.y.resize(bins);
        series.sigma_y.resize(bins);
        for (int k = 0; k < bins; ++k) {
            series.x[k] = (k + 0.5) * bin_width;
            series.y[k] = static_cast<double>(traces[pi][k]);
            series.sigma_y[k] = std::sqrt(std::max(series.y[k], 1.0));
        }
        const FitResult fit = fit_exponential_decay(series);
        if (!fit.converged) {
            throw FitError("decay fit failed at power index " +
                           std::to_string(pi) + ": " + fit.diagnostic);
        }
        decay_b[pi] = fit.value("b");
        decay_b_err[pi] = fit.error("b");
        if (write_traces) {
            Table trace;
            trace.name = "decay_trace_p" + std::to_string(pi);
            trace.columns = {"time_s", "counts"};
            for (int k = 0; k < bins; ++k) {
                trace.rows.push_back({series.x[k], series.y[k]});
            }
            write_table(artifact, trace, format, cfg, seed, watch.elapsed_s());
        }
    }

    Table rates;
    rates.name = "decay_rates";
    rates.columns = {"power_w", "b_per_s", "b_err_per_s"};
    for (int pi = 0; pi < n_powers; ++pi) {
        rates.rows.push_back({powers[pi], decay_b[pi], decay_b_err[pi]});
    }
    write_table(artifact, rates, format, cfg, seed, watch.elapsed_s());

    // Saturation-curve fit with power as the dependent variable and the
    // +/-10% intensity-drift error bars.
    const PhysicalConstants constants = constants_from_config(cfg);
    DataSeries sat;
    sat.x = decay_b;
    sat.y = powers;
    for (double p : powers) sat.sigma_y.push_back(0.1 * p);
    sat.x_label = "b_per_s";
    sat.y_label = "power_w";
    const BranchingFitResult branch =
        fit_branching_saturation(sat, constants.gamma_p12_per_s);

    nlohmann::json doc;
    doc["r_branch"] = branch.r;
    doc["r_branch_err"] = branch.r_err;
    doc["gamma_r_per_s"] = branch.fit.value("gammaR");
    doc["gamma_r_err_per_s"] = branch.fit.error("gammaR");
    doc["p_sat_w"] = branch.fit.value("p_sat");
    doc["p_sat_err_w"] = branch.fit.error("p_sat");
    doc["gamma_per_s"] = branch.gamma_per_s;
    doc["fit"] = fit_json(branch.fit);
    write_text(artifact, "branching.json", doc.dump(2) + "\n");

    artifact.derived["r_branch"] = branch.r;
    artifact.derived["r_branch_err"] = branch.r_err;
    artifact.derived["p_sat_w"] = branch.fit.value("p_sat");
    return artifact;
}

// ---------------------------------------------------------------------------
// Hyperfine-splitting scans
// ---------------------------------------------------------------------------

namespace {

DataSeries scan_series(std::vector<double> xs, std::vector<double> ys) {
    DataSeries s;
    s.x = std::move(xs);
    s.y = std::move(ys);
    s.x_label = "drive_hz";
    s.y_label = "counts";
    return s;
}

}  // namespace

RunArtifact run_hyperfine_scan(const Config& raw) {
    Stopwatch watch;
    Config cfg = raw;
    // The scans run with the repump power reduced to ~20 uW at the trap.
    def(cfg, "beam935.power_w", "2.0e-5");
    resolve_common(cfg, "hyperfine", "Yb171");
    def_num(cfg, "hyperfine.stage1_start_hz", 2.0e9);
    def_num(cfg, "hyperfine.stage1_stop_hz", 6.2e9);
    def_num(cfg, "hyperfine.stage2_start_hz", 2.6e9);
    def_num(cfg, "hyperfine.stage2_stop_hz", 3.6e9);
    def_num(cfg, "hyperfine.step_hz", 2.0e6);
    def_num(cfg, "hyperfine.stage1_carrier_detuning_hz", -3.0e9);
    def_num(cfg, "hyperfine.integration_s", 1.5);
    def_num(cfg, "hyperfine.stage2_window_s", 2.5e-6);
    def(cfg, "hyperfine.stage2_reps", "200000");
    def_num(cfg, "hyperfine.efficiency", 1.0e-3);
    def_num(cfg, "hyperfine.min_prominence_frac", 0.25);
    const auto violations = validate_scenario_config(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());

    const LevelScheme scheme = scheme_from_config(cfg);
    const double step = cfg.require_double("hyperfine.step_hz");
    const double efficiency = cfg.require_double("hyperfine.efficiency");
    const double prominence_frac =
        cfg.require_double("hyperfine.min_prominence_frac");
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    const int threads = threads_from(cfg);

    BeamWithModulators cool;
    cool.beam = beam_from(cfg, "cool", WavelengthClass::nm369);
    cool.beam.power_w = cfg.require_double("cool.power_w");
    cool.modulators.push_back(modulator_from(cfg, "cool.eom"));

    auto scan_grid = [&](double start, double stop) {
        std::vector<double> grid;
        for (double f = start; f <= stop + 0.5 * step; f += step) {
            grid.push_back(f);
        }
        return grid;
    };

    // Stage 1: steady-state fluorescence while the repump sideband sweeps
    // across the two D32 F=1 resonances.
    const double stage1_detuning =
        cfg.require_double("hyperfine.stage1_carrier_detuning_hz");
    const double integration = cfg.require_double("hyperfine.integration_s");
    const auto grid1 = scan_grid(cfg.require_double("hyperfine.stage1_start_hz"),
                                 cfg.require_double("hyperfine.stage1_stop_hz"));
    std::vector<double> counts1(grid1.size());
    parallel_for(static_cast<long>(grid1.size()), threads, [&](long i) {
        BeamWithModulators repump = repump_935(cfg, false);
        repump.beam.carrier_detuning_hz = stage1_detuning;
        Modulator eom = modulator_from(cfg, "beam935.eom");
        eom.drive_frequency_hz = grid1[i];
        repump.modulators.push_back(eom);
        const RateMatrix m = build_rate_matrix(scheme, {cool, repump}, {});
        const PopulationVector ss = steady_state(m);
        const double rate = fluorescence_rate(scheme, ss.p);
        RngStream rng(seed, RngPurpose::bin_noise, 1, static_cast<std::uint64_t>(i));
        counts1[i] =
            static_cast<double>(rng.poisson(rate * efficiency * integration));
    });

    const DataSeries series1 = scan_series(grid1, counts1);
    double max1 = 0, min1 = counts1.empty() ? 0 : counts1[0];
    for (double v : counts1) {
        max1 = std::max(max1, v);
        min1 = std::min(min1, v);
    }
    PeakSet peaks1 = find_peaks(series1, prominence_frac * (max1 - min1));
    if (peaks1.peaks.size() < 2) {
        throw ScanCoverageError(
            "stage 1 scan covers fewer than two repump resonances");
    }
    std::sort(peaks1.peaks.begin(), peaks1.peaks.end(),
              [](const Peak& a, const Peak& b) {
                  return a.prominence > b.prominence;
              });
    peaks1.peaks.resize(2);
    std::sort(peaks1.peaks.begin(), peaks1.peaks.end(),
              [](const Peak& a, const Peak& b) {
                  return a.center_hz < b.center_hz;
              });
    const double d3half_measured =
        peaks1.peaks[1].center_hz - peaks1.peaks[0].center_hz;

    // Stage 2: population parked in D32 F=2, short windows, fluorescence
    // returns when the scanned sideband clears it.
    const auto grid2 = scan_grid(cfg.require_double("hyperfine.stage2_start_hz"),
                                 cfg.require_double("hyperfine.stage2_stop_hz"));
    const double window2 = cfg.require_double("hyperfine.stage2_window_s");
    const double reps2 = cfg.get_double("hyperfine.stage2_reps", 1);
    const int d32_f2 = scheme.index_of(Term::D32, 2);
    std::vector<double> counts2(grid2.size());
    parallel_for(static_cast<long>(grid2.size()), threads, [&](long i) {
        BeamWithModulators repump = repump_935(cfg, false);
        repump.beam.carrier_detuning_hz = 0.0;  // parked on the reference
        Modulator eom = modulator_from(cfg, "beam935.eom");
        eom.drive_frequency_hz = grid2[i];
        repump.modulators.push_back(eom);
        const RateMatrix m = build_rate_matrix(scheme, {cool, repump}, {});
        PopulationVector p0{
            Eigen::VectorXd::Zero(static_cast<int>(scheme.manifolds.size()))};
        p0.p[d32_f2] = 1.0;
        const std::vector<double> integral =
            fluorescence_bins(scheme, m, p0, window2, 1);
        RngStream rng(seed, RngPurpose::bin_noise, 2, static_cast<std::uint64_t>(i));
        counts2[i] = static_cast<double>(
            rng.poisson(integral[0] * efficiency * reps2));
    });

    const DataSeries series2 = scan_series(grid2, counts2);
    double max2 = 0, min2 = counts2.empty() ? 0 : counts2[0];
    for (double v : counts2) {
        max2 = std::max(max2, v);
        min2 = std::min(min2, v);
    }
    PeakSet peaks2 = find_peaks(series2, prominence_frac * (max2 - min2));
    if (peaks2.peaks.empty()) {
        throw ScanCoverageError("stage 2 scan misses the D32 F=2 resonance");
    }
    std::sort(peaks2.peaks.begin(), peaks2.peaks.end(),
              [](const Peak& a, const Peak& b) {
                  return a.prominence > b.prominence;
              });
    const double d32_measured = peaks2.peaks.front().center_hz - d3half_measured;

    RunArtifact artifact;
    artifact.out_dir = cfg.get_string("out_dir");
    write_resolved_config(artifact, cfg);
    const std::string format = cfg.get_string("format", "csv");
    auto scan_table = [&](const std::string& name, const DataSeries& s) {
        Table t;
        t.name = name;
        t.columns = {"drive_hz", "counts"};
        for (std::size_t i = 0; i < s.size(); ++i) {
            t.rows.push_back({s.x[i], s.y[i]});
        }
        write_table(artifact, t, format, cfg, seed, watch.elapsed_s());
    };
    scan_table("scan_stage1", series1);
    scan_table("scan_stage2", series2);

    nlohmann::json doc;
    doc["d3half_splitting_hz"] = d3half_measured;
    doc["d32_splitting_hz"] = d32_measured;
    doc["stage1_peaks_hz"] = {peaks1.peaks[0].center_hz,
                              peaks1.peaks[1].center_hz};
    doc["stage2_peak_hz"] = peaks2.peaks.front().center_hz;
    doc["grid_step_hz"] = step;
    write_text(artifact, "splittings.json", doc.dump(2) + "\n");

    artifact.derived["d3half_splitting_hz"] = d3half_measured;
    artifact.derived["d32_splitting_hz"] = d32_measured;
    artifact.derived["grid_step_hz"] = step;
    return artifact;
}

// ---------------------------------------------------------------------------
// Ramsey-echo two-ion coherence scenario
// ---------------------------------------------------------------------------

RunArtifact run_ramsey(const Config& raw) {
    Stopwatch watch;
    Config cfg = raw;
    // The coherence scan is meaningless with a perfectly quiet field; the
    // scenario default matches a 2.5 s coherence time.
    def(cfg, "magnetic.freq_noise_rms_hz", format_double(0.09003));
    resolve_common(cfg, "ramsey", "Yb171");
    def(cfg, "ramsey.t_list_s", "0,0.6,1.2,1.8,2.4,3.0");
    def(cfg, "ramsey.dt_points", "48");
    def_num(cfg, "ramsey.dt_max_s", 823e-6);
    def(cfg, "ramsey.shots_per_point", "2000");
    def_num(cfg, "ramsey.pi_time_s", 6.0e-6);
    def(cfg, "ramsey.phase_scrambled", "on");
    if (cfg.has("shots_override")) {
        cfg.set("ramsey.shots_per_point", cfg.get_string("shots_override"));
    }
    const auto violations = validate_scenario_config(cfg);
    if (!violations.empty()) throw ConfigError(violations.front());

    const std::vector<double> t_list = cfg.get_double_list("ramsey.t_list_s");
    const long dt_points = cfg.get_long("ramsey.dt_points", 48);
    const double dt_max = cfg.require_double("ramsey.dt_max_s");
    const long shots = cfg.get_long("ramsey.shots_per_point", 2000);
    const double pi_time = cfg.require_double("ramsey.pi_time_s");
    const bool scrambled = cfg.get_bool("ramsey.phase_scrambled", true);
    const double omega = M_PI / pi_time;
    const MagneticEnvironment env = environment_from_config(cfg);
    const std::uint64_t seed = static_cast<std::uint64_t>(cfg.get_long("seed", 1));
    const int threads = threads_from(cfg);

    std::vector<double> dts(dt_points);
    for (long i = 0; i < dt_points; ++i) {
        dts[i] = dt_points == 1 ? dt_max : dt_max * i / (dt_points - 1);
    }

    const long n_t = static_cast<long>(t_list.size());
    const long n_points = n_t * dt_points;
    std::vector<double> parity_val(n_points), parity_err(n_points);
    std::vector<double> single_ion_mean(n_points);

    auto pulse_of = [&](double duration, double phase) {
        MicrowavePulse p;
        p.rabi_frequency_rad_per_s = omega;
        p.duration_s = duration;
        p.phase_rad = phase;
        return p;
    };
    auto free_of = [&](double duration) {
        MicrowavePulse p;
        p.duration_s = duration;
        return p;
    };

    parallel_for(n_points, threads, [&](long point) {
        const long ti = point / dt_points;
        const long di = point % dt_points;
        const double big_t = t_list[ti];
        const double dt = dts[di];
        long sum_parity = 0;
        long sum_a_one = 0;
        for (long k = 0; k < shots; ++k) {
            const std::uint64_t shot =
                static_cast<std::uint64_t>(point) * shots + k;
            RngStream phase_rng(seed, RngPurpose::scrambled_phase, shot);
            const double analysis_phase =
                scrambled ? phase_rng.uniform(0.0, 2.0 * M_PI) : 0.0;
            int outcome[2];
            for (int ion = 0; ion < 2; ++ion) {
                // The differential field fluctuates within the multi-second
                // delay, so each free-precession half sees its own
                // quasi-static sample.
                const double d1 =
                    sample_shot_detuning(env, ion, seed, shot * 2);
                const double d2 =
                    sample_shot_detuning(env, ion, seed, shot * 2 + 1);
                QubitState q;
                q = apply_pulse(q, pulse_of(0.5 * pi_time, 0.0), d1);
                q = apply_pulse(q, free_of(0.5 * big_t), d1);
                q = apply_pulse(q, pulse_of(pi_time, 0.0), d1);
                q = apply_pulse(q, free_of(0.5 * big_t + dt), d2);
                q = apply_pulse(q, pulse_of(0.5 * pi_time, analysis_phase), d2);
                RngStream born(seed, RngPurpose::preparation,
                               shot * 2 + ion, 0xb0);
                outcome[ion] = born_outcome(q.prob_one(), born);
            }
            sum_parity += (outcome[0] == outcome[1]) ? 1 : -1;
            sum_a_one += outcome[0];
        }
        parity_val[point] = static_cast<double>(sum_parity) / shots;
        parity_err[point] = std::sqrt(
            std::max(1.0 - parity_val[point] * parity_val[point], 1.0 / shots) /
            shots);
        single_ion_mean[point] = static_cast<double>(sum_a_one) / shots;
    });

    RunArtifact artifact;
    artifact.out_dir = cfg.get_string("out_dir");
    write_resolved_config(artifact, cfg);
    const std::string format = cfg.get_string("format", "csv");

    // Fringe fit per delay.
    std::vector<double> amplitude(n_t), amplitude_err(n_t), frequency(n_t);
    for (long ti = 0; ti < n_t; ++ti) {
        DataSeries fringe;
        for (long di = 0; di < dt_points; ++di) {
            fringe.x.push_back(dts[di]);
            fringe.y.push_back(parity_val[ti * dt_points + di]);
            fringe.sigma_y.push_back(parity_err[ti * dt_points + di]);
        }
        fringe.x_label = "delta_t_s";
        fringe.y_label = "parity";
        const FitResult fit = fit_sinusoid(fringe);
        amplitude[ti] = std::fabs(fit.value("A"));
        amplitude_err[ti] = fit.error("A");
        frequency[ti] = std::fabs(fit.value("f"));

        Table table;
        table.name = "parity_T" + std::to_string(ti);
        table.columns = {"delta_t_s", "parity", "parity_err"};
        for (long di = 0; di < dt_points; ++di) {
            table.rows.push_back({fringe.x[di], fringe.y[di],
                                  fringe.sigma_y[di]});
        }
        write_table(artifact, table, format, cfg, seed, watch.elapsed_s());
    }

    Table amp_table;
    amp_table.name = "fringe_amplitude";
    amp_table.columns = {"delay_s", "amplitude", "amplitude_err"};
    for (long ti = 0; ti < n_t; ++ti) {
        amp_table.rows.push_back({t_list[ti], amplitude[ti], amplitude_err[ti]});
    }
    write_table(artifact, amp_table, format, cfg, seed, watch.elapsed_s());

    // Gaussian amplitude decay -> coherence time.
    DataSeries amp_series;
    amp_series.x = t_list;
    amp_series.y = amplitude;
    amp_series.sigma_y = amplitude_err;
    const FitResult decay = fit_gaussian_decay(amp_series);

    // Single-ion marginal at the first delay; scrambling must flatten it.
    DataSeries marginal;
    for (long di = 0; di < dt_points; ++di) {
        marginal.x.push_back(dts[di]);
        marginal.y.push_back(single_ion_mean[di]);
    }
    double single_amp = 0;
    try {
        const FitResult single_fit = fit_sinusoid(marginal);
        single_amp = std::fabs(single_fit.value("A"));
    } catch (const std::exception&) {
        single_amp = 0;
    }

    nlohmann::json doc;
    doc["tau_s"] = decay.value("tau");
    doc["tau_err_s"] = decay.error("tau");
    doc["amplitude_t0"] = amplitude.empty() ? 0.0 : amplitude[0];
    doc["fringe_frequency_hz"] = frequency.empty() ? 0.0 : frequency[0];
    doc["single_ion_fringe_amplitude"] = single_amp;
    doc["fit"] = fit_json(decay);
    write_text(artifact, "coherence.json", doc.dump(2) + "\n");

    artifact.derived["tau_s"] = decay.value("tau");
    artifact.derived["amplitude_t0"] = amplitude.empty() ? 0.0 : amplitude[0];
    artifact.derived["fringe_frequency_hz"] =
        frequency.empty() ? 0.0 : frequency[0];
    artifact.derived["single_ion_fringe_amplitude"] = single_amp;
    return artifact;
}

// ---------------------------------------------------------------------------
// Config validation and CLI
// ---------------------------------------------------------------------------

const std::vector<std::string>& scenario_ids() {
    static const std::vector<std::string> ids{"detect", "rabi", "branching",
                                              "hyperfine", "ramsey"};
    return ids;
}

std::vector<std::string> validate_scenario_config(const Config& cfg) {
    std::vector<std::string> violations;
    const std::string scenario = cfg.get_string("scenario", "");
    const auto& ids = scenario_ids();
    if (std::find(ids.begin(), ids.end(), scenario) == ids.end()) {
        violations.push_back("scenario must be one of detect, rabi, "
                             "branching, hyperfine, ramsey");
        return violations;
    }
    auto check_positive = [&](const std::string& key) {
        if (cfg.has(key) && !(cfg.get_double(key, 0) > 0)) {
            violations.push_back(key + " must be > 0");
        }
    };
    try {
        constants_from_config(cfg).validate();
    } catch (const std::exception& e) {
        violations.push_back(std::string("constants: ") + e.what());
    }
    try {
        environment_from_config(cfg).validate();
    } catch (const std::exception& e) {
        violations.push_back(std::string("magnetic: ") + e.what());
    }
    const std::string format = cfg.get_string("format", "csv");
    if (format != "csv" && format != "json") {
        violations.push_back("format must be csv or json");
    }
    check_positive("detection.window_s");
    check_positive("detection.efficiency");
    if (cfg.has("detection.efficiency") &&
        cfg.get_double("detection.efficiency", 0) > 1) {
        violations.push_back("detection.efficiency must be <= 1");
    }
    if (cfg.has("detection.dark_rate_per_s") &&
        cfg.get_double("detection.dark_rate_per_s", 0) < 0) {
        violations.push_back("detection.dark_rate_per_s must be >= 0");
    }
    const std::string mode = cfg.get_string("detection.mode", "trajectory");
    if (mode != "trajectory" && mode != "poisson" && mode != "ideal") {
        violations.push_back("detection.mode must be trajectory, poisson or ideal");
    }

    if (scenario == "detect") {
        if (cfg.get_long("detect.shots_dark", 1) <= 0 ||
            cfg.get_long("detect.shots_bright", 1) <= 0) {
            violations.push_back("detect shot counts must be > 0");
        }
        if (mode == "ideal") {
            violations.push_back("detect scenario needs counted photons "
                                 "(trajectory or poisson mode)");
        }
    } else if (scenario == "rabi") {
        if (cfg.get_long("rabi.shots_per_point", 1) <= 0) {
            violations.push_back("rabi.shots_per_point must be > 0");
        }
        if (cfg.get_long("rabi.points", 2) < 2) {
            violations.push_back("rabi.points must be >= 2");
        }
        check_positive("rabi.pi_time_s");
        check_positive("rabi.duration_max_s");
    } else if (scenario == "branching") {
        const auto powers = cfg.get_double_list("branching.powers_w");
        if (!powers.empty()) {
            if (powers.size() < 3) {
                violations.push_back("branching.powers_w needs >= 3 powers");
            }
            for (std::size_t i = 0; i < powers.size(); ++i) {
                if (!(powers[i] > 0)) {
                    violations.push_back("branching powers must be > 0");
                    break;
                }
                if (i > 0 && powers[i] <= powers[i - 1]) {
                    violations.push_back("branching.powers_w must be sorted "
                                         "strictly ascending");
                    break;
                }
            }
        }
        if (cfg.get_double("branching.n_reps", 1) <= 0) {
            violations.push_back("branching.n_reps must be > 0");
        }
        const std::string bmode = cfg.get_string("branching.mode", "ode");
        if (bmode != "ode" && bmode != "mc") {
            violations.push_back("branching.mode must be ode or mc");
        }
    } else if (scenario == "hyperfine") {
        check_positive("hyperfine.step_hz");
        for (const char* stage : {"stage1", "stage2"}) {
            const std::string lo = "hyperfine." + std::string(stage) + "_start_hz";
            const std::string hi = "hyperfine." + std::string(stage) + "_stop_hz";
            if (cfg.has(lo) && cfg.has(hi) &&
                !(cfg.get_double(lo, 0) < cfg.get_double(hi, 0))) {
                violations.push_back(lo + " must be below " + hi);
            }
        }
    } else if (scenario == "ramsey") {
        const auto ts = cfg.get_double_list("ramsey.t_list_s");
        if (!ts.empty()) {
            for (std::size_t i = 1; i < ts.size(); ++i) {
                if (ts[i] <= ts[i - 1]) {
                    violations.push_back("ramsey.t_list_s must be sorted "
                                         "strictly ascending");
                    break;
                }
            }
            if (ts.front() < 0) {
                violations.push_back("ramsey delays must be >= 0");
            }
        }
        if (cfg.get_long("ramsey.shots_per_point", 1) <= 0) {
            violations.push_back("ramsey.shots_per_point must be > 0");
        }
        if (cfg.get_long("ramsey.dt_points", 8) < 8) {
            violations.push_back("ramsey.dt_points must be >= 8");
        }
    }
    return violations;
}

int cli_main(int argc, char** argv) {
    CLI::App app{"Yb+ hyperfine-qubit experiment simulator"};
    app.require_subcommand(1);

    std::string config_path, out_dir, format;
    long long seed = -1, shots = -1, threads = -1;

    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file");
        sub->add_option("--seed", seed, "master seed (overrides config)");
        sub->add_option("--out", out_dir, "output directory");
        sub->add_option("--shots", shots, "shot-count override");
        sub->add_option("--format", format, "table format: csv or json");
        sub->add_option("--threads", threads, "worker threads (0 = auto)");
    };

    std::vector<CLI::App*> subs;
    for (const auto& id : scenario_ids()) {
        CLI::App* sub = app.add_subcommand(id, "run the " + id + " scenario");
        add_common(sub);
        subs.push_back(sub);
    }
    CLI::App* validate =
        app.add_subcommand("validate-config", "check a config file");
    std::string validate_path;
    validate->add_option("config", validate_path, "config file to check")
        ->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        if (e.get_exit_code() == 0) return app.exit(e);  // --help
        app.exit(e);
        return 1;
    }

    try {
        if (validate->parsed()) {
            Config cfg = Config::parse_file(validate_path);
            if (!cfg.has("scenario")) {
                std::cerr << "ybsim: [config-error] missing 'scenario' key\n";
                return 1;
            }
            Config resolved = cfg;
            const std::string scenario = cfg.get_string("scenario");
            resolve_common(resolved, scenario, scenario == "branching"
                                                   ? "Yb174"
                                                   : "Yb171");
            const auto violations = validate_scenario_config(resolved);
            for (const auto& v : violations) {
                std::cerr << "ybsim: [config-error] " << v << "\n";
            }
            if (violations.empty()) {
                std::cout << "config ok (scenario " << scenario << ")\n";
                return 0;
            }
            return 1;
        }

        std::string scenario;
        for (std::size_t i = 0; i < subs.size(); ++i) {
            if (subs[i]->parsed()) scenario = scenario_ids()[i];
        }
        Config cfg = config_path.empty() ? Config()
                                         : Config::parse_file(config_path);
        if (cfg.has("scenario") && cfg.get_string("scenario") != scenario) {
            std::cerr << "ybsim: [config-error] config is for scenario '"
                      << cfg.get_string("scenario") << "', not '" << scenario
                      << "'\n";
            return 1;
        }
        cfg.set("scenario", scenario);
        if (seed >= 0) cfg.set("seed", std::to_string(seed));
        if (!out_dir.empty()) cfg.set("out_dir", out_dir);
        if (shots > 0) cfg.set("shots_override", std::to_string(shots));
        if (!format.empty()) cfg.set("format", format);
        if (threads >= 0) cfg.set("threads", std::to_string(threads));

        RunArtifact artifact;
        if (scenario == "detect") artifact = run_detection(cfg);
        else if (scenario == "rabi") artifact = run_rabi(cfg);
        else if (scenario == "branching") artifact = run_branching(cfg);
        else if (scenario == "hyperfine") artifact = run_hyperfine_scan(cfg);
        else artifact = run_ramsey(cfg);

        std::cout << "wrote " << artifact.files.size() << " files to "
                  << artifact.out_dir << "\n";
        for (const auto& [key, value] : artifact.derived) {
            std::cout << "  " << key << " = " << value << "\n";
        }
        return 0;
    } catch (const ConfigError& e) {
        std::cerr << "ybsim: [config-error] " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "ybsim: [runtime-error] " << e.what() << "\n";
        return 2;
    }
}

}  // namespace ybsim
