#include <doctest.h>

#include <cmath>
#include <sstream>

#include "ybsim/atom.hpp"
#include "ybsim/detection.hpp"
#include "ybsim/rates.hpp"
#include "ybsim/trajectory.hpp"

using namespace ybsim;

namespace {

BeamWithModulators resonant_369(double s) {
    BeamWithModulators bm;
    bm.beam.wavelength = WavelengthClass::nm369;
    bm.beam.p_sat_w = 0.8e-6;
    bm.beam.power_w = s * bm.beam.p_sat_w;
    return bm;
}

std::string serialize_events(const std::vector<PhotonEvent>& events) {
    std::ostringstream out;
    events_to_binary(out, events);
    return out.str();
}

}  // namespace

TEST_CASE("no beams, no photons") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, {});
    Timeline timeline;
    timeline.intervals.push_back({1e-3, {}, {}, "dark"});
    const auto compiled = CompiledTimeline::compile(scheme, timeline, {});
    const int start = scheme.index_of(Term::S12, 0);
    const auto result = simulate_trajectory(scheme, compiled, 5, 0, start);
    CHECK(result.events.empty());
    CHECK(result.final_manifold == start);
    REQUIRE(result.occupations.size() == 1);
    CHECK(result.occupations[0].t0_s == 0.0);
    CHECK(result.occupations[0].t1_s == doctest::Approx(1e-3));
}

TEST_CASE("trajectories are deterministic in (seed, index)") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, {});
    Timeline timeline;
    timeline.intervals.push_back({20e-6, {resonant_369(2.0)}, {}, "bright"});
    const auto compiled = CompiledTimeline::compile(scheme, timeline, {});
    const int start = scheme.index_of(Term::S12, 0);

    const auto a = simulate_trajectory(scheme, compiled, 11, 3, start);
    const auto b = simulate_trajectory(scheme, compiled, 11, 3, start);
    CHECK(serialize_events(a.events) == serialize_events(b.events));
    CHECK(a.final_manifold == b.final_manifold);

    const auto c = simulate_trajectory(scheme, compiled, 11, 4, start);
    CHECK(serialize_events(a.events) != serialize_events(c.events));
}

TEST_CASE("occupations tile the timeline") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, {});
    Timeline timeline;
    timeline.intervals.push_back({5e-6, {resonant_369(1.0)}, {}, "a"});
    timeline.intervals.push_back({5e-6, {}, {}, "b"});
    const auto compiled = CompiledTimeline::compile(scheme, timeline, {});
    const auto result = simulate_trajectory(scheme, compiled, 2, 0,
                                            scheme.index_of(Term::S12, 0));
    REQUIRE(!result.occupations.empty());
    CHECK(result.occupations.front().t0_s == 0.0);
    CHECK(result.occupations.back().t1_s == doctest::Approx(10e-6));
    for (std::size_t i = 1; i < result.occupations.size(); ++i) {
        CHECK(result.occupations[i].t0_s ==
              doctest::Approx(result.occupations[i - 1].t1_s));
    }
    CHECK(result.occupations.back().manifold == result.final_manifold);
}

TEST_CASE("monte carlo populations track the rate equations") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb174}, {});
    Timeline timeline;
    const double window = 30e-6;
    timeline.intervals.push_back({window, {resonant_369(5.0)}, {}, "decay"});
    const auto compiled = CompiledTimeline::compile(scheme, timeline, {});
    const int start = scheme.index_of(Term::S12, 0);
    const int d32 = scheme.index_of(Term::D32, 0);

    const int n_traj = 2000;
    const int n_bins = 30;
    const double dt = window / n_bins;
    std::vector<long> in_d32(n_bins, 0);
    for (int k = 0; k < n_traj; ++k) {
        const auto result = simulate_trajectory(scheme, compiled, 321, k, start);
        std::size_t seg = 0;
        for (int bin = 0; bin < n_bins; ++bin) {
            const double t = (bin + 0.5) * dt;
            while (seg + 1 < result.occupations.size() &&
                   result.occupations[seg].t1_s < t) {
                ++seg;
            }
            if (result.occupations[seg].manifold == d32) ++in_d32[bin];
        }
    }

    const RateMatrix m = compiled.intervals().front().matrix;
    Eigen::VectorXd v = Eigen::VectorXd::Zero(m.dim());
    v[start] = 1.0;
    // Midpoint populations of the same bins.
    PopulationVector p = evolve_populations(m, PopulationVector{v}, 0.5 * dt);
    int worst_sigma_ok = true;
    for (int bin = 0; bin < n_bins; ++bin) {
        const double expect = p.p[d32];
        const double got = static_cast<double>(in_d32[bin]) / n_traj;
        const double sigma =
            std::sqrt(std::max(expect * (1 - expect), 1e-6) / n_traj);
        if (std::fabs(got - expect) > 4.0 * sigma) worst_sigma_ok = false;
        p = evolve_populations(m, p, dt);
    }
    CHECK(worst_sigma_ok);
}

TEST_CASE("detected photons are poissonian at the reduced rate") {
    PhysicalConstants c;
    c.r_branch = 0;  // closed cycling transition for a constant rate
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, c);
    RateOptions opt;
    opt.kappa_detect = 1.0 / 3.0;
    opt.far_detuned_weight = 0;

    // Detected (thinned) counts: mean = scattering rate x window x
    // efficiency.  The raw emission stream is antibunched; thinning at a
    // realistic collection efficiency restores Poisson statistics.
    const double rate =
        scattering_rate(0.25, c.gamma_p12_per_s, 1.0 / 3.0);  // s = 1
    DetectionConfig det;
    det.efficiency = 0.02;
    det.dark_rate_per_s = 0;
    const double lambda = 5.0;
    const double window = lambda / (rate * det.efficiency);
    det.window_s = window;
    Timeline timeline;
    timeline.intervals.push_back({window, {resonant_369(1.0)}, {}, "detect"});
    const auto compiled = CompiledTimeline::compile(scheme, timeline, opt);
    const int start = scheme.index_of(Term::S12, 1);

    const int shots = 20000;
    std::vector<long> histogram(15, 0);
    for (int k = 0; k < shots; ++k) {
        const auto result = simulate_trajectory(scheme, compiled, 777, k, start);
        const long n = detect_counts(result.events, scheme, det, 778, k);
        ++histogram[std::min<long>(n, 14)];
    }

    // Chi-square against the Poisson pmf, tail pooled at >= 14.
    double chi2 = 0;
    for (int k = 0; k < 15; ++k) {
        double prob;
        if (k < 14) {
            prob = std::exp(k * std::log(lambda) - lambda - std::lgamma(k + 1.0));
        } else {
            prob = 0;
            for (int j = 0; j < 14; ++j) {
                prob += std::exp(j * std::log(lambda) - lambda -
                                 std::lgamma(j + 1.0));
            }
            prob = 1.0 - prob;
        }
        const double expect = shots * prob;
        chi2 += (histogram[k] - expect) * (histogram[k] - expect) / expect;
    }
    CHECK(chi2 < 29.14);  // chi2_{0.99}, 14 dof
}

TEST_CASE("fused thinning equals detect_counts on the stored trajectory") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, {});
    Timeline timeline;
    timeline.intervals.push_back({50e-6, {resonant_369(1.0)}, {}, "detect"});
    RateOptions opt;
    opt.kappa_detect = 1.0 / 3.0;
    opt.far_detuned_weight = 0.18;
    const auto compiled = CompiledTimeline::compile(scheme, timeline, opt);
    DetectionConfig cfg;
    cfg.window_s = 50e-6;
    cfg.efficiency = 0.4;
    cfg.dark_rate_per_s = 150;

    for (std::uint64_t shot = 0; shot < 20; ++shot) {
        const auto result = simulate_trajectory(
            scheme, compiled, 5150, shot, scheme.index_of(Term::S12, 1));
        const long stored = detect_counts(result.events, scheme, cfg, 5150, shot);

        RngStream traj(5150, RngPurpose::trajectory, shot);
        RngStream det(5150, RngPurpose::detection, shot);
        long fused = 0;
        run_jump_process(compiled, traj, scheme.index_of(Term::S12, 1),
                         [&](double, const RateChannel& ch, int) {
                             if (ch.kind == RateChannel::Kind::spontaneous &&
                                 scheme.channels[ch.decay_channel]
                                         .emission_class ==
                                     EmissionClass::nm369 &&
                                 det.bernoulli(cfg.efficiency)) {
                                 ++fused;
                             }
                         });
        fused += det.poisson(cfg.dark_rate_per_s * cfg.window_s);
        CHECK(fused == stored);
    }
}

TEST_CASE("event records round-trip through csv and binary") {
    std::vector<PhotonEvent> events{{1.5e-6, 0}, {2.5e-6, 3}, {9.0e-6, 1}};
    std::ostringstream bin;
    events_to_binary(bin, events);
    std::istringstream in(bin.str());
    const auto back = events_from_binary(in);
    REQUIRE(back.size() == events.size());
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(back[i].time_s == events[i].time_s);
        CHECK(back[i].channel == events[i].channel);
    }

    std::ostringstream csv;
    events_to_csv(csv, events);
    CHECK(csv.str().find("time_s,channel") == 0);

    const auto bins = bin_events(events, 0.0, 4, 2.5e-6);
    CHECK(bins[0] == 1);  // 1.5 us
    CHECK(bins[1] == 1);  // 2.5 us
    CHECK(bins[3] == 1);  // 9.0 us
}

TEST_CASE("filter_events keeps only the requested class") {
    const LevelScheme scheme = build_level_scheme({Isotope::Yb171}, {});
    std::vector<PhotonEvent> events;
    for (std::size_t i = 0; i < scheme.channels.size(); ++i) {
        events.push_back({1e-6 * (i + 1), static_cast<int>(i)});
    }
    const auto uv = filter_events(events, scheme, EmissionClass::nm369);
    for (const auto& ev : uv) {
        CHECK(scheme.channels[ev.channel].emission_class ==
              EmissionClass::nm369);
    }
    CHECK(uv.size() < events.size());
    CHECK(!uv.empty());
}
