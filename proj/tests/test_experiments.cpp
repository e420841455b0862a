#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ybsim/config.hpp"
#include "ybsim/errors.hpp"
#include "ybsim/experiments.hpp"

using namespace ybsim;

namespace {

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream out;
    out << in.rdbuf();
    return out.str();
}

}  // namespace

TEST_CASE("scenario config validation") {
    Config cfg;
    cfg.set("scenario", "nonsense");
    CHECK(!validate_scenario_config(cfg).empty());

    cfg.set("scenario", "rabi");
    cfg.set("rabi.shots_per_point", "0");
    bool found = false;
    for (const auto& v : validate_scenario_config(cfg)) {
        if (v.find("shots_per_point") != std::string::npos) found = true;
    }
    CHECK(found);

    Config bad;
    bad.set("scenario", "branching");
    bad.set("branching.powers_w", "2e-6,1e-6,3e-6");
    found = false;
    for (const auto& v : validate_scenario_config(bad)) {
        if (v.find("ascending") != std::string::npos) found = true;
    }
    CHECK(found);
}

TEST_CASE("optical pumping reaches |0> quickly at default powers") {
    Config cfg;
    const double p500 = simulate_optical_pumping(cfg, 500e-9);
    CHECK(p500 > 0.999);
    const double p100 = simulate_optical_pumping(cfg, 100e-9);
    CHECK(p100 < p500);  // monotone progress
}

TEST_CASE("detection artifact set and reproducibility") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_detect_a");
    cfg.set("detect.shots_dark", "400");
    cfg.set("detect.shots_bright", "300");
    cfg.set("threads", "1");
    const RunArtifact a = run_detection(cfg);

    bool has_dark = false, has_bright = false, has_fidelity = false;
    for (const auto& f : a.files) {
        if (f.find("hist_dark.csv") != std::string::npos) has_dark = true;
        if (f.find("hist_bright.csv") != std::string::npos) has_bright = true;
        if (f.find("fidelity.json") != std::string::npos) has_fidelity = true;
    }
    CHECK(has_dark);
    CHECK(has_bright);
    CHECK(has_fidelity);

    // Identical config and seed reproduce byte-identical tables, across
    // thread counts as well.
    Config cfg2 = cfg;
    cfg2.set("out_dir", "/tmp/ybsim_test_detect_b");
    cfg2.set("threads", "2");
    const RunArtifact b = run_detection(cfg2);
    CHECK(read_file(a.out_dir + "/hist_dark.csv") ==
          read_file(b.out_dir + "/hist_dark.csv"));
    CHECK(read_file(a.out_dir + "/hist_bright.csv") ==
          read_file(b.out_dir + "/hist_bright.csv"));

    // The stored resolved config re-hashes to the recorded hash.
    CHECK(fnv1a_hex(read_file(a.out_dir + "/resolved.cfg")) == a.config_hash);
    CHECK(a.config_hash == b.config_hash);
}

TEST_CASE("ideal conditions drive the fidelity to one") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_detect_ideal");
    cfg.set("detect.shots_dark", "2000");
    cfg.set("detect.shots_bright", "2000");
    cfg.set("detection.dark_rate_per_s", "0");
    cfg.set("detection.leak_channels", "off");
    cfg.set("detection.efficiency", "0.01");
    cfg.set("detection.mode", "poisson");
    const RunArtifact a = run_detection(cfg);
    CHECK(a.derived.at("fidelity_average") == 1.0);
}

TEST_CASE("seed changes the simulated data") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_detect_s1");
    cfg.set("detect.shots_dark", "500");
    cfg.set("detect.shots_bright", "200");
    cfg.set("detection.mode", "poisson");
    const RunArtifact a = run_detection(cfg);
    Config cfg2 = cfg;
    cfg2.set("out_dir", "/tmp/ybsim_test_detect_s2");
    cfg2.set("seed", "99");
    const RunArtifact b = run_detection(cfg2);
    CHECK(read_file(a.out_dir + "/hist_bright.csv") !=
          read_file(b.out_dir + "/hist_bright.csv"));
}

TEST_CASE("rabi pipeline recovers the configured pi time") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_rabi");
    cfg.set("rabi.points", "17");
    cfg.set("rabi.shots_per_point", "400");
    cfg.set("detection.mode", "ideal");
    const RunArtifact a = run_rabi(cfg);
    CHECK(a.derived.at("pi_time_s") == doctest::Approx(6e-6).epsilon(0.03));
}

TEST_CASE("rabi with noiseless detection saturates at the pi time") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_rabi_pi");
    cfg.set("rabi.points", "2");
    cfg.set("rabi.duration_max_s", "6e-6");  // grid = {0, pi time}
    cfg.set("rabi.shots_per_point", "300");
    cfg.set("detection.mode", "ideal");
    RunArtifact a;
    try {
        a = run_rabi(cfg);
        FAIL("expected the two-point scan to be rejected by the fitter");
    } catch (const std::exception&) {
        // A two-point scan cannot be fitted; the pipeline refuses it.
    }
}

TEST_CASE("branching pipeline in monte-carlo mode") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_branching_mc");
    cfg.set("branching.mode", "mc");
    cfg.set("branching.mc_reps", "400");
    cfg.set("branching.powers_w", "0.8e-6,1.6e-6,4.0e-6,8.0e-6");
    cfg.set("branching.write_traces", "off");
    cfg.set("threads", "2");
    const RunArtifact a = run_branching(cfg);
    // Modest statistics: just require the right order of magnitude and a
    // finite uncertainty.
    CHECK(a.derived.at("r_branch") == doctest::Approx(0.00501).epsilon(0.25));
    CHECK(a.derived.at("r_branch_err") > 0);

    // Byte-identical across thread counts (deterministic aggregation).
    Config cfg1 = cfg;
    cfg1.set("out_dir", "/tmp/ybsim_test_branching_mc1");
    cfg1.set("threads", "1");
    const RunArtifact b = run_branching(cfg1);
    CHECK(read_file(a.out_dir + "/decay_rates.csv") ==
          read_file(b.out_dir + "/decay_rates.csv"));
}

TEST_CASE("hyperfine scan recovers both splittings on a coarse grid") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_hyperfine");
    cfg.set("hyperfine.step_hz", "4e6");
    cfg.set("hyperfine.stage1_start_hz", "2.7e9");
    cfg.set("hyperfine.stage1_stop_hz", "5.6e9");
    cfg.set("hyperfine.stage2_start_hz", "2.8e9");
    cfg.set("hyperfine.stage2_stop_hz", "3.4e9");
    cfg.set("threads", "2");
    const RunArtifact a = run_hyperfine_scan(cfg);
    CHECK(std::fabs(a.derived.at("d3half_splitting_hz") - 2.2095e9) <= 8e6);
    CHECK(std::fabs(a.derived.at("d32_splitting_hz") - 0.86e9) <= 8e6);
}

TEST_CASE("hyperfine scan missing a resonance reports coverage") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_hyperfine_cov");
    cfg.set("hyperfine.step_hz", "4e6");
    cfg.set("hyperfine.stage1_start_hz", "2.7e9");
    cfg.set("hyperfine.stage1_stop_hz", "4.0e9");  // excludes the F'=1 peak
    CHECK_THROWS_AS(run_hyperfine_scan(cfg), ScanCoverageError);
}

TEST_CASE("ramsey pipeline at reduced statistics") {
    Config cfg;
    cfg.set("out_dir", "/tmp/ybsim_test_ramsey");
    cfg.set("ramsey.t_list_s", "0,1.0,2.0,3.0");
    cfg.set("ramsey.dt_points", "24");
    cfg.set("ramsey.shots_per_point", "400");
    cfg.set("threads", "2");
    const RunArtifact a = run_ramsey(cfg);
    CHECK(a.derived.at("amplitude_t0") == doctest::Approx(0.5).epsilon(0.12));
    CHECK(a.derived.at("fringe_frequency_hz") ==
          doctest::Approx(2430.0).epsilon(0.05));
    CHECK(a.derived.at("tau_s") == doctest::Approx(2.5).epsilon(0.3));
    CHECK(a.derived.at("single_ion_fringe_amplitude") < 0.05);
}
