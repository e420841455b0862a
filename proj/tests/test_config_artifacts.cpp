#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "ybsim/artifacts.hpp"
#include "ybsim/config.hpp"
#include "ybsim/errors.hpp"

using namespace ybsim;

TEST_CASE("config parsing with sections, comments and lists") {
    const std::string text =
        "# experiment\n"
        "scenario = detect\n"
        "seed = 42\n"
        "\n"
        "[detection]\n"
        "window_s = 1e-3   ; trailing comment\n"
        "leak_channels = off\n"
        "[branching]\n"
        "powers_w = 1e-6, 2e-6, 4e-6\n";
    const Config cfg = Config::parse_string(text);
    CHECK(cfg.get_string("scenario") == "detect");
    CHECK(cfg.get_long("seed", 0) == 42);
    CHECK(cfg.get_double("detection.window_s", 0) == doctest::Approx(1e-3));
    CHECK(cfg.get_bool("detection.leak_channels", true) == false);
    const auto powers = cfg.get_double_list("branching.powers_w");
    REQUIRE(powers.size() == 3);
    CHECK(powers[1] == doctest::Approx(2e-6));

    CHECK_THROWS_AS(Config::parse_string("no equals sign\n"), ConfigError);
    CHECK_THROWS_AS(cfg.get_double("scenario", 0), ConfigError);
    CHECK_THROWS_AS(cfg.require_double("missing.key"), ConfigError);
}

TEST_CASE("canonical form and hash are stable") {
    Config a;
    a.set("b.key", "2");
    a.set("a.key", "1");
    Config b;
    b.set("a.key", "1");
    b.set("b.key", "2");
    CHECK(a.canonical() == b.canonical());
    CHECK(fnv1a_hex(a.canonical()) == fnv1a_hex(b.canonical()));
    // FNV-1a offset basis for the empty string.
    CHECK(fnv1a_hex("") == "cbf29ce484222325");
}

TEST_CASE("tables are written byte-identically") {
    const std::string dir = "/tmp/ybsim_test_artifacts";
    std::filesystem::remove_all(dir);

    Table table;
    table.name = "demo";
    table.columns = {"time_s", "counts"};
    table.rows = {{1e-6, 3.0}, {2e-6, 0.1234567890123456789}};
    Config cfg;
    cfg.set("seed", "7");

    auto read_file = [](const std::string& path) {
        std::ifstream in(path, std::ios::binary);
        std::ostringstream out;
        out << in.rdbuf();
        return out.str();
    };

    RunArtifact a1;
    a1.out_dir = dir + "/run1";
    write_table(a1, table, "csv", cfg, 7, 0.5);
    RunArtifact a2;
    a2.out_dir = dir + "/run2";
    write_table(a2, table, "csv", cfg, 7, 99.0);  // wall time not in table

    const std::string t1 = read_file(a1.files[0]);
    const std::string t2 = read_file(a2.files[0]);
    CHECK(t1 == t2);
    CHECK(t1.find("time_s,counts\n") == 0);
    CHECK(t1.back() == '\n');
    CHECK(t1.find("\r") == std::string::npos);

    // Metadata sidecar exists and carries the config hash.
    const std::string meta = read_file(a1.files[0] + ".meta.json");
    CHECK(meta.find(fnv1a_hex(cfg.canonical())) != std::string::npos);
    CHECK(meta.find("tool_version") != std::string::npos);

    RunArtifact a3;
    a3.out_dir = dir + "/run3";
    write_table(a3, table, "json", cfg, 7, 0.0);
    const std::string j = read_file(a3.files[0]);
    CHECK(j.find("\"columns\"") != std::string::npos);

    RunArtifact a4;
    a4.out_dir = dir + "/run4";
    write_resolved_config(a4, cfg);
    CHECK(a4.config_hash == fnv1a_hex(cfg.canonical()));
    CHECK(fnv1a_hex(read_file(a4.files[0])) == a4.config_hash);
}
