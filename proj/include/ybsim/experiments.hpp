#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ybsim/artifacts.hpp"
#include "ybsim/atom.hpp"
#include "ybsim/config.hpp"
#include "ybsim/detection.hpp"
#include "ybsim/fields.hpp"
#include "ybsim/rates.hpp"

namespace ybsim {

// Scenario ids accepted by the CLI and the config `scenario` key.
const std::vector<std::string>& scenario_ids();

// Structural checks on a scenario config; returns human-readable violations
// (empty = valid).  Runners call this before any simulation.
std::vector<std::string> validate_scenario_config(const Config& cfg);

// The five experiment pipelines.  Each resolves defaults into the returned
// artifact's resolved.cfg, simulates, fits, and writes plot-ready tables
// with JSON metadata sidecars.
RunArtifact run_detection(const Config& cfg);
RunArtifact run_rabi(const Config& cfg);
RunArtifact run_branching(const Config& cfg);
RunArtifact run_hyperfine_scan(const Config& cfg);
RunArtifact run_ramsey(const Config& cfg);

// Rate-equation optical pumping with the 2.1 GHz sideband channel: returns
// the |0> population after `duration_s` of pumping from |1>, at the config's
// (or default) pump powers.
double simulate_optical_pumping(const Config& cfg, double duration_s);

// Shared building blocks, exposed for tests and the acceptance suite.
PhysicalConstants constants_from_config(const Config& cfg);
MagneticEnvironment environment_from_config(const Config& cfg);
LevelScheme scheme_from_config(const Config& cfg);

// Detection-interval beams (369 nm detect + 935 nm repump with its
// 3.07 GHz sideband) at the config's powers.
std::vector<BeamWithModulators> detection_beams(const Config& cfg);

// Pump-interval beams: detect beam with the 2.1 GHz EOM switched on, plus
// the 935 nm repump.
std::vector<BeamWithModulators> pump_beams(const Config& cfg);

int cli_main(int argc, char** argv);

}  // namespace ybsim
