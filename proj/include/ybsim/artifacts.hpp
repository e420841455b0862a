#pragma once

#include <map>
#include <string>
#include <vector>

#include "ybsim/config.hpp"

namespace ybsim {

inline constexpr const char* kToolVersion = "ybsim 0.1.0";

// Plot-ready output table: unit-suffixed column names, one header row.
struct Table {
    std::string name;  // file stem
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;
};

struct RunArtifact {
    std::string out_dir;
    std::vector<std::string> files;
    std::map<std::string, double> derived;
    std::string config_hash;
};

// Writes the table in the requested format ("csv" or "json") plus a JSON
// metadata sidecar (<name>.meta.json) carrying the config hash, seed, tool
// version and wall time.  Returns the table path.
std::string write_table(RunArtifact& artifact, const Table& table,
                        const std::string& format,
                        const Config& resolved_config, std::uint64_t seed,
                        double wall_time_s);

// Raw text artifact (reports, resolved config, fit summaries).
std::string write_text(RunArtifact& artifact, const std::string& name,
                       const std::string& content);

// Stores the resolved config and records its hash in the artifact.
void write_resolved_config(RunArtifact& artifact, const Config& resolved);

void ensure_directory(const std::string& path);

// Canonical float formatting used in every table (%.17g, '.' decimal
// separator, LF endings) so identical runs are byte identical.
std::string format_double(double v);

}  // namespace ybsim
