#include "ybsim/artifacts.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "ybsim/errors.hpp"

namespace ybsim {

void ensure_directory(const std::string& path) {
    std::error_code ec;
    std::filesystem::create_directories(path, ec);
    if (ec) throw ConfigError("cannot create directory " + path);
}

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
}

namespace {

void write_metadata(const std::string& table_path, const Config& resolved,
                    std::uint64_t seed, double wall_time_s) {
    nlohmann::json meta;
    meta["config_hash"] = fnv1a_hex(resolved.canonical());
    meta["seed"] = seed;
    meta["tool_version"] = kToolVersion;
    meta["wall_time_s"] = wall_time_s;
    std::ofstream out(table_path + ".meta.json", std::ios::binary);
    out << meta.dump(2) << "\n";
}

}  // namespace

std::string write_table(RunArtifact& artifact, const Table& table,
                        const std::string& format,
                        const Config& resolved_config, std::uint64_t seed,
                        double wall_time_s) {
    ensure_directory(artifact.out_dir);
    const bool json_mode = format == "json";
    const std::string path = artifact.out_dir + "/" + table.name +
                             (json_mode ? ".json" : ".csv");
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    if (json_mode) {
        nlohmann::json doc;
        doc["columns"] = table.columns;
        auto& rows = doc["rows"] = nlohmann::json::array();
        for (const auto& row : table.rows) rows.push_back(row);
        out << doc.dump(2) << "\n";
    } else {
        for (std::size_t i = 0; i < table.columns.size(); ++i) {
            out << (i ? "," : "") << table.columns[i];
        }
        out << "\n";
        for (const auto& row : table.rows) {
            for (std::size_t i = 0; i < row.size(); ++i) {
                out << (i ? "," : "") << format_double(row[i]);
            }
            out << "\n";
        }
    }
    out.close();
    write_metadata(path, resolved_config, seed, wall_time_s);
    artifact.files.push_back(path);
    return path;
}

std::string write_text(RunArtifact& artifact, const std::string& name,
                       const std::string& content) {
    ensure_directory(artifact.out_dir);
    const std::string path = artifact.out_dir + "/" + name;
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write " + path);
    out << content;
    artifact.files.push_back(path);
    return path;
}

void write_resolved_config(RunArtifact& artifact, const Config& resolved) {
    // Run-environment keys do not affect the simulated data and stay out of
    // the experiment definition that gets hashed.
    Config experiment;
    for (const auto& [key, value] : resolved.entries()) {
        if (key == "out_dir" || key == "threads") continue;
        experiment.set(key, value);
    }
    const std::string canonical = experiment.canonical();
    artifact.config_hash = fnv1a_hex(canonical);
    write_text(artifact, "resolved.cfg", canonical);
}

}  // namespace ybsim
