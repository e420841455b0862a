#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace ybsim {

// Flat key-value configuration with INI-style sections; keys inside
// [section] are addressed as "section.key".  Unit suffixes are part of the
// key names (…_hz, …_w, …_s).
class Config {
  public:
    static Config parse_string(const std::string& text);
    static Config parse_file(const std::string& path);

    bool has(const std::string& key) const;
    std::string get_string(const std::string& key,
                           const std::string& fallback = "") const;
    double get_double(const std::string& key, double fallback) const;
    double require_double(const std::string& key) const;
    long get_long(const std::string& key, long fallback) const;
    bool get_bool(const std::string& key, bool fallback) const;
    // Comma-separated list of numbers.
    std::vector<double> get_double_list(const std::string& key) const;

    void set(const std::string& key, const std::string& value);

    // Sorted "key = value" lines; the canonical form is what gets hashed
    // and stored beside every artifact.
    std::string canonical() const;

    const std::map<std::string, std::string>& entries() const {
        return values_;
    }

  private:
    std::map<std::string, std::string> values_;
};

// FNV-1a 64-bit hash of a string, as fixed-width hex.
std::string fnv1a_hex(const std::string& text);

}  // namespace ybsim
