#pragma once

#include <stdexcept>
#include <string>

namespace ybsim {

// A physical or structural invariant was violated; the message names the
// offending field.
class ConstraintViolation : public std::invalid_argument {
  public:
    explicit ConstraintViolation(const std::string& msg)
        : std::invalid_argument(msg) {}
};

// Electric-dipole forbidden transition requested.
class ForbiddenTransition : public std::invalid_argument {
  public:
    explicit ForbiddenTransition(const std::string& msg)
        : std::invalid_argument(msg) {}
};

class InsufficientData : public std::runtime_error {
  public:
    explicit InsufficientData(const std::string& msg)
        : std::runtime_error(msg) {}
};

class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// A frequency scan did not cover a requested resonance.
class ScanCoverageError : public std::runtime_error {
  public:
    explicit ScanCoverageError(const std::string& msg)
        : std::runtime_error(msg) {}
};

class FitError : public std::runtime_error {
  public:
    explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ybsim
