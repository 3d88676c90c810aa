#pragma once

#include <stdexcept>
#include <string>

namespace istsim {

// Invalid sizes, indices or configuration values.
class ParameterError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Coincident or antipodal vectors where a well-defined direction is needed.
class DegeneracyError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Precondition of a physical map violated (e.g. mechanism inputs).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// No exact setting satisfies the rationality constraint inside the
// resolution cap. Signals a misconfigured (N, delta), not physics.
class InfeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace istsim
