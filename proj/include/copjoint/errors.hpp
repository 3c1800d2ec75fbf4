#pragma once

#include <stdexcept>
#include <string>

namespace copjoint {

// Parameter outside the admissible domain of a family or function.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

// Raised by derivative routines when u or v sits on {0, 1}; the likelihood
// layer clamps before calling so this only surfaces on direct use.
class BoundaryError : public DomainError {
 public:
  using DomainError::DomainError;
};

class QuadratureError : public std::runtime_error {
 public:
  QuadratureError(const std::string& what, double achieved)
      : std::runtime_error(what + " (achieved error estimate " + std::to_string(achieved) + ")"),
        achieved_(achieved) {}
  double achieved() const { return achieved_; }

 private:
  double achieved_;
};

// Malformed dataset: missing columns, non-binary responses, degenerate classes.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed scenario or model configuration.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace copjoint
