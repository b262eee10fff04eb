#pragma once

#include <stdexcept>
#include <string>

namespace prodrm {

struct DomainError : std::domain_error {
  using std::domain_error::domain_error;
};

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Thrown when a series or quadrature cannot reach its tolerance inside its budget.
struct AccuracyError : std::runtime_error {
  double achieved;
  AccuracyError(const std::string& what, double achieved_bound)
      : std::runtime_error(what), achieved(achieved_bound) {}
};

struct SamplingError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InsufficientData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateData : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace prodrm
