#pragma once

#include <stdexcept>
#include <string>

namespace scout {

/// Invalid user configuration (CLI exit code 2).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Non-finite values, singular Jacobians, failed fixed-point solves (CLI exit code 3).
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scout
