#pragma once

#include <stdexcept>
#include <string>

namespace nlaid {

/// Malformed arguments or data that violate an operation's preconditions.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Configuration values that are well-formed but cannot be satisfied
/// (unknown keys, infeasible quotas, impossible incident placement).
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace nlaid
