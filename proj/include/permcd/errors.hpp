#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace permcd {

/// A parameter outside its documented domain (dimension, range, normalization).
class InvalidParameter : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A computation whose result would be meaningless in floating point
/// (zero pivot, enumeration too large to be exact, ...).
class NumericalDegeneracy : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Rate estimation was asked of a trace that cannot support it.
class EstimationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Experiment configuration problem; `field` names the offending key.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(std::string field, const std::string& what)
      : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

}  // namespace permcd
