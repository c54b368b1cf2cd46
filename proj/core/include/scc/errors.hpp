#pragma once

#include <stdexcept>
#include <string>

namespace scc {

/// Argument outside the mathematical domain of an operation (log of a
/// nonpositive distance, geometric mean of a nonpositive sample, ...).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Inputs whose shapes or sizes disagree with each other.
class ContractError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A factorization or solve that could not be carried out in floating point.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Problem dimensions that make a construction impossible (e.g. zero-forcing
/// with fewer receive antennas than streams).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Malformed configuration file, unknown key, invalid sweep parameter.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace scc
