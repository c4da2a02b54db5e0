#pragma once

#include <stdexcept>
#include <string>

namespace sfde {

// Error taxonomy maps onto CLI exit codes: configuration / domain errors
// exit with 2, coupling and blow-up failures with 3.

/// Invalid configuration (bad parameters, incompatible grids, unsupported options).
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A value outside an operation's mathematical domain (e.g. theta beyond [-tau, 0]).
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

/// Numerical blow-up during simulation; carries the step index where
/// non-finiteness (or |Y| > 1e12) was first detected.
class BlowUpError : public std::runtime_error {
 public:
  BlowUpError(long step, const std::string& what)
      : std::runtime_error(what), step_(step) {}
  long step() const { return step_; }

 private:
  long step_;
};

/// Two paths that were supposed to share a Brownian sample do not.
class CouplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace sfde
