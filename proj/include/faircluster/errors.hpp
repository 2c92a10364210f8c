#pragma once

#include <stdexcept>
#include <string>

namespace faircluster {

// Argument outside the mathematical domain of an operation (k > |F|, delta >= 1, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Operation not supported for this kind of instance (e.g. k-means on an explicit metric).
class UnsupportedOperation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

// Numerical failure inside the LP solver, or a broken solver contract.
class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// A problem that has no feasible solution (fairness or lower bounds unsatisfiable).
class InfeasibleError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad experiment configuration or dataset.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Brute-force enumeration refused because the state space exceeds the guard.
class GuardExceeded : public std::runtime_error {
 public:
  GuardExceeded(const std::string& what, double estimate)
      : std::runtime_error(what), estimate_(estimate) {}
  double estimate() const { return estimate_; }

 private:
  double estimate_;
};

}  // namespace faircluster
