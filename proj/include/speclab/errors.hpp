#pragma once

#include <stdexcept>
#include <string>

namespace speclab {

// Invalid parameters, malformed configs, out-of-range tuning knobs.
struct ConfigError : std::invalid_argument {
  explicit ConfigError(const std::string& what) : std::invalid_argument(what) {}
};

// Requests outside what this build implements (e.g. unsupported manifold,
// harmonic order past the closed-form table).
struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& what) : std::runtime_error(what) {}
};

// Inputs outside an operation's mathematical domain (cut locus, non-positive
// data for a log-log fit, ...).
struct DomainError : std::domain_error {
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// An iterative solver ran out of iterations before reaching its tolerance.
struct ConvergenceError : std::runtime_error {
  ConvergenceError(const std::string& what, double best_residual)
      : std::runtime_error(what), best_residual(best_residual) {}
  double best_residual = 0.0;
};

// Spectral operations refuse graphs with more than one component.
struct DisconnectedGraphError : std::runtime_error {
  DisconnectedGraphError(const std::string& what, int components)
      : std::runtime_error(what), components(components) {}
  int components = 0;
};

// Extension evaluation at a point with no samples inside the bandwidth.
struct CoverageError : std::runtime_error {
  explicit CoverageError(const std::string& what) : std::runtime_error(what) {}
};

// Eigenvector alignment against a (numerically) empty or dependent basis.
struct DegenerateAlignmentError : std::runtime_error {
  explicit DegenerateAlignmentError(const std::string& what) : std::runtime_error(what) {}
};

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace speclab
