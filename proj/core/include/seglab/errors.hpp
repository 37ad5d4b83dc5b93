#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace seglab {

// config / schema problems; CLI maps these to exit code 2
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// geometry or precondition violations (ball leaves the grid, evaluation at a
// singular point, degenerate functional input); CLI exit code 3
struct GeometryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// eigenvalue-related failure; carries the offending eigenvalue
struct SpectralError : std::runtime_error {
  double eigenvalue;
  SpectralError(const std::string& msg, double lam)
      : std::runtime_error(msg + " (eigenvalue " + std::to_string(lam) + ")"),
        eigenvalue(lam) {}
};

// iteration failed to reach tolerance; carries the residual history; CLI exit code 4
struct SolveError : std::runtime_error {
  std::vector<double> residual_history;
  SolveError(const std::string& msg, std::vector<double> hist)
      : std::runtime_error(msg), residual_history(std::move(hist)) {}
};

}  // namespace seglab
