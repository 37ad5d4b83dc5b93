#pragma once

#include <string>
#include <vector>

#include "seglab/coefficients.hpp"
#include "seglab/grid.hpp"

namespace seglab {

// coupling parameters of the competitive system
struct SystemConfig {
  int l = 2;           // number of components
  double gamma = 1.0;  // interaction exponent, gamma >= 1
  double beta = 0.0;   // coupling strength, beta <= 0 for competition

  // subcritical coupling: gamma * dim / (gamma + 1) < 2
  void validate(int dim) const;
};

struct GridState {
  Grid grid;
  CoefficientSpec spec;
  SystemConfig sys;
  std::vector<GridField> u;
  // solver outputs and loaded solutions enforce u >= 0 and l >= 2; analytic
  // diagnostic states (harmonic oracles and similar) skip those two checks
  bool solution_like = false;

  static GridState solution(Grid g, CoefficientSpec spec, SystemConfig sys,
                            std::vector<GridField> fields);
  static GridState diagnostic(Grid g, CoefficientSpec spec, SystemConfig sys,
                              std::vector<GridField> fields);

  int l() const { return int(u.size()); }
};

// snapshot: <dir>/state.bin (fields concatenated, little-endian doubles) plus
// <dir>/state.json describing grid, spec, and system parameters
void save_state(const GridState&, const std::string& dir);
GridState load_state(const std::string& dir);

// deterministic CSV: %.17g doubles, '\n' rows
struct CsvWriter {
  explicit CsvWriter(const std::string& path);
  ~CsvWriter();
  CsvWriter(const CsvWriter&) = delete;
  CsvWriter& operator=(const CsvWriter&) = delete;
  void header(const std::vector<std::string>& names);
  void row(const std::vector<double>& values);

 private:
  void* f_ = nullptr;
};

std::string format_double(double v);  // %.17g

}  // namespace seglab
