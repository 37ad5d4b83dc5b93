#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "seglab/symmat.hpp"

namespace seglab {

// uniform node-centered grid on [-box_half, box_half]^dim; n odd so the origin
// is a node and h = 2 box_half / (n - 1)
struct Grid {
  int dim = 2;
  double box_half = 1.0;
  int n = 3;
  double h = 1.0;

  static Grid make(int dim, double box_half, int nodes_per_axis);
  // nodes_per_axis derived from spacing; GeometryError unless 2*box_half/h is
  // an even integer (within 1e-9), i.e. the origin lands on a node
  static Grid from_spacing(int dim, double box_half, double h);

  std::size_t node_count() const;
  // centered form keeps the origin node at exactly 0.0
  double coord(int i) const { return h * (i - (n - 1) / 2); }
  Vec node(int i, int j, int k = 0) const;
  std::size_t flatten(int i, int j, int k = 0) const;

  bool same_layout(const Grid& o) const;
};

struct GridField {
  Grid grid;
  std::vector<double> v;

  static GridField zeros(const Grid& g);
  template <class F>
  static GridField sample(const Grid& g, F&& f) {
    GridField out = zeros(g);
    const int n = g.n, nk = g.dim == 3 ? g.n : 1;
    std::size_t idx = 0;
    for (int k = 0; k < nk; ++k)
      for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) out.v[idx++] = f(g.node(i, j, k));
    return out;
  }

  double at(int i, int j, int k = 0) const { return v[grid.flatten(i, j, k)]; }
  double& at(int i, int j, int k = 0) { return v[grid.flatten(i, j, k)]; }

  // multilinear interpolation; GeometryError outside the closed box
  double interp(const Vec& p) const;

  double max_abs() const;
  double min_value() const;
};

}  // namespace seglab
