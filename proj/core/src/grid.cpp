#include "seglab/grid.hpp"

#include <algorithm>
#include <cmath>

#include "seglab/errors.hpp"

namespace seglab {

Grid Grid::make(int dim, double box_half, int nodes_per_axis) {
  if (dim != 2 && dim != 3) throw GeometryError("grid: dim must be 2 or 3");
  if (box_half <= 0.0) throw GeometryError("grid: box_half must be positive");
  if (nodes_per_axis < 3 || nodes_per_axis % 2 == 0)
    throw GeometryError("grid: nodes_per_axis must be odd and >= 3");
  Grid g;
  g.dim = dim;
  g.box_half = box_half;
  g.n = nodes_per_axis;
  g.h = 2.0 * box_half / (nodes_per_axis - 1);
  return g;
}

Grid Grid::from_spacing(int dim, double box_half, double h) {
  if (h <= 0.0) throw GeometryError("grid: spacing must be positive");
  const double cells = 2.0 * box_half / h;
  const long rounded = std::lround(cells);
  if (std::abs(cells - double(rounded)) > 1e-9 || rounded % 2 != 0)
    throw GeometryError("grid: 2*box_half/h must be an even integer so the origin is a node");
  return make(dim, box_half, int(rounded) + 1);
}

std::size_t Grid::node_count() const {
  std::size_t c = std::size_t(n) * std::size_t(n);
  if (dim == 3) c *= std::size_t(n);
  return c;
}

Vec Grid::node(int i, int j, int k) const {
  Vec p = Vec::zero(dim);
  p[0] = coord(i);
  p[1] = coord(j);
  if (dim == 3) p[2] = coord(k);
  return p;
}

std::size_t Grid::flatten(int i, int j, int k) const {
  std::size_t idx = std::size_t(j) * std::size_t(n) + std::size_t(i);
  if (dim == 3) idx += std::size_t(k) * std::size_t(n) * std::size_t(n);
  return idx;
}

bool Grid::same_layout(const Grid& o) const {
  return dim == o.dim && n == o.n && std::abs(box_half - o.box_half) < 1e-15;
}

GridField GridField::zeros(const Grid& g) {
  GridField f;
  f.grid = g;
  f.v.assign(g.node_count(), 0.0);
  return f;
}

double GridField::interp(const Vec& p) const {
  const Grid& g = grid;
  const double L = g.box_half, h = g.h;
  std::array<int, 3> base{0, 0, 0};
  std::array<double, 3> frac{0.0, 0.0, 0.0};
  const int mid = (g.n - 1) / 2;
  for (int d = 0; d < g.dim; ++d) {
    if (p[d] < -L - 1e-12 * L || p[d] > L + 1e-12 * L)
      throw GeometryError("interp: point outside grid box");
    double t = std::clamp(p[d], -L, L) / h + mid;
    int b = int(std::floor(t));
    if (b < 0) b = 0;
    if (b >= g.n - 1) b = g.n - 2;
    base[static_cast<std::size_t>(d)] = b;
    frac[static_cast<std::size_t>(d)] = t - b;
  }
  const int bi = base[0], bj = base[1], bk = base[2];
  const double fi = frac[0], fj = frac[1], fk = frac[2];
  if (g.dim == 2) {
    const double c00 = at(bi, bj), c10 = at(bi + 1, bj);
    const double c01 = at(bi, bj + 1), c11 = at(bi + 1, bj + 1);
    return (1 - fi) * (1 - fj) * c00 + fi * (1 - fj) * c10 + (1 - fi) * fj * c01 + fi * fj * c11;
  }
  double acc = 0.0;
  for (int dk = 0; dk <= 1; ++dk)
    for (int dj = 0; dj <= 1; ++dj)
      for (int di = 0; di <= 1; ++di) {
        const double w = (di ? fi : 1 - fi) * (dj ? fj : 1 - fj) * (dk ? fk : 1 - fk);
        acc += w * at(bi + di, bj + dj, bk + dk);
      }
  return acc;
}

double GridField::max_abs() const {
  double m = 0.0;
  for (double x : v) m = std::max(m, std::abs(x));
  return m;
}

double GridField::min_value() const {
  double m = v.empty() ? 0.0 : v[0];
  for (double x : v) m = std::min(m, x);
  return m;
}

}  // namespace seglab
