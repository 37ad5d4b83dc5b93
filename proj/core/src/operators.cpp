#include "seglab/operators.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>

#include "seglab/errors.hpp"

namespace seglab {

namespace {

using std::ptrdiff_t;

struct Strides {
  ptrdiff_t s[3];
  int nk;
};

Strides strides_of(const Grid& g) {
  Strides st{};
  st.s[0] = 1;
  st.s[1] = g.n;
  st.s[2] = g.dim == 3 ? ptrdiff_t(g.n) * g.n : 0;
  st.nk = g.dim == 3 ? g.n : 1;
  return st;
}

}  // namespace

GridField apply_operator(const CoefficientSpec& spec, const GridField& u) {
  const Grid& g = u.grid;
  if (spec.dim != g.dim) throw GeometryError("apply_operator: spec/grid dimension mismatch");
  GridField out = GridField::zeros(g);
  const int n = g.n, dim = g.dim;
  const double h = g.h;
  const Strides st = strides_of(g);
  const int k1 = dim == 3 ? n - 1 : 1;
  const int k0 = dim == 3 ? 1 : 0;

  for (int k = k0; k < k1; ++k) {
    for (int j = 1; j < n - 1; ++j) {
      for (int i = 1; i < n - 1; ++i) {
        const std::size_t idx = g.flatten(i, j, k);
        const Vec xc = g.node(i, j, k);
        double acc = 0.0;
        for (int d = 0; d < dim; ++d) {
          for (int side = -1; side <= 1; side += 2) {
            Vec xf = xc;
            xf[d] += 0.5 * side * h;
            const SymMatrix A = eval_matrix(spec, xf);
            const ptrdiff_t nb = ptrdiff_t(idx) + side * st.s[d];
            // face-normal derivative, oriented along +e_d on both faces
            double flux = A(d, d) *
                          (u.v[std::size_t(std::max<ptrdiff_t>(ptrdiff_t(idx), nb))] -
                           u.v[std::size_t(std::min<ptrdiff_t>(ptrdiff_t(idx), nb))]) /
                          h;
            for (int m = 0; m < dim; ++m) {
              if (m == d) continue;
              const double c_here =
                  (u.v[idx + std::size_t(st.s[m])] - u.v[idx - std::size_t(st.s[m])]) / (2.0 * h);
              const double c_nb = (u.v[std::size_t(nb + st.s[m])] -
                                   u.v[std::size_t(nb - st.s[m])]) /
                                  (2.0 * h);
              flux += A(d, m) * 0.5 * (c_here + c_nb);
            }
            acc += side * flux;
          }
        }
        out.v[idx] = -acc / h;
      }
    }
  }
  return out;
}

std::vector<GridField> gradient(const GridField& u) {
  const Grid& g = u.grid;
  const int n = g.n, dim = g.dim;
  const double h = g.h;
  const Strides st = strides_of(g);
  std::vector<GridField> grad(std::size_t(dim), GridField::zeros(g));

  for (int k = 0; k < st.nk; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = g.flatten(i, j, k);
        const int pos[3] = {i, j, k};
        for (int d = 0; d < dim; ++d) {
          const int p = pos[d];
          double v;
          if (p == 0)
            v = (u.v[idx + std::size_t(st.s[d])] - u.v[idx]) / h;
          else if (p == n - 1)
            v = (u.v[idx] - u.v[idx - std::size_t(st.s[d])]) / h;
          else
            v = (u.v[idx + std::size_t(st.s[d])] - u.v[idx - std::size_t(st.s[d])]) / (2.0 * h);
          grad[std::size_t(d)].v[idx] = v;
        }
      }
    }
  }
  return grad;
}

namespace {

// forward/backward/centered difference quotients with clamping on the faces
struct NodeDiffs {
  double fwd, bwd, ctr;
};

inline NodeDiffs diffs(const GridField& u, std::size_t idx, int p, int n, ptrdiff_t s, double h) {
  NodeDiffs d{};
  if (p == 0) {
    d.fwd = (u.v[idx + std::size_t(s)] - u.v[idx]) / h;
    d.bwd = d.fwd;
    d.ctr = d.fwd;
  } else if (p == n - 1) {
    d.bwd = (u.v[idx] - u.v[idx - std::size_t(s)]) / h;
    d.fwd = d.bwd;
    d.ctr = d.bwd;
  } else {
    d.fwd = (u.v[idx + std::size_t(s)] - u.v[idx]) / h;
    d.bwd = (u.v[idx] - u.v[idx - std::size_t(s)]) / h;
    d.ctr = (u.v[idx + std::size_t(s)] - u.v[idx - std::size_t(s)]) / (2.0 * h);
  }
  return d;
}

}  // namespace

GridField energy_density(const CoefficientSpec& spec, const GridField& u) {
  const Grid& g = u.grid;
  if (spec.dim != g.dim) throw GeometryError("energy_density: spec/grid dimension mismatch");
  GridField out = GridField::zeros(g);
  const int n = g.n, dim = g.dim;
  const double h = g.h;
  const Strides st = strides_of(g);

  for (int k = 0; k < st.nk; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = g.flatten(i, j, k);
        const Vec x = g.node(i, j, k);
        const SymMatrix A = eval_matrix(spec, x);
        const int pos[3] = {i, j, k};
        NodeDiffs d[3];
        for (int m = 0; m < dim; ++m) d[m] = diffs(u, idx, pos[m], n, st.s[m], h);
        double e = 0.0;
        for (int m = 0; m < dim; ++m)
          e += A(m, m) * 0.5 * (d[m].fwd * d[m].fwd + d[m].bwd * d[m].bwd);
        for (int a = 0; a < dim; ++a)
          for (int b = a + 1; b < dim; ++b) e += 2.0 * A(a, b) * d[a].ctr * d[b].ctr;
        out.v[idx] = e;
      }
    }
  }
  return out;
}

GridField grad_product_density(const GridField& u, int h_axis, int l_axis) {
  const Grid& g = u.grid;
  GridField out = GridField::zeros(g);
  const int n = g.n;
  const double h = g.h;
  const Strides st = strides_of(g);

  for (int k = 0; k < st.nk; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = g.flatten(i, j, k);
        const int pos[3] = {i, j, k};
        if (h_axis == l_axis) {
          const NodeDiffs d = diffs(u, idx, pos[h_axis], n, st.s[h_axis], h);
          out.v[idx] = 0.5 * (d.fwd * d.fwd + d.bwd * d.bwd);
        } else {
          const NodeDiffs da = diffs(u, idx, pos[h_axis], n, st.s[h_axis], h);
          const NodeDiffs db = diffs(u, idx, pos[l_axis], n, st.s[l_axis], h);
          out.v[idx] = da.ctr * db.ctr;
        }
      }
    }
  }
  return out;
}

Vec interp_gradient(const GridField& u, const Vec& p, double step) {
  const Grid& g = u.grid;
  const double L = g.box_half;
  if (step <= 0.0) step = g.h;
  Vec grad = Vec::zero(g.dim);
  for (int d = 0; d < g.dim; ++d) {
    Vec lo = p, hi = p;
    hi[d] = std::min(p[d] + step, L);
    lo[d] = std::max(p[d] - step, -L);
    grad[d] = (u.interp(hi) - u.interp(lo)) / (hi[d] - lo[d]);
  }
  return grad;
}

std::vector<double> sphere_trace(const GridField& u, const SphereQuadrature& q) {
  const Grid& g = u.grid;
  if (q.dim != g.dim) throw GeometryError("sphere_trace: dimension mismatch");
  if (q.r > g.box_half - g.h + 1e-12 * g.h)
    throw GeometryError("sphere_trace: sphere must stay one cell inside the grid box");
  std::vector<double> out(q.size());
  for (std::size_t i = 0; i < q.size(); ++i) out[i] = u.interp(q.nodes[i]);
  return out;
}

TangentialSplit tangential_split(const Vec& g, const Vec& y) {
  const double r = norm(y);
  if (r == 0.0) throw GeometryError("tangential_split: undefined at the origin");
  const Vec nu = (1.0 / r) * y;
  TangentialSplit s;
  s.normal = dot(g, nu);
  s.tangential = g - s.normal * nu;
  return s;
}

double surface_integral(const std::vector<double>& values, const SphereQuadrature& q) {
  if (values.size() != q.size()) throw GeometryError("surface_integral: size mismatch");
  long double acc = 0.0L;
  for (std::size_t i = 0; i < values.size(); ++i)
    acc += static_cast<long double>(values[i]) * q.weights[i];
  return double(acc);
}

double ball_cutoff(double dist, double r, double h) {
  const double t = std::clamp((r + h - dist) / (2.0 * h), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

namespace {

std::vector<double> radial_sums_impl(const GridField& f, const std::vector<double>& radii,
                                     bool fundamental) {
  const Grid& g = f.grid;
  if (radii.empty()) return {};
  for (std::size_t k = 0; k + 1 < radii.size(); ++k)
    if (radii[k] >= radii[k + 1]) throw GeometryError("radial sums: radii must be ascending");
  if (radii.front() <= 0.0) throw GeometryError("radial sums: radii must be positive");
  if (radii.back() > g.box_half - g.h + 1e-12 * g.h)
    throw GeometryError("radial sums: ball must fit one cell inside the grid box");

  const double h = g.h;
  const double cellw = std::pow(h, g.dim);
  std::vector<long double> full(radii.size() + 1, 0.0L);
  std::vector<long double> band(radii.size(), 0.0L);

  const int n = g.n;
  const int nk = g.dim == 3 ? n : 1;
  for (int k = 0; k < nk; ++k) {
    for (int j = 0; j < n; ++j) {
      for (int i = 0; i < n; ++i) {
        const std::size_t idx = g.flatten(i, j, k);
        const Vec x = g.node(i, j, k);
        const double s = norm(x);
        double w = cellw;
        if (fundamental && g.dim == 3) {
          if (s == 0.0) {
            // excised origin cell: equal-volume ball of one cell, exact weight
            const double req = h * std::cbrt(3.0 / (4.0 * M_PI));
            w = 2.0 * M_PI * req * req;
          } else {
            w = cellw / s;
          }
        }
        const double fv = f.v[idx] * w;
        if (fv == 0.0) continue;
        // radii with s <= r - h take full weight; |s - r| < h is the cutoff band
        const auto fullIt = std::lower_bound(radii.begin(), radii.end(), s + h);
        full[std::size_t(fullIt - radii.begin())] += fv;
        auto it = std::lower_bound(radii.begin(), radii.end(), s - h);
        for (; it != fullIt && *it < s + h; ++it) {
          const double chi = ball_cutoff(s, *it, h);
          if (chi > 0.0) band[std::size_t(it - radii.begin())] += fv * chi;
        }
      }
    }
  }

  // full[k] holds mass whose cutoff saturates first at radius k; accumulate
  std::vector<double> out(radii.size());
  long double run = 0.0L;
  for (std::size_t k = 0; k < radii.size(); ++k) {
    run += full[k];
    out[k] = double(run + band[k]);
  }
  return out;
}

}  // namespace

std::vector<double> radial_volume_sums(const GridField& f, const std::vector<double>& radii) {
  return radial_sums_impl(f, radii, false);
}

std::vector<double> radial_volume_sums_fundamental(const GridField& f,
                                                   const std::vector<double>& radii) {
  return radial_sums_impl(f, radii, true);
}

double volume_integral_ball(const GridField& f, double r) {
  return radial_volume_sums(f, {r})[0];
}

}  // namespace seglab
