#include "seglab/blowup.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "seglab/almgren.hpp"
#include "seglab/errors.hpp"
#include "seglab/parallel.hpp"

namespace seglab {

void Cutoff::validate() const {
  if (!(r_inner > 0.0) || !(r_outer > r_inner))
    throw ConfigError("cutoff: needs 0 < r_inner < r_outer");
}

double Cutoff::value(double t) const {
  if (t <= r_inner) return 1.0;
  if (t >= r_outer) return 0.0;
  const double s = (t - r_inner) / (r_outer - r_inner);
  return 1.0 - s * s * s * (10.0 + s * (-15.0 + 6.0 * s));
}

double Cutoff::slope(double t) const {
  if (t <= r_inner || t >= r_outer) return 0.0;
  const double s = (t - r_inner) / (r_outer - r_inner);
  return -30.0 * s * s * (1.0 - s) * (1.0 - s) / (r_outer - r_inner);
}

Vec Cutoff::grad(const Vec& p) const {
  const double t = norm(p);
  const double sl = slope(t);
  if (sl == 0.0) return Vec::zero(p.n);
  return (sl / t) * p;
}

namespace {

std::uint64_t splitmix64(std::uint64_t& s) {
  s += 0x9e3779b97f4a7c15ull;
  std::uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

// centered difference of u at an interior node
Vec node_gradient(const GridField& u, int i, int j, int k) {
  const double inv2h = 0.5 / u.grid.h;
  Vec g = Vec::zero(u.grid.dim);
  g[0] = (u.at(i + 1, j, k) - u.at(i - 1, j, k)) * inv2h;
  g[1] = (u.at(i, j + 1, k) - u.at(i, j - 1, k)) * inv2h;
  if (u.grid.dim == 3) g[2] = (u.at(i, j, k + 1) - u.at(i, j, k - 1)) * inv2h;
  return g;
}

struct BallNode {
  int i, j, k;
  Vec x;
};

std::vector<BallNode> ball_nodes(const Grid& g, double radius) {
  std::vector<BallNode> out;
  const int nk = g.dim == 3 ? g.n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const Vec x = g.node(i, j, k);
        if (norm(x) <= radius) out.push_back({i, j, k, x});
      }
  return out;
}

Vec cross3(const Vec& a, const Vec& b) {
  return Vec::of(a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2],
                 a[0] * b[1] - a[1] * b[0]);
}

}  // namespace

LipschitzReport lipschitz_seminorm(const GridState& st, double K_radius, const Cutoff& cutoff) {
  cutoff.validate();
  const Grid& g = st.grid;
  if (!(K_radius > 0.0)) throw GeometryError("lipschitz_seminorm: K_radius must be positive");
  if (K_radius + g.h > g.box_half + 1e-12)
    throw GeometryError("lipschitz_seminorm: stencil leaves the grid, need K + h <= box");

  LipschitzReport rep;
  rep.argmax = Vec::zero(g.dim);
  const std::vector<BallNode> nodes = ball_nodes(g, K_radius);
  for (int c = 0; c < st.l(); ++c) {
    const GridField& u = st.u[std::size_t(c)];
    for (const BallNode& b : nodes) {
      const Vec du = node_gradient(u, b.i, b.j, b.k);
      const double uv = u.at(b.i, b.j, b.k);
      const Vec gcut = cutoff.grad(b.x);
      const double eta = cutoff.at(b.x);
      Vec full = Vec::zero(g.dim);
      for (int d = 0; d < g.dim; ++d) full[d] = uv * gcut[d] + eta * du[d];
      const double nf = norm(full);
      rep.plain = std::max(rep.plain, norm(du));
      if (nf > rep.L) {
        rep.L = nf;
        rep.argmax = b.x;
        rep.comp = c;
      }
    }
  }
  if (st.l() > 1) {
    // locate the argmax node again to read the other components there
    const int ci = int(std::lround(rep.argmax[0] / g.h)) + (g.n - 1) / 2;
    const int cj = int(std::lround(rep.argmax[1] / g.h)) + (g.n - 1) / 2;
    const int ck = g.dim == 3 ? int(std::lround(rep.argmax[2] / g.h)) + (g.n - 1) / 2 : 0;
    const double uc = st.u[std::size_t(rep.comp)].at(ci, cj, ck);
    double gap = 1e300;
    for (int j = 0; j < st.l(); ++j)
      if (j != rep.comp) gap = std::min(gap, std::abs(uc - st.u[std::size_t(j)].at(ci, cj, ck)));
    rep.interface_gap = gap;
  }
  return rep;
}

double holder_seminorm(const GridState& st, double K_radius, double alpha, std::uint64_t seed,
                       std::size_t max_pairs) {
  if (!(alpha > 0.0) || !(alpha < 1.0))
    throw ConfigError("holder_seminorm: alpha must lie in ]0, 1[");
  const Grid& g = st.grid;
  if (!(K_radius > 0.0) || K_radius > g.box_half + 1e-12)
    throw GeometryError("holder_seminorm: ball leaves the grid");

  const std::vector<BallNode> nodes = ball_nodes(g, K_radius);
  const std::size_t m = nodes.size();
  if (m < 2) throw GeometryError("holder_seminorm: fewer than two nodes in the ball");

  double best = 0.0;
  auto score_pair = [&](std::size_t a, std::size_t b) {
    const double d = norm(nodes[a].x - nodes[b].x);
    if (d == 0.0) return;
    const double da = std::pow(d, alpha);
    for (int c = 0; c < st.l(); ++c) {
      const GridField& u = st.u[std::size_t(c)];
      const double diff =
          std::abs(u.at(nodes[a].i, nodes[a].j, nodes[a].k) - u.at(nodes[b].i, nodes[b].j, nodes[b].k));
      best = std::max(best, diff / da);
    }
  };

  const std::size_t total = m * (m - 1) / 2;
  if (total <= max_pairs) {
    for (std::size_t a = 0; a + 1 < m; ++a)
      for (std::size_t b = a + 1; b < m; ++b) score_pair(a, b);
  } else {
    std::uint64_t rng = seed;
    for (std::size_t t = 0; t < max_pairs; ++t) {
      std::size_t a = std::size_t(splitmix64(rng) % m);
      std::size_t b = std::size_t(splitmix64(rng) % m);
      if (a == b) b = (b + 1) % m;
      score_pair(a, b);
    }
  }
  return best;
}

GridField resample_affine(const GridField& u, const Grid& grid_to, const Vec& x0,
                          const SymMatrix& S) {
  const int dim = u.grid.dim;
  if (grid_to.dim != dim || x0.n != dim || S.n != dim)
    throw GeometryError("resample_affine: dimension mismatch");

  // the coordinatewise extrema of an affine image of a box sit at corners
  const double bsrc = u.grid.box_half;
  for (int mask = 0; mask < (1 << dim); ++mask) {
    Vec corner = Vec::zero(dim);
    for (int d = 0; d < dim; ++d)
      corner[d] = (mask >> d) & 1 ? grid_to.box_half : -grid_to.box_half;
    const Vec p = x0 + matvec(S, corner);
    for (int d = 0; d < dim; ++d)
      if (std::abs(p[d]) > bsrc + 1e-12)
        throw GeometryError("resample_affine: image escapes the source box");
  }

  GridField out = GridField::zeros(grid_to);
  const int n = grid_to.n, nk = dim == 3 ? grid_to.n : 1;
  parallel_for(std::size_t(nk) * std::size_t(n) * std::size_t(n), [&](std::size_t idx) {
    const int i = int(idx % std::size_t(n));
    const int j = int((idx / std::size_t(n)) % std::size_t(n));
    const int k = int(idx / (std::size_t(n) * std::size_t(n)));
    Vec p = x0 + matvec(S, grid_to.node(i, j, k));
    // the corner check bounds any overshoot by rounding noise
    for (int d = 0; d < dim; ++d) p[d] = std::clamp(p[d], -bsrc, bsrc);
    out.v[idx] = u.interp(p);
  });
  return out;
}

double interp_error_estimate(const GridField& u) {
  const Grid& g = u.grid;
  const int nk = g.dim == 3 ? g.n : 1;
  double worst = 0.0;
  for (int k = g.dim == 3 ? 1 : 0; k < (g.dim == 3 ? nk - 1 : 1); ++k)
    for (int j = 1; j < g.n - 1; ++j)
      for (int i = 1; i < g.n - 1; ++i) {
        double s = std::abs(u.at(i + 1, j, k) - 2.0 * u.at(i, j, k) + u.at(i - 1, j, k)) +
                   std::abs(u.at(i, j + 1, k) - 2.0 * u.at(i, j, k) + u.at(i, j - 1, k));
        if (g.dim == 3)
          s += std::abs(u.at(i, j, k + 1) - 2.0 * u.at(i, j, k) + u.at(i, j, k - 1));
        worst = std::max(worst, s);
      }
  return 0.125 * worst;
}

GridState straighten(const GridState& st, const Vec& x0, double box_half_new) {
  const Grid& g = st.grid;
  if (st.spec.framed) throw GeometryError("straighten: input already carries a frame");
  if (st.spec.lift_2d) throw GeometryError("straighten: lifted input not supported");
  if (x0.n != g.dim) throw GeometryError("straighten: center dimension mismatch");
  for (int d = 0; d < g.dim; ++d)
    if (std::abs(x0[d]) >= g.box_half) throw GeometryError("straighten: center must be interior");
  if (box_half_new < 0.0) throw GeometryError("straighten: negative box");

  bool at_origin = true;
  for (int d = 0; d < g.dim; ++d) at_origin = at_origin && x0[d] == 0.0;
  if (st.spec.matrix_family == MatrixFamily::identity && at_origin &&
      (box_half_new == 0.0 || box_half_new == g.box_half))
    return st;

  const SymMatrix S = matrix_sqrt(eval_matrix(st.spec, x0));
  const SymMatrix Sinv = matrix_inverse(S);

  double b = box_half_new;
  if (b == 0.0) {
    b = 1e300;
    for (int d = 0; d < g.dim; ++d) {
      double rowsum = 0.0;
      for (int m = 0; m < g.dim; ++m) rowsum += std::abs(S(d, m));
      b = std::min(b, (g.box_half - std::abs(x0[d])) / rowsum);
    }
  }
  if (!(b > 0.0)) throw GeometryError("straighten: image box degenerates");

  const Grid g_new = Grid::make(g.dim, b, g.n);
  std::vector<GridField> fields;
  fields.reserve(st.u.size());
  for (const GridField& u : st.u) fields.push_back(resample_affine(u, g_new, x0, S));

  CoefficientSpec sp = st.spec;
  sp.framed = true;
  sp.frame_center = x0;
  sp.frame_scale = 1.0;
  sp.frame_S = S;
  sp.frame_Sinv = Sinv;
  sp.frame_f_scale = 1.0;
  sp.frame_s_scale = 1.0;
  sp.box_half = b;

  return st.solution_like ? GridState::solution(g_new, sp, st.sys, std::move(fields))
                          : GridState::diagnostic(g_new, sp, st.sys, std::move(fields));
}

BlowupFrame blowup_scale(const GridState& st, const BlowupParams& params) {
  params.cutoff.validate();
  const Grid& g = st.grid;
  if (st.spec.lift_2d) throw GeometryError("blowup_scale: lifted input not supported");
  if (params.x0.n != g.dim) throw GeometryError("blowup_scale: center dimension mismatch");
  if (params.comp < 0 || params.comp >= st.l())
    throw GeometryError("blowup_scale: component index out of range");
  if (!(params.L > 0.0)) throw GeometryError("blowup_scale: degenerate frame, L must be positive");
  if (st.spec.framed) {
    const Vec gap = st.spec.frame_center - params.x0;
    for (int d = 0; d < g.dim; ++d)
      if (std::abs(gap[d]) > 1e-12)
        throw GeometryError("blowup_scale: params center differs from the input frame");
  } else {
    for (int d = 0; d < g.dim; ++d)
      if (params.x0[d] != 0.0)
        throw GeometryError("blowup_scale: unframed input requires the origin center");
  }

  const double eta0 = params.cutoff.at(params.x0);
  if (!(eta0 > 0.0))
    throw GeometryError("blowup_scale: degenerate frame, cutoff vanishes at the center");

  const int c = (g.n - 1) / 2, ck = g.dim == 3 ? c : 0;
  double sum0 = 0.0;
  for (const GridField& u : st.u) sum0 += u.at(c, c, ck);
  const double r_n = eta0 * sum0 / params.L;
  if (!(r_n > 0.0)) throw GeometryError("blowup_scale: degenerate frame, zoom radius vanishes");

  const double sigma = eta0 / (params.L * r_n);
  const Grid g_new = Grid::make(g.dim, g.box_half / r_n, g.n);
  std::vector<GridField> fields;
  fields.reserve(st.u.size());
  for (const GridField& u : st.u) {
    GridField f = GridField::zeros(g_new);
    for (std::size_t idx = 0; idx < f.v.size(); ++idx) f.v[idx] = sigma * u.v[idx];
    fields.push_back(std::move(f));
  }

  CoefficientSpec sp = st.spec;
  if (!sp.framed) {
    sp.framed = true;
    sp.frame_center = Vec::zero(g.dim);
    sp.frame_scale = 1.0;
    sp.frame_S = SymMatrix::identity(g.dim);
    sp.frame_Sinv = SymMatrix::identity(g.dim);
    sp.frame_f_scale = 1.0;
    sp.frame_s_scale = 1.0;
  }
  sp.frame_scale *= r_n;
  sp.frame_f_scale *= r_n * eta0 / params.L;
  sp.frame_s_scale *= params.L * r_n / eta0;
  sp.box_half = g_new.box_half;

  SystemConfig sys = st.sys;
  const double gam = sys.gamma;
  const double M =
      sys.beta * std::pow(params.L / eta0, 2.0 * gam) * std::pow(r_n, 2.0 * gam + 2.0);
  sys.beta = M;

  BlowupFrame fr;
  fr.x0 = params.x0;
  fr.L = params.L;
  fr.eta0 = eta0;
  fr.r_scale = r_n;
  fr.M_comp = M;
  double v0 = 0.0;
  for (const GridField& f : fields) v0 += f.at(c, c, ck);
  fr.norm_gap = std::abs(v0 - 1.0);
  fr.matrix_gap = spectral_norm(eval_matrix(sp, Vec::zero(g.dim)) - SymMatrix::identity(g.dim));

  // audit fields w_i = eta(q)/eta0 * v_i on the zoomed lattice
  std::vector<GridField> w;
  w.reserve(fields.size());
  for (const GridField& f : fields) {
    GridField wf = GridField::zeros(g_new);
    const int nk = g.dim == 3 ? g_new.n : 1;
    std::size_t idx = 0;
    for (int kk = 0; kk < nk; ++kk)
      for (int jj = 0; jj < g_new.n; ++jj)
        for (int ii = 0; ii < g_new.n; ++ii) {
          const Vec q = sp.frame_point(g_new.node(ii, jj, kk));
          wf.v[idx] = params.cutoff.at(q) / eta0 * f.v[idx];
          ++idx;
        }
    w.push_back(std::move(wf));
  }
  const std::vector<BallNode> audit = ball_nodes(g_new, 0.45 * g_new.box_half);
  for (const GridField& wf : w)
    for (const BallNode& b : audit)
      fr.vbar_grad_max = std::max(fr.vbar_grad_max, norm(node_gradient(wf, b.i, b.j, b.k)));
  fr.vbar_grad_origin = norm(node_gradient(w[std::size_t(params.comp)], c, c, ck));

  fr.state = st.solution_like && st.l() >= 2
                 ? GridState::solution(g_new, sp, sys, std::move(fields))
                 : GridState::diagnostic(g_new, sp, sys, std::move(fields));
  return fr;
}

SegregationReport segregation_metrics(const GridState& st, double K_radius) {
  const Grid& g = st.grid;
  if (!(K_radius > 0.0) || K_radius > g.box_half + 1e-12)
    throw GeometryError("segregation_metrics: ball leaves the grid");

  const int l = st.l();
  SegregationReport rep;
  rep.l = l;
  rep.sup_overlap.assign(std::size_t(l) * std::size_t(l), 0.0);
  rep.interaction.assign(std::size_t(l) * std::size_t(l), 0.0);

  const double p = st.sys.gamma + 1.0;
  const double cell = std::pow(g.h, g.dim);
  const double babs = std::abs(st.sys.beta);
  for (const BallNode& b : ball_nodes(g, K_radius)) {
    const double a = eval_weight(st.spec, b.x);
    for (int i = 0; i < l; ++i) {
      const double ui = st.u[std::size_t(i)].at(b.i, b.j, b.k);
      for (int j = i + 1; j < l; ++j) {
        const double uj = st.u[std::size_t(j)].at(b.i, b.j, b.k);
        const std::size_t ij = std::size_t(i) * std::size_t(l) + std::size_t(j);
        const std::size_t ji = std::size_t(j) * std::size_t(l) + std::size_t(i);
        const double ov = std::abs(ui * uj);
        rep.sup_overlap[ij] = std::max(rep.sup_overlap[ij], ov);
        rep.sup_overlap[ji] = rep.sup_overlap[ij];
        const double it = babs * a * std::pow(std::abs(ui), p) * std::pow(std::abs(uj), p) * cell;
        rep.interaction[ij] += it;
        rep.interaction[ji] += it;
      }
    }
  }
  for (int i = 0; i < l; ++i)
    for (int j = 0; j < l; ++j)
      if (i != j) {
        rep.max_overlap =
            std::max(rep.max_overlap, rep.sup_overlap[std::size_t(i) * std::size_t(l) + std::size_t(j)]);
        rep.max_interaction = std::max(
            rep.max_interaction, rep.interaction[std::size_t(i) * std::size_t(l) + std::size_t(j)]);
      }
  return rep;
}

GridState blowdown_scale(const GridState& st, double rho) {
  const Grid& g = st.grid;
  if (st.spec.lift_2d) throw GeometryError("blowdown_scale: lifted input not supported");
  if (!(rho > 0.0)) throw GeometryError("blowdown_scale: rho must be positive");
  if (rho + g.h > g.box_half + 1e-12)
    throw GeometryError("blowdown_scale: height sphere leaves the grid, need rho + h <= box");

  double H = 0.0;
  for (int i = 0; i < st.l(); ++i) H += compute_H(st, i, rho);
  if (!(H > 1e-280)) throw GeometryError("blowdown_scale: degenerate height function");

  const double sigma = 1.0 / std::sqrt(H);
  const Grid g_new = Grid::make(g.dim, g.box_half / rho, g.n);
  std::vector<GridField> fields;
  fields.reserve(st.u.size());
  for (const GridField& u : st.u) {
    GridField f = GridField::zeros(g_new);
    for (std::size_t idx = 0; idx < f.v.size(); ++idx) f.v[idx] = sigma * u.v[idx];
    fields.push_back(std::move(f));
  }

  CoefficientSpec sp = st.spec;
  if (!sp.framed) {
    sp.framed = true;
    sp.frame_center = Vec::zero(g.dim);
    sp.frame_scale = 1.0;
    sp.frame_S = SymMatrix::identity(g.dim);
    sp.frame_Sinv = SymMatrix::identity(g.dim);
    sp.frame_f_scale = 1.0;
    sp.frame_s_scale = 1.0;
  }
  sp.frame_scale *= rho;
  sp.frame_f_scale *= sigma * rho * rho;
  sp.frame_s_scale *= std::sqrt(H);
  sp.box_half = g_new.box_half;

  SystemConfig sys = st.sys;
  sys.beta = st.sys.beta * rho * rho * std::pow(H, sys.gamma);

  return st.solution_like && st.l() >= 2 ? GridState::solution(g_new, sp, sys, std::move(fields))
                                         : GridState::diagnostic(g_new, sp, sys, std::move(fields));
}

namespace {

DirectionFit fit_direction(const std::vector<BallNode>& nodes, const GridState& st,
                           const Vec& e, double denom) {
  const GridField& u1 = st.u[0];
  const GridField& u2 = st.u[1];
  double sp2 = 0.0, sm2 = 0.0, sup = 0.0, sum = 0.0;
  for (const BallNode& b : nodes) {
    const double t = dot(b.x, e);
    const double pp = std::max(t, 0.0), pm = std::max(-t, 0.0);
    sp2 += pp * pp;
    sm2 += pm * pm;
    sup += u1.at(b.i, b.j, b.k) * pp;
    sum += u2.at(b.i, b.j, b.k) * pm;
  }
  DirectionFit fit;
  fit.direction = e;
  fit.gamma_pos = sp2 > 0.0 ? sup / sp2 : 0.0;
  fit.gamma_neg = sm2 > 0.0 ? sum / sm2 : 0.0;
  double res2 = 0.0;
  for (const BallNode& b : nodes) {
    const double t = dot(b.x, e);
    const double r1 = u1.at(b.i, b.j, b.k) - fit.gamma_pos * std::max(t, 0.0);
    const double r2 = u2.at(b.i, b.j, b.k) - fit.gamma_neg * std::max(-t, 0.0);
    res2 += r1 * r1 + r2 * r2;
  }
  fit.residual = std::sqrt(res2 / denom);
  return fit;
}

}  // namespace

DirectionFit blowdown_direction_fit(const GridState& st, int n_dirs) {
  if (n_dirs < 4) throw ConfigError("blowdown_direction_fit: need at least 4 directions");
  if (st.l() < 2) throw GeometryError("blowdown_direction_fit: needs two components");
  const Grid& g = st.grid;
  if (g.box_half < 1.0)
    throw GeometryError("blowdown_direction_fit: unit ball leaves the grid");

  const std::vector<BallNode> nodes = ball_nodes(g, 1.0);
  double denom = 0.0;
  for (const BallNode& b : nodes) {
    const double a = st.u[0].at(b.i, b.j, b.k), c = st.u[1].at(b.i, b.j, b.k);
    denom += a * a + c * c;
  }
  if (!(denom > 0.0)) throw GeometryError("blowdown_direction_fit: zero fields");

  DirectionFit best;
  best.residual = 1e300;
  auto consider = [&](const Vec& e) {
    const DirectionFit f = fit_direction(nodes, st, e, denom);
    if (f.residual < best.residual) best = f;
  };

  const double pi = 3.14159265358979323846;
  if (g.dim == 2) {
    for (int k = 0; k < n_dirs; ++k) {
      const double th = 2.0 * pi * k / n_dirs;
      consider(Vec::of(std::cos(th), std::sin(th)));
    }
    double th = std::atan2(best.direction[1], best.direction[0]);
    double step = 2.0 * pi / n_dirs;
    // pattern search: keep the step while it pays off, halve when stuck
    for (int it = 0; it < 80; ++it) {
      const double before = best.residual;
      consider(Vec::of(std::cos(th + step), std::sin(th + step)));
      consider(Vec::of(std::cos(th - step), std::sin(th - step)));
      th = std::atan2(best.direction[1], best.direction[0]);
      if (!(best.residual < before)) step *= 0.5;
    }
  } else {
    const double ga = pi * (3.0 - std::sqrt(5.0));
    for (int k = 0; k < n_dirs; ++k) {
      const double z = 1.0 - 2.0 * (k + 0.5) / n_dirs;
      const double r = std::sqrt(std::max(0.0, 1.0 - z * z));
      consider(Vec::of(std::cos(ga * k) * r, std::sin(ga * k) * r, z));
    }
    // seed step at the Fibonacci coverage radius, then pattern search
    double step = 0.5 * std::sqrt(4.0 * pi / n_dirs);
    for (int it = 0; it < 80; ++it) {
      const Vec e = best.direction;
      // tangent pair at e, seeded off the least-aligned axis
      int ax = 0;
      for (int d = 1; d < 3; ++d)
        if (std::abs(e[d]) < std::abs(e[ax])) ax = d;
      Vec axis = Vec::zero(3);
      axis[ax] = 1.0;
      Vec t1 = axis - dot(axis, e) * e;
      t1 = (1.0 / norm(t1)) * t1;
      const Vec t2 = cross3(e, t1);
      const double before = best.residual;
      for (const Vec& t : {t1, t2})
        for (double sg : {1.0, -1.0}) {
          Vec cand = e + (sg * step) * t;
          cand = (1.0 / norm(cand)) * cand;
          consider(cand);
        }
      if (!(best.residual < before)) step *= 0.5;
    }
  }
  return best;
}

}  // namespace seglab
