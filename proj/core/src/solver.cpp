#include "seglab/solver.hpp"

#include <Eigen/IterativeLinearSolvers>
#include <Eigen/Sparse>
#include <Eigen/SparseLU>
#include <algorithm>
#include <cmath>
#include <string>

#include "seglab/errors.hpp"

namespace seglab {

double quintic_rise(double t) {
  t = std::clamp(t, 0.0, 1.0);
  return t * t * t * (10.0 + t * (-15.0 + 6.0 * t));
}

double quintic_bump(double d) {
  const double a = std::abs(d);
  return a >= 1.0 ? 0.0 : quintic_rise(1.0 - a);
}

void apply_face_bump(GridField& f, const FaceBump& b) {
  const Grid& g = f.grid;
  if (b.axis < 0 || b.axis >= g.dim) throw ConfigError("face bump: axis out of range");
  if (b.side != -1 && b.side != 1) throw ConfigError("face bump: side must be -1 or +1");
  if (!(b.width > 0.0)) throw ConfigError("face bump: width must be positive");
  const int face = b.side < 0 ? 0 : g.n - 1;
  const int nk = g.dim == 3 ? g.n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        const int idx[3] = {i, j, k};
        if (idx[b.axis] != face) continue;
        double d2 = 0.0;
        int t = 0;
        for (int m = 0; m < g.dim; ++m) {
          if (m == b.axis) continue;
          const double s = (g.coord(idx[m]) - b.center[std::size_t(t)]) / b.width;
          d2 += s * s;
          ++t;
        }
        f.at(i, j, k) = b.amplitude * quintic_bump(std::sqrt(d2));
      }
}

namespace {

using SpMat = Eigen::SparseMatrix<double>;
using Triplet = Eigen::Triplet<double>;

// |s|^{gamma-1} s and its derivative gamma |s|^{gamma-1}; smooth for gamma >= 1
double odd_power(double s, double gamma) {
  return s == 0.0 ? 0.0 : std::pow(std::abs(s), gamma - 1.0) * s;
}
double abs_power(double s, double p) { return std::pow(std::abs(s), p); }

struct Ctx {
  Grid grid;
  CoefficientSpec spec;
  int l = 0;
  double gamma = 1.0;
  std::size_t total = 0;
  std::size_t m = 0;        // interior node count
  double cellvol = 0.0;     // h^dim
  std::vector<int> to_int;  // node -> interior index, -1 on the boundary
  std::vector<std::size_t> from_int;
  std::vector<Vec> xq;      // interior node coordinates
  std::vector<double> aq;   // weight a(x) at interior nodes
  SpMat K;                  // multilinear FE form of <A grad u, grad v>, all nodes
  std::vector<Triplet> kii; // interior block of K / h^dim
};

bool is_interior(const Grid& g, int i, int j, int k) {
  if (i <= 0 || i >= g.n - 1 || j <= 0 || j >= g.n - 1) return false;
  if (g.dim == 3 && (k <= 0 || k >= g.n - 1)) return false;
  return true;
}

void assemble_stiffness(Ctx& c) {
  const Grid& g = c.grid;
  const int dim = g.dim, n = g.n;
  const int corners = 1 << dim;
  const double h = g.h;
  // tensor 2-point Gauss on [0,1] per axis; exact through cubics, so the
  // form is exact on multilinear fields and free of hourglass modes
  const double ga = 0.5 - 0.5 / std::sqrt(3.0), gb = 0.5 + 0.5 / std::sqrt(3.0);
  const double g1[2] = {ga, gb};

  std::vector<Triplet> trips;
  const int cells_k = dim == 3 ? n - 1 : 1;
  trips.reserve(std::size_t(n - 1) * std::size_t(n - 1) * std::size_t(cells_k) *
                std::size_t(corners) * std::size_t(corners));
  const double scale = std::pow(h, dim - 2);

  const std::size_t nc = std::size_t(corners);
  std::vector<std::size_t> gidx(nc);
  std::vector<std::array<double, 3>> gradc(nc);
  std::array<double, 64> kloc{};

  for (int ck = 0; ck < cells_k; ++ck)
    for (int cj = 0; cj < n - 1; ++cj)
      for (int ci = 0; ci < n - 1; ++ci) {
        for (int c = 0; c < corners; ++c)
          gidx[std::size_t(c)] =
              g.flatten(ci + (c & 1), cj + ((c >> 1) & 1), dim == 3 ? ck + ((c >> 2) & 1) : 0);
        kloc.fill(0.0);
        const int gpts = 1 << dim;
        for (int gp = 0; gp < gpts; ++gp) {
          double xi[3] = {g1[gp & 1], g1[(gp >> 1) & 1], dim == 3 ? g1[(gp >> 2) & 1] : 0.0};
          Vec x = g.node(ci, cj, ck);
          for (int d = 0; d < dim; ++d) x[d] += h * xi[d];
          const SymMatrix A = eval_matrix(c.spec, x);
          for (int cc = 0; cc < corners; ++cc) {
            for (int d = 0; d < dim; ++d) {
              double v = ((cc >> d) & 1) ? 1.0 : -1.0;
              for (int mm = 0; mm < dim; ++mm) {
                if (mm == d) continue;
                v *= ((cc >> mm) & 1) ? xi[mm] : 1.0 - xi[mm];
              }
              gradc[std::size_t(cc)][std::size_t(d)] = v;
            }
          }
          const double w = scale / double(gpts);
          for (int a = 0; a < corners; ++a)
            for (int b = a; b < corners; ++b) {
              double s = 0.0;
              for (int d = 0; d < dim; ++d) {
                double Ag = 0.0;
                for (int e = 0; e < dim; ++e)
                  Ag += A(d, e) * gradc[std::size_t(b)][std::size_t(e)];
                s += gradc[std::size_t(a)][std::size_t(d)] * Ag;
              }
              kloc[std::size_t(a * corners + b)] += w * s;
            }
        }
        for (int a = 0; a < corners; ++a)
          for (int b = a; b < corners; ++b) {
            const double v = kloc[std::size_t(a * corners + b)];
            trips.emplace_back(int(gidx[std::size_t(a)]), int(gidx[std::size_t(b)]), v);
            if (b != a)
              trips.emplace_back(int(gidx[std::size_t(b)]), int(gidx[std::size_t(a)]), v);
          }
      }

  c.K.resize(int(c.total), int(c.total));
  c.K.setFromTriplets(trips.begin(), trips.end());

  c.kii.clear();
  const double inv = 1.0 / c.cellvol;
  for (int col = 0; col < c.K.outerSize(); ++col) {
    const int qc = c.to_int[std::size_t(col)];
    if (qc < 0) continue;
    for (SpMat::InnerIterator it(c.K, col); it; ++it) {
      const int qr = c.to_int[std::size_t(it.row())];
      if (qr < 0) continue;
      c.kii.emplace_back(qr, qc, it.value() * inv);
    }
  }
}

Ctx make_ctx(const Grid& g, const CoefficientSpec& spec, const SystemConfig& sys) {
  Ctx c;
  c.grid = g;
  c.spec = spec;
  c.l = sys.l;
  c.gamma = sys.gamma;
  c.total = g.node_count();
  c.cellvol = std::pow(g.h, g.dim);
  c.to_int.assign(c.total, -1);
  const int nk = g.dim == 3 ? g.n : 1;
  for (int k = 0; k < nk; ++k)
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i) {
        if (!is_interior(g, i, j, k)) continue;
        const std::size_t node = g.flatten(i, j, k);
        c.to_int[node] = int(c.from_int.size());
        c.from_int.push_back(node);
        c.xq.push_back(g.node(i, j, k));
      }
  c.m = c.from_int.size();
  c.aq.resize(c.m);
  for (std::size_t q = 0; q < c.m; ++q) c.aq[q] = eval_weight(spec, c.xq[q]);
  assemble_stiffness(c);
  return c;
}

void check_source(const Ctx& c, const std::vector<GridField>* src) {
  if (!src) return;
  if (int(src->size()) != c.l) throw ConfigError("extra source: need one field per component");
  for (const auto& s : *src)
    if (!s.grid.same_layout(c.grid)) throw ConfigError("extra source: grid layout mismatch");
}

Eigen::VectorXd field_vector(const GridField& f) {
  return Eigen::Map<const Eigen::VectorXd>(f.v.data(), long(f.v.size()));
}

double energy_impl(const Ctx& c, const std::vector<GridField>& u, double beta,
                   const std::vector<GridField>* src) {
  double J = 0.0;
  for (int i = 0; i < c.l; ++i) {
    const Eigen::VectorXd ui = field_vector(u[std::size_t(i)]);
    J += 0.5 * ui.dot(c.K * ui);
  }
  const double gp1 = c.gamma + 1.0;
  const double cpair = -beta / gp1;
  double nodal = 0.0;
  std::vector<double> p(std::size_t(c.l));
  for (std::size_t q = 0; q < c.m; ++q) {
    const std::size_t node = c.from_int[q];
    double sum_p = 0.0, sum_p2 = 0.0;
    for (int i = 0; i < c.l; ++i) {
      const double s = u[std::size_t(i)].v[node];
      nodal -= eval_reaction_antiderivative(c.spec, i, c.xq[q], s);
      if (src) nodal -= (*src)[std::size_t(i)].v[node] * s;
      p[std::size_t(i)] = abs_power(s, gp1);
      sum_p += p[std::size_t(i)];
      sum_p2 += p[std::size_t(i)] * p[std::size_t(i)];
    }
    nodal += cpair * c.aq[q] * 0.5 * (sum_p * sum_p - sum_p2);
  }
  return J + c.cellvol * nodal;
}

// PDE-scaled residual r = K u / h^dim - f - s - beta a |u_i|^{g-1} u_i S_i on
// interior rows, stacked by component; also the scale
// max(1, ||diffusion|| + ||reaction + source|| + ||interaction||)
void residual_impl(const Ctx& c, const std::vector<GridField>& u, double beta,
                   const std::vector<GridField>* src, Eigen::VectorXd& r, double& scale) {
  const std::size_t m = c.m;
  r.resize(long(m * std::size_t(c.l)));
  double d2 = 0.0, f2 = 0.0, i2 = 0.0;
  std::vector<Eigen::VectorXd> Ku(std::size_t(c.l));
  for (int i = 0; i < c.l; ++i)
    Ku[std::size_t(i)] = c.K * field_vector(u[std::size_t(i)]);
  const double inv = 1.0 / c.cellvol;
  std::vector<double> p(std::size_t(c.l)), sig(std::size_t(c.l));
  for (std::size_t q = 0; q < m; ++q) {
    const std::size_t node = c.from_int[q];
    double sum_p = 0.0;
    for (int i = 0; i < c.l; ++i) {
      const double s = u[std::size_t(i)].v[node];
      p[std::size_t(i)] = abs_power(s, c.gamma + 1.0);
      sig[std::size_t(i)] = odd_power(s, c.gamma);
      sum_p += p[std::size_t(i)];
    }
    for (int i = 0; i < c.l; ++i) {
      const double s = u[std::size_t(i)].v[node];
      const double diff = Ku[std::size_t(i)][long(node)] * inv;
      double reac = eval_reaction(c.spec, i, c.xq[q], s);
      if (src) reac += (*src)[std::size_t(i)].v[node];
      const double inter =
          beta * c.aq[q] * sig[std::size_t(i)] * (sum_p - p[std::size_t(i)]);
      r[long(std::size_t(i) * m + q)] = diff - reac - inter;
      d2 += diff * diff;
      f2 += reac * reac;
      i2 += inter * inter;
    }
  }
  scale = std::max(1.0, std::sqrt(d2) + std::sqrt(f2) + std::sqrt(i2));
}

SpMat newton_matrix(const Ctx& c, const std::vector<GridField>& u, double beta) {
  const std::size_t m = c.m;
  std::vector<Triplet> trips;
  trips.reserve(c.kii.size() * std::size_t(c.l) + m * std::size_t(c.l * c.l));
  for (int i = 0; i < c.l; ++i) {
    const int off = i * int(m);
    for (const auto& t : c.kii) trips.emplace_back(t.row() + off, t.col() + off, t.value());
  }
  std::vector<double> p(std::size_t(c.l)), sig(std::size_t(c.l));
  for (std::size_t q = 0; q < m; ++q) {
    const std::size_t node = c.from_int[q];
    double sum_p = 0.0;
    for (int i = 0; i < c.l; ++i) {
      const double s = u[std::size_t(i)].v[node];
      p[std::size_t(i)] = abs_power(s, c.gamma + 1.0);
      sig[std::size_t(i)] = odd_power(s, c.gamma);
      sum_p += p[std::size_t(i)];
    }
    for (int i = 0; i < c.l; ++i) {
      const double s = u[std::size_t(i)].v[node];
      const double diag = -eval_reaction_ds(c.spec, i, c.xq[q], s) -
                          beta * c.aq[q] * c.gamma * abs_power(s, c.gamma - 1.0) *
                              (sum_p - p[std::size_t(i)]);
      trips.emplace_back(int(std::size_t(i) * m + q), int(std::size_t(i) * m + q), diag);
      for (int j = i + 1; j < c.l; ++j) {
        const double off =
            -beta * c.aq[q] * (c.gamma + 1.0) * sig[std::size_t(i)] * sig[std::size_t(j)];
        if (off != 0.0) {
          trips.emplace_back(int(std::size_t(i) * m + q), int(std::size_t(j) * m + q), off);
          trips.emplace_back(int(std::size_t(j) * m + q), int(std::size_t(i) * m + q), off);
        }
      }
    }
  }
  SpMat M(int(m * std::size_t(c.l)), int(m * std::size_t(c.l)));
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

bool solve_direction(const Ctx& c, const SpMat& M, const Eigen::VectorXd& rhs,
                     Eigen::VectorXd& d) {
  if (c.grid.dim == 2) {
    Eigen::SparseLU<SpMat> lu;
    lu.compute(M);
    if (lu.info() != Eigen::Success) return false;
    d = lu.solve(rhs);
    return lu.info() == Eigen::Success && d.allFinite();
  }
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it;
  it.preconditioner().setDroptol(1e-5);
  it.preconditioner().setFillfactor(12);
  it.setTolerance(1e-10);
  it.setMaxIterations(600);
  it.compute(M);
  if (it.info() == Eigen::Success) {
    d = it.solve(rhs);
    if ((it.info() == Eigen::Success || it.error() < 1e-8) && d.allFinite()) return true;
  }
  Eigen::BiCGSTAB<SpMat, Eigen::IncompleteLUT<double>> it2;
  it2.preconditioner().setDroptol(1e-7);
  it2.preconditioner().setFillfactor(30);
  it2.setTolerance(1e-10);
  it2.setMaxIterations(1200);
  it2.compute(M);
  if (it2.info() != Eigen::Success) return false;
  d = it2.solve(rhs);
  return (it2.info() == Eigen::Success || it2.error() < 1e-6) && d.allFinite();
}

void add_direction(const Ctx& c, std::vector<GridField>& u, const Eigen::VectorXd& d,
                   double t) {
  for (int i = 0; i < c.l; ++i)
    for (std::size_t q = 0; q < c.m; ++q)
      u[std::size_t(i)].v[c.from_int[q]] += t * d[long(std::size_t(i) * c.m + q)];
}

bool newton_stage(const Ctx& c, std::vector<GridField>& u, double beta,
                  const std::vector<GridField>* src, const SolveOptions& opt,
                  SolveInfo& info) {
  Eigen::VectorXd r;
  double scale = 1.0;
  for (int it = 0;; ++it) {
    residual_impl(c, u, beta, src, r, scale);
    const double rel = r.norm() / scale;
    info.residual_history.push_back(rel);
    info.final_residual = rel;
    if (!std::isfinite(rel)) return false;
    if (rel < opt.tol) return true;
    if (it >= opt.max_newton) return false;

    const SpMat M = newton_matrix(c, u, beta);
    Eigen::VectorXd d;
    if (!solve_direction(c, M, (-r).eval(), d)) {
      d = -r;
      ++info.gradient_fallbacks;
    }
    double gd = r.dot(d);
    if (!(gd < 0.0)) {
      d = -r;
      gd = -r.squaredNorm();
      ++info.gradient_fallbacks;
    }

    const double J0 = energy_impl(c, u, beta, src);
    const double noise = 1e-14 * (1.0 + std::abs(J0));
    double t = 1.0;
    bool accepted = false;
    for (int bt = 0; bt <= opt.max_backtrack; ++bt) {
      std::vector<GridField> trial = u;
      add_direction(c, trial, d, t);
      const double Jt = energy_impl(c, trial, beta, src);
      const double target = J0 + 1e-4 * t * c.cellvol * gd;
      if (std::isfinite(Jt) && (Jt <= target || std::abs(t * c.cellvol * gd) < noise)) {
        u = std::move(trial);
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    ++info.newton_iterations;
    if (!accepted) return false;
  }
}

}  // namespace

double system_energy(const GridState& st, const std::vector<GridField>* source) {
  st.sys.validate(st.grid.dim);
  const Ctx c = make_ctx(st.grid, st.spec, st.sys);
  check_source(c, source);
  return energy_impl(c, st.u, st.sys.beta, source);
}

std::vector<GridField> system_residual(const GridState& st,
                                       const std::vector<GridField>* source) {
  st.sys.validate(st.grid.dim);
  const Ctx c = make_ctx(st.grid, st.spec, st.sys);
  check_source(c, source);
  Eigen::VectorXd r;
  double scale = 1.0;
  residual_impl(c, st.u, st.sys.beta, source, r, scale);
  std::vector<GridField> out(std::size_t(c.l), GridField::zeros(st.grid));
  for (int i = 0; i < c.l; ++i)
    for (std::size_t q = 0; q < c.m; ++q)
      out[std::size_t(i)].v[c.from_int[q]] = r[long(std::size_t(i) * c.m + q)];
  return out;
}

double relative_residual(const GridState& st, const std::vector<GridField>* source) {
  st.sys.validate(st.grid.dim);
  const Ctx c = make_ctx(st.grid, st.spec, st.sys);
  check_source(c, source);
  Eigen::VectorXd r;
  double scale = 1.0;
  residual_impl(c, st.u, st.sys.beta, source, r, scale);
  return r.norm() / scale;
}

SolveInfo solve_system(GridState& st, const SolveOptions& opt) {
  st.sys.validate(st.grid.dim);
  if (st.l() < 1) throw ConfigError("solve: need at least one component");
  if (!(opt.tol > 0.0) || opt.max_newton < 1 || opt.beta_ratio <= 1.0)
    throw ConfigError("solve: bad options");
  const Ctx c = make_ctx(st.grid, st.spec, st.sys);
  check_source(c, opt.extra_source);

  const double bt = st.sys.beta;
  std::vector<double> stack;
  if (!opt.use_continuation || bt == 0.0 || std::abs(bt) <= 1.0) {
    stack.push_back(bt);
  } else {
    std::vector<double> fwd;
    double b = -1.0;
    while (std::abs(b) * (1.0 + 1e-12) < std::abs(bt)) {
      fwd.push_back(b);
      b *= opt.beta_ratio;
    }
    fwd.push_back(bt);
    stack.assign(fwd.rbegin(), fwd.rend());
  }

  SolveInfo info;
  std::vector<GridField> good_u = st.u;
  double prev_ok = 0.0;
  bool have_prev = false;
  int splits = 0;
  while (!stack.empty()) {
    const double bs = stack.back();
    stack.pop_back();
    if (newton_stage(c, st.u, bs, opt.extra_source, opt, info)) {
      good_u = st.u;
      prev_ok = bs;
      have_prev = true;
      info.beta_path.push_back(bs);
      continue;
    }
    if (!opt.use_continuation || ++splits > opt.max_stage_splits)
      throw SolveError("solve: stage at beta = " + format_double(bs) +
                           " did not reach tolerance",
                       info.residual_history);
    st.u = good_u;
    const double lo =
        have_prev ? std::abs(prev_ok) : std::abs(bs) / (opt.beta_ratio * opt.beta_ratio);
    const double mid = -std::sqrt(lo * std::abs(bs));
    if (!(std::abs(mid) < std::abs(bs) * (1.0 - 1e-9)) ||
        !(std::abs(mid) > lo * (1.0 + 1e-9)))
      throw SolveError("solve: beta continuation stalled near " + format_double(bs),
                       info.residual_history);
    stack.push_back(bs);
    stack.push_back(mid);
  }

  info.converged = true;
  info.final_energy = energy_impl(c, st.u, bt, opt.extra_source);
  double mn = 0.0, mx = 0.0;
  for (const auto& f : st.u) {
    mn = std::min(mn, f.min_value());
    mx = std::max(mx, f.max_abs());
  }
  info.min_value = mn;
  if (mn >= -1e-8 * std::max(1.0, mx)) {
    for (auto& f : st.u)
      for (double& v : f.v) v = std::max(v, 0.0);
    if (st.l() >= 2) st.solution_like = true;
  }
  return info;
}

}  // namespace seglab
