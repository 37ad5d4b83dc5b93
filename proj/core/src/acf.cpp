#include "seglab/acf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "seglab/errors.hpp"
#include "seglab/operators.hpp"
#include "seglab/parallel.hpp"
#include "seglab/quadrature.hpp"
#include "seglab/spherical.hpp"

namespace seglab {

GridState lift_to_frame3(const GridState& s) {
  if (s.grid.dim != 2) throw GeometryError("lift_to_frame3: expects a 2d state");
  const Grid g3 = Grid::make(3, s.grid.box_half, s.grid.n);
  CoefficientSpec spec3 = s.spec;
  spec3.dim = 3;
  spec3.lift_2d = true;
  std::vector<GridField> fields;
  fields.reserve(s.u.size());
  for (const GridField& f2 : s.u) {
    GridField f3 = GridField::zeros(g3);
    std::size_t idx = 0;
    for (int k = 0; k < g3.n; ++k)
      for (int j = 0; j < g3.n; ++j)
        for (int i = 0; i < g3.n; ++i) f3.v[idx++] = f2.at(i, j);
    fields.push_back(std::move(f3));
  }
  return s.solution_like
             ? GridState::solution(g3, spec3, s.sys, std::move(fields))
             : GridState::diagnostic(g3, spec3, s.sys, std::move(fields));
}

namespace {

// every functional below integrates the fundamental weight |y|^{2-dim}, which
// is what pins the frame to dim 3
void require_pair3(const GridState& st) {
  if (st.grid.dim != 3)
    throw GeometryError("acf: functionals need the 3d frame; lift 2d states first");
  if (st.l() < 2) throw GeometryError("acf: needs a component pair");
}

struct SphereScan {
  std::array<double, 2> tang{};  // int <B grad_T u_i, grad_T u_i> + couple a u1^2 u2^2 - u_i f_i
  std::array<double, 2> mass{};  // int mu u_i^2
  double worst_f_ratio = 0.0;    // max 2|f_i| / (mu |u_i|)
  double worst_closeness = 0.0;  // max ||A - Id|| / r
  double worst_deriv = 0.0;      // max_k ||dA/dx_k||
};

// one pass over the sphere quadrature shared by Lambda, the normalized sphere
// quotients, and the per-radius hypothesis flags. Gradients are sampled well
// inside interpolation cells: the Gauss panels keep every node at least
// ~2e-3 h away from the x1 = 0 seam plane, so piecewise-multilinear kinks
// (exactly segregated pairs) integrate without smearing.
SphereScan sphere_scan(const GridState& st, double r, double couple, bool with_reaction,
                       bool with_bounds) {
  const SphereQuadrature q = SphereQuadrature::make(3, r);
  const SymMatrix id3 = SymMatrix::identity(3);
  const double grad_step = 1e-4 * st.grid.h;
  SphereScan s;
  for (std::size_t m = 0; m < q.size(); ++m) {
    const Vec& p = q.nodes[m];
    const double w = q.weights[m];
    const double mu = eval_mu(st.spec, p);
    const double a = eval_weight(st.spec, p);
    const double u1 = st.u[0].interp(p), u2 = st.u[1].interp(p);
    const double pair_term = couple * a * u1 * u1 * u2 * u2;
    const std::array<double, 2> uv = {u1, u2};
    for (int i = 0; i < 2; ++i) {
      const Vec du = interp_gradient(st.u[std::size_t(i)], p, grad_step);
      const TangentialSplit ts = tangential_split(du, p);
      const Vec bt = operator_B(st.spec, p, ts.tangential);
      double integrand = dot(bt, ts.tangential) + pair_term;
      if (with_reaction) {
        const double f = eval_reaction(st.spec, i, p, uv[i]);
        integrand -= uv[i] * f;
        if (with_bounds && std::abs(uv[i]) > 1e-12)
          s.worst_f_ratio =
              std::max(s.worst_f_ratio, 2.0 * std::abs(f) / (mu * std::abs(uv[i])));
      }
      s.tang[std::size_t(i)] += w * integrand;
      s.mass[std::size_t(i)] += w * mu * uv[i] * uv[i];
    }
    if (with_bounds) {
      s.worst_closeness =
          std::max(s.worst_closeness, spectral_norm(eval_matrix(st.spec, p) - id3) / r);
      for (int k = 0; k < 3; ++k)
        s.worst_deriv =
            std::max(s.worst_deriv, spectral_norm(eval_matrix_deriv(st.spec, p, k)));
    }
  }
  return s;
}

}  // namespace

std::vector<std::array<double, 2>> compute_J(const GridState& st,
                                             const std::vector<double>& radii, double M) {
  require_pair3(st);
  if (radii.empty()) return {};
  std::array<GridField, 2> dens = {energy_density(st.spec, st.u[0]),
                                   energy_density(st.spec, st.u[1])};
  const Grid& g = st.grid;
  const std::size_t plane = std::size_t(g.n) * std::size_t(g.n);
  parallel_for(std::size_t(g.n), [&](std::size_t ks) {
    const int kz = int(ks);
    std::size_t idx = ks * plane;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i, ++idx) {
        const Vec x = g.node(i, j, kz);
        const double u1 = st.u[0].v[idx], u2 = st.u[1].v[idx];
        const double coupling = M * eval_weight(st.spec, x) * u1 * u1 * u2 * u2;
        dens[0].v[idx] -= coupling + u1 * eval_reaction(st.spec, 0, x, u1);
        dens[1].v[idx] -= coupling + u2 * eval_reaction(st.spec, 1, x, u2);
      }
  });
  const std::vector<double> s1 = radial_volume_sums_fundamental(dens[0], radii);
  const std::vector<double> s2 = radial_volume_sums_fundamental(dens[1], radii);
  std::vector<std::array<double, 2>> out(radii.size());
  for (std::size_t k = 0; k < radii.size(); ++k) out[k] = {s1[k], s2[k]};
  return out;
}

std::array<double, 2> compute_J(const GridState& st, double r, double M) {
  return compute_J(st, std::vector<double>{r}, M)[0];
}

std::array<double, 2> compute_Lambda(const GridState& st, double r, double M, double alpha,
                                     double c) {
  require_pair3(st);
  const SphereScan s = sphere_scan(st, r, -M, true, false);
  std::array<double, 2> lam{};
  for (int i = 0; i < 2; ++i) {
    const double den = (1.0 + alpha * r * c) * s.mass[std::size_t(i)];
    if (!(den > 0.0))
      throw GeometryError("compute_Lambda: trace mass degenerates on the sphere");
    lam[std::size_t(i)] = r * r * s.tang[std::size_t(i)] / den;
  }
  return lam;
}

double fundamental_correction_alpha(const GridState& st, int i, const RadialLadder& ladder,
                                    double c) {
  if (st.grid.dim != 3)
    throw GeometryError("fundamental correction: needs the 3d frame; lift 2d states first");
  if (i < 0 || i >= st.l())
    throw GeometryError("fundamental correction: component index out of range");
  if (ladder.radii.empty()) throw GeometryError("fundamental correction: empty radius ladder");
  const GridField& u = st.u[std::size_t(i)];
  const Grid& g = st.grid;
  const std::vector<GridField> du = gradient(u);
  // integration by parts sends u^2 div(A grad w), w = |y|^{2-dim}, to a
  // surface piece (2-dim) r^{1-dim} int_{dB_r} mu u^2 minus the volume
  // integral of <A grad w, grad u^2>; under the fundamental radial weight the
  // volume integrand reduces to (2-dim) 2 u <A y, grad u> / |y|^2
  GridField vol = GridField::zeros(g);
  const std::size_t plane = std::size_t(g.n) * std::size_t(g.n);
  parallel_for(std::size_t(g.n), [&](std::size_t ks) {
    const int kz = int(ks);
    std::size_t idx = ks * plane;
    for (int j = 0; j < g.n; ++j)
      for (int ii = 0; ii < g.n; ++ii, ++idx) {
        const Vec x = g.node(ii, j, kz);
        const double r2 = dot(x, x);
        if (r2 == 0.0) continue;  // origin cell is excised by the radial sums
        const Vec gr = Vec::of(du[0].v[idx], du[1].v[idx], du[2].v[idx]);
        const Vec ax = matvec(eval_matrix(st.spec, x), x);
        vol.v[idx] = -2.0 * u.v[idx] * dot(ax, gr) / r2;
      }
  });
  const std::vector<double> vol_sums = radial_volume_sums_fundamental(vol, ladder.radii);
  double alpha = 0.0;
  for (std::size_t k = 0; k < ladder.radii.size(); ++k) {
    const double r = ladder.radii[k];
    const SphereQuadrature q = SphereQuadrature::make(3, r);
    double smu = 0.0;
    for (std::size_t m = 0; m < q.size(); ++m) {
      const double uv = u.interp(q.nodes[m]);
      smu += q.weights[m] * eval_mu(st.spec, q.nodes[m]) * uv * uv;
    }
    const double lhs = -smu / (r * r) - vol_sums[k];
    if (lhs <= 0.0) continue;
    const double rhs_scale = c * smu / r;  // c (dim-2) r^{2-dim} int mu u^2 at dim 3
    if (rhs_scale <= 0.0) return std::numeric_limits<double>::infinity();
    alpha = std::max(alpha, lhs / rhs_scale);
  }
  return alpha;
}

double gamma_sum_on_sphere(const GridState& st, double r, double k, double eps,
                           double ctilde, double alpha) {
  require_pair3(st);
  const SphereScan s = sphere_scan(st, r, k, false, false);
  double sum = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double den = (1.0 + alpha * ctilde) * s.mass[std::size_t(i)];
    if (!(den > 0.0))
      throw GeometryError("gamma_sum_on_sphere: trace mass degenerates on the sphere");
    sum += gamma_exponent(r * r * s.tang[std::size_t(i)] / den - eps, 3);
  }
  return sum;
}

bool AcfPoint::all_h() const {
  for (bool flag : h)
    if (!flag) return false;
  return true;
}

AcfProfile acf_profile(const GridState& st, const RadialLadder& ladder,
                       const AcfParams& params) {
  require_pair3(st);
  if (ladder.radii.empty()) throw GeometryError("acf_profile: empty radius ladder");
  if (params.M > 0.0) throw ConfigError("acf_profile: competition scale must be <= 0");
  if (!(params.eta > 0.0 && params.eta < 0.25))
    throw ConfigError("acf_profile: eta must lie in (0, 1/4)");
  if (!(params.delta > 0.0 && params.delta < 0.25))
    throw ConfigError("acf_profile: delta must lie in (0, 1/4)");

  AcfProfile prof;
  prof.params = params;
  prof.c_used = params.c > 0.0 ? params.c : st.spec.closeness_scale();

  const std::vector<double>& radii = ladder.radii;
  const std::vector<std::array<double, 2>> js = compute_J(st, radii, params.M);
  std::vector<SphereScan> scans(radii.size());
  parallel_for(radii.size(),
               [&](std::size_t k) { scans[k] = sphere_scan(st, radii[k], -params.M, true, true); });

  double fitted_eps = 0.0;
  for (const SphereScan& s : scans) fitted_eps = std::max(fitted_eps, s.worst_f_ratio);
  prof.eps_used = params.eps > 0.0 ? params.eps : fitted_eps;

  prof.points.resize(radii.size());
  prof.w_star = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < radii.size(); ++k) {
    AcfPoint& p = prof.points[k];
    const SphereScan& s = scans[k];
    const double r = radii[k];
    p.r = r;
    p.J1 = js[k][0];
    p.J2 = js[k][1];
    p.product = p.J1 * p.J2 / (r * r * r * r);
    p.m1 = s.mass[0] / (r * r);
    p.m2 = s.mass[1] / (r * r);
    const double den = 1.0 + params.alpha * r * prof.c_used;
    p.Lambda1 = s.mass[0] > 0.0 ? r * r * s.tang[0] / (den * s.mass[0]) : 0.0;
    p.Lambda2 = s.mass[1] > 0.0 ? r * r * s.tang[1] / (den * s.mass[1]) : 0.0;

    p.h[0] = s.worst_closeness <= prof.c_used + 1e-12 &&
             s.worst_deriv <= prof.c_used + 1e-12;
    p.h[1] = prof.eps_used * r * r <= 0.25 - params.delta;  // ((dim-2)/2)^2 at dim 3
    p.h[2] = s.worst_f_ratio <= prof.eps_used * (1.0 + 1e-9) + 1e-15;
    const bool masses = p.m1 > 0.0 && p.m2 > 0.0;
    double ratio = 0.0;
    if (masses) {
      ratio = std::max(p.m1 / p.m2, p.m2 / p.m1);
      prof.lambda_star = std::max(prof.lambda_star, ratio);
    }
    p.h[3] = masses && ratio <= params.lambda_cap && std::min(p.m1, p.m2) >= params.w_floor;
    p.h[4] = prof.c_used * r <= params.h4_cap;
    p.h[5] = true;  // adjacent-pair doubling, filled below
    p.h[6] = p.J1 > 0.0 && p.J2 > 0.0 && p.Lambda1 > 0.0 && p.Lambda2 > 0.0;
    prof.w_star = std::min(prof.w_star, std::min(p.m1, p.m2));
  }
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const AcfPoint& a = prof.points[k];
    const AcfPoint& b = prof.points[k + 1];
    bool ok = a.m1 > 0.0 && a.m2 > 0.0;
    if (ok) {
      const double d1 = b.m1 / a.m1, d2 = b.m2 / a.m2;
      prof.doubling_star = std::max({prof.doubling_star, d1, d2});
      ok = d1 <= params.doubling_cap && d2 <= params.doubling_cap;
    }
    prof.points[k].h[5] = ok;
  }
  if (radii.size() >= 2)  // the last radius has no upward neighbor; inherit
    prof.points.back().h[5] = prof.points[radii.size() - 2].h[5];
  return prof;
}

AcfCertificate acf_monotonicity_report(AcfProfile& prof) {
  AcfCertificate cert;
  const std::vector<AcfPoint>& pts = prof.points;
  std::size_t best_b = 0, best_e = 0, b = 0;
  while (b < pts.size()) {
    if (!pts[b].all_h()) {
      ++b;
      continue;
    }
    std::size_t e = b;
    while (e < pts.size() && pts[e].all_h()) ++e;
    if (e - b > best_e - best_b) {
      best_b = b;
      best_e = e;
    }
    b = e;
  }
  if (best_e - best_b < 2) {
    cert.skipped_reason = "hypotheses hold on fewer than two consecutive radii";
    return cert;
  }
  const double M = prof.params.M, eta = prof.params.eta;
  const auto phi = [&](double r) {
    const double comp =
        M != 0.0 ? -std::pow(std::abs(M), -eta) * std::pow(r, -2.0 * eta) : 0.0;
    return comp + prof.eps_used * r * r + prof.c_used * r;
  };
  const double tol = prof.params.violation_tol;
  double C = 0.0;
  for (std::size_t k = best_b; k + 1 < best_e; ++k) {
    // products are positive on the certified run (J_i > 0 there)
    const double dlnp = std::log(pts[k + 1].product) - std::log(pts[k].product);
    if (dlnp >= -tol) continue;
    const double dphi = phi(pts[k + 1].r) - phi(pts[k].r);
    if (dphi <= 0.0) {
      cert.skipped_reason =
          "the product drops while the correction exponent is flat; no scale absorbs it";
      return cert;
    }
    C = std::max(C, (-dlnp - tol) / dphi);
  }
  cert.certified = true;
  cert.begin = best_b;
  cert.end = best_e;
  cert.C_star = C;
  for (AcfPoint& p : prof.points) p.corrected = p.product * std::exp(C * phi(p.r));
  for (std::size_t k = best_b; k + 1 < best_e; ++k)
    cert.max_violation =
        std::max(cert.max_violation,
                 -(std::log(prof.points[k + 1].corrected) - std::log(prof.points[k].corrected)));
  cert.max_violation = std::max(cert.max_violation, 0.0);
  return cert;
}

void AcfProfile::write_csv(const std::string& path) const {
  CsvWriter w(path);
  w.header({"r", "J1", "J2", "product", "Lambda1", "Lambda2", "corrected_product", "h0",
            "h1", "h2", "h3", "h4", "h5", "h6"});
  for (const AcfPoint& p : points)
    w.row({p.r, p.J1, p.J2, p.product, p.Lambda1, p.Lambda2, p.corrected, double(p.h[0]),
           double(p.h[1]), double(p.h[2]), double(p.h[3]), double(p.h[4]), double(p.h[5]),
           double(p.h[6])});
}

}  // namespace seglab
