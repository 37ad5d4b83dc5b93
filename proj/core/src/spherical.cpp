#include "seglab/spherical.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "seglab/errors.hpp"
#include "seglab/parallel.hpp"

namespace seglab {

namespace {

constexpr double kPi = 3.14159265358979323846;

}  // namespace

double gamma_exponent(double t, int dim) {
  if (dim != 2 && dim != 3) throw ConfigError("gamma_exponent: dim must be 2 or 3");
  const double half = 0.5 * double(dim - 2);
  const double disc = half * half + t;
  if (disc < 0.0) throw ConfigError("gamma_exponent: argument below the branch point");
  return std::sqrt(disc) - half;
}

namespace {

// one RK4 shot of -(sin^{m} t f')' = lambda sin^{m} t f from the series start
// f = 1 + a t^2 + b t^4 near t = 0; returns f(theta0)
double cap_shot(double lambda, double theta0, int m, int steps) {
  const double a = -lambda / (2.0 * double(m + 1));
  const double b =
      (-lambda * (a - double(m) / 6.0) / double(m + 3) + a * double(m) / 3.0) / 4.0;
  const double t0 = std::min(1e-3, 0.1 * theta0);
  double f = 1.0 + a * t0 * t0 + b * t0 * t0 * t0 * t0;
  double g = 2.0 * a * t0 + 4.0 * b * t0 * t0 * t0;
  const double h = (theta0 - t0) / double(steps);
  // f'' = -lambda f - m cot(t) f'
  const auto rhs = [&](double t, double fv, double gv, double& df, double& dg) {
    df = gv;
    dg = -lambda * fv - (m > 0 ? double(m) * (std::cos(t) / std::sin(t)) * gv : 0.0);
  };
  double t = t0;
  for (int s = 0; s < steps; ++s) {
    double k1f, k1g, k2f, k2g, k3f, k3g, k4f, k4g;
    rhs(t, f, g, k1f, k1g);
    rhs(t + 0.5 * h, f + 0.5 * h * k1f, g + 0.5 * h * k1g, k2f, k2g);
    rhs(t + 0.5 * h, f + 0.5 * h * k2f, g + 0.5 * h * k2g, k3f, k3g);
    rhs(t + h, f + h * k3f, g + h * k3g, k4f, k4g);
    f += h / 6.0 * (k1f + 2.0 * k2f + 2.0 * k3f + k4f);
    g += h / 6.0 * (k1g + 2.0 * k2g + 2.0 * k3g + k4g);
    t += h;
  }
  return f;
}

// Richardson pair: RK4 is order 4, so the extrapolation kills the leading term
double cap_shot_rich(double lambda, double theta0, int m) {
  const double coarse = cap_shot(lambda, theta0, m, 512);
  const double fine = cap_shot(lambda, theta0, m, 1024);
  return (16.0 * fine - coarse) / 15.0;
}

}  // namespace

double cap_eigenvalue(double theta0, int dim) {
  if (dim != 2 && dim != 3) throw ConfigError("cap_eigenvalue: dim must be 2 or 3");
  if (!(theta0 > 0.0) || !(theta0 < kPi))
    throw ConfigError("cap_eigenvalue: opening angle must lie in (0, pi)");
  const int m = dim - 2;
  // the shot is positive for lambda below the first eigenvalue; bracket the
  // first sign change and bisect
  double lo = 0.0, hi = 1.0;
  while (cap_shot_rich(hi, theta0, m) > 0.0) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e12) throw SpectralError("cap_eigenvalue: no sign change found", hi);
  }
  for (int it = 0; it < 100; ++it) {
    const double mid = 0.5 * (lo + hi);
    (cap_shot_rich(mid, theta0, m) > 0.0 ? lo : hi) = mid;
    if (hi - lo <= 1e-9 * std::max(1.0, hi)) break;
  }
  return 0.5 * (lo + hi);
}

FriedmanHaymanReport friedman_hayman_check(int n_thetas, int dim) {
  if (n_thetas < 3) throw ConfigError("friedman_hayman_check: need at least 3 angles");
  FriedmanHaymanReport rep;
  const int n = n_thetas;
  std::vector<double> lambdas(static_cast<std::size_t>(n), 0.0);
  // interior grid theta_k = pi k/(n+1); it is symmetric under theta -> pi-theta,
  // so the anticap eigenvalue is the mirror entry
  parallel_for(std::size_t(n), [&](std::size_t k) {
    lambdas[k] = cap_eigenvalue(kPi * double(k + 1) / double(n + 1), dim);
  });
  rep.points.resize(std::size_t(n));
  rep.min_sum = std::numeric_limits<double>::infinity();
  for (int k = 0; k < n; ++k) {
    CapSumPoint& p = rep.points[std::size_t(k)];
    p.theta = kPi * double(k + 1) / double(n + 1);
    p.lambda_cap = lambdas[std::size_t(k)];
    p.lambda_anticap = lambdas[std::size_t(n - 1 - k)];
    p.gamma_sum = gamma_exponent(p.lambda_cap, dim) + gamma_exponent(p.lambda_anticap, dim);
    if (p.gamma_sum < rep.min_sum) {
      rep.min_sum = p.gamma_sum;
      rep.argmin_theta = p.theta;
    }
  }
  rep.symmetric = true;
  for (int k = 0; k < n; ++k)
    if (rep.points[std::size_t(k)].gamma_sum != rep.points[std::size_t(n - 1 - k)].gamma_sum)
      rep.symmetric = false;
  return rep;
}

Vec operator_B(const CoefficientSpec& spec, const Vec& y, const Vec& v) {
  const double r = norm(y);
  if (r == 0.0) throw GeometryError("operator_B: undefined at the origin");
  if (std::abs(dot(v, y)) > 1e-12 * std::max(1.0, norm(v)) * r)
    throw GeometryError("operator_B: vector is not tangent to the sphere at y");
  const SymMatrix a = eval_matrix(spec, y);
  const Vec nu = (1.0 / r) * y;
  const Vec anu = matvec(a, nu);
  const double mu = dot(anu, nu);
  const double coef = dot(anu, v) / mu;
  Vec out = matvec(a, v);
  for (int i = 0; i < out.n; ++i) out[i] -= coef * anu[i];
  return out;
}

namespace {

// polar frame on the unit sphere with axis e_1:
// x(t, p) = (cos t, sin t cos p, sin t sin p)
Vec sphere_point(double t, double p) {
  return Vec::of(std::cos(t), std::sin(t) * std::cos(p), std::sin(t) * std::sin(p));
}

Vec frame_et(double t, double p) {
  return Vec::of(-std::sin(t), std::cos(t) * std::cos(p), std::cos(t) * std::sin(p));
}

Vec frame_ep(double p) { return Vec::of(0.0, -std::sin(p), std::cos(p)); }

struct SphereSide {
  const CoefficientSpec* spec;
  const std::function<double(const Vec&)>* u;
  double h = 0.0;  // intrinsic step

  double du_t(double t, double p) const {
    return ((*u)(sphere_point(t + h, p)) - (*u)(sphere_point(t - h, p))) / (2.0 * h);
  }
  double du_p(double t, double p) const {
    return ((*u)(sphere_point(t, p + h)) - (*u)(sphere_point(t, p - h))) / (2.0 * h);
  }
  // components of B grad_T u in the unit frame (e_t, e_p)
  void flux(double t, double p, double& ft, double& fp) const {
    const double st = std::sin(t);
    Vec grad_t = Vec::zero(3);
    const double gt = du_t(t, p), gp = du_p(t, p) / st;
    const Vec et = frame_et(t, p), ep = frame_ep(p);
    for (int i = 0; i < 3; ++i) grad_t[i] = gt * et[i] + gp * ep[i];
    const Vec bf = operator_B(*spec, sphere_point(t, p), grad_t);
    ft = dot(bf, et);
    fp = dot(bf, ep);
  }
  // div_T(B grad_T u) = (1/sin t) d_t(sin t F_t) + (1/sin t) d_p F_p
  double divergence(double t, double p) const {
    double ft1, fp1, ft2, fp2, ft3, fp3, ft4, fp4;
    flux(t + h, p, ft1, fp1);
    flux(t - h, p, ft2, fp2);
    flux(t, p + h, ft3, fp3);
    flux(t, p - h, ft4, fp4);
    const double st = std::sin(t);
    return (std::sin(t + h) * ft1 - std::sin(t - h) * ft2) / (2.0 * h * st) +
           (fp3 - fp4) / (2.0 * h * st);
  }
};

// orthonormal tangent frame spanned by the stereographic chart directions at
// phi(y); q_j = (w/2) dphi e_j with w = 1 + |y|^2
void chart_frame(const Vec& y, Vec& q1, Vec& q2, Vec& p) {
  const double w = 1.0 + y[0] * y[0] + y[1] * y[1];
  p = Vec::of(2.0 * y[0] / w, 2.0 * y[1] / w, (w - 2.0) / w);
  q1 = Vec::of(1.0 - 2.0 * y[0] * y[0] / w, -2.0 * y[0] * y[1] / w, 2.0 * y[0] / w);
  q2 = Vec::of(-2.0 * y[0] * y[1] / w, 1.0 - 2.0 * y[1] * y[1] / w, 2.0 * y[1] / w);
}

}  // namespace

StereoReport stereographic_divergence_check(const CoefficientSpec& spec,
                                            const std::function<double(const Vec&)>& u,
                                            const std::vector<int>& resolutions) {
  if (spec.dim != 3) throw ConfigError("stereographic check: needs a dim = 3 spec");
  if (resolutions.size() < 2)
    throw ConfigError("stereographic check: need at least two resolutions");
  StereoReport rep;
  const double half = 0.8;  // planar window [-half, half]^2

  for (int res : resolutions) {
    if (res < 8) throw ConfigError("stereographic check: resolution too small");
    const double hy = 2.0 * half / double(res);
    const int n = res + 1;
    // utilde and the chart metric factor on the planar grid
    std::vector<double> ut(std::size_t(n) * std::size_t(n));
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        Vec q1, q2, p;
        chart_frame(Vec::of(-half + i * hy, -half + j * hy), q1, q2, p);
        ut[std::size_t(j) * std::size_t(n) + std::size_t(i)] = u(p);
      }
    const auto at = [&](int i, int j) {
      return ut[std::size_t(j) * std::size_t(n) + std::size_t(i)];
    };
    // planar flux F = (1/4) M(y) grad utilde, M_{ab} = <q_a, B q_b>
    std::vector<double> f1(ut.size(), 0.0), f2(ut.size(), 0.0);
    for (int j = 1; j + 1 < n; ++j)
      for (int i = 1; i + 1 < n; ++i) {
        const Vec y = Vec::of(-half + i * hy, -half + j * hy);
        Vec q1, q2, p;
        chart_frame(y, q1, q2, p);
        const double g1 = (at(i + 1, j) - at(i - 1, j)) / (2.0 * hy);
        const double g2 = (at(i, j + 1) - at(i, j - 1)) / (2.0 * hy);
        const Vec bq1 = operator_B(spec, p, q1);
        const Vec bq2 = operator_B(spec, p, q2);
        const double m11 = dot(q1, bq1), m12 = dot(q1, bq2), m21 = dot(q2, bq1),
                     m22 = dot(q2, bq2);
        f1[std::size_t(j) * std::size_t(n) + std::size_t(i)] =
            0.25 * (m11 * g1 + m12 * g2);
        f2[std::size_t(j) * std::size_t(n) + std::size_t(i)] =
            0.25 * (m21 * g1 + m22 * g2);
      }

    SphereSide sphere{&spec, &u, 0.5 * hy};
    double max_gap = 0.0;
    std::vector<double> row_gap(std::size_t(n), 0.0);
    parallel_for(std::size_t(n), [&](std::size_t js) {
      const int j = int(js);
      if (j < 2 || j + 2 >= n) return;
      double worst = 0.0;
      for (int i = 2; i + 2 < n; ++i) {
        const Vec y = Vec::of(-half + i * hy, -half + j * hy);
        const double w = 1.0 + dot(y, y);
        const std::size_t c = std::size_t(j) * std::size_t(n) + std::size_t(i);
        const double div_plane =
            (f1[c + 1] - f1[c - 1]) / (2.0 * hy) +
            (f2[c + std::size_t(n)] - f2[c - std::size_t(n)]) / (2.0 * hy);
        const double rhs = w * w * div_plane;
        Vec q1, q2, p;
        chart_frame(y, q1, q2, p);
        const double t = std::acos(std::clamp(p[0], -1.0, 1.0));
        const double ph = std::atan2(p[2], p[1]);
        const double lhs = sphere.divergence(t, ph);
        worst = std::max(worst, std::abs(lhs - rhs));
      }
      row_gap[js] = worst;
    });
    for (double g : row_gap) max_gap = std::max(max_gap, g);
    rep.points.push_back({res, hy, max_gap});
  }

  const StereoPoint& a = rep.points[rep.points.size() - 2];
  const StereoPoint& b = rep.points.back();
  rep.order = std::log(a.max_gap / b.max_gap) /
              std::log(double(b.resolution) / double(a.resolution));
  return rep;
}

}  // namespace seglab
