#include "seglab/coefficients.hpp"

#include <cmath>
#include <nlohmann/json.hpp>

#include "seglab/errors.hpp"

namespace seglab {

void CoefficientSpec::validate() const {
  if (dim != 2 && dim != 3) throw ConfigError("coefficient spec: dim must be 2 or 3");
  if (lift_2d && dim != 3) throw ConfigError("coefficient spec: lift_2d requires dim = 3");
  if (box_half <= 0.0) throw ConfigError("coefficient spec: box_half must be positive");
  if (matrix_eps < 0.0) throw ConfigError("coefficient spec: matrix_eps must be >= 0");
  if (matrix_family == MatrixFamily::identity && matrix_eps != 0.0)
    throw ConfigError("coefficient spec: identity family takes matrix_eps = 0");
  if (matrix_family == MatrixFamily::diagonal_smooth && matrix_eps >= 1.0)
    throw ConfigError("coefficient spec: diagonal_smooth needs matrix_eps < 1");
  const int fam_dim = lift_2d ? 2 : dim;
  if (matrix_family == MatrixFamily::rotated_perturbation && matrix_eps * fam_dim >= 1.0)
    throw ConfigError("coefficient spec: rotated_perturbation needs matrix_eps * dim < 1");
  if (weight_base <= 0.0) throw ConfigError("coefficient spec: weight_base must be positive");
  if (reaction_d < 0.0) throw ConfigError("coefficient spec: reaction_d must be >= 0");
  if (reaction_m <= 0.0) throw ConfigError("coefficient spec: reaction_m must be positive");
  if (framed) {
    if (lift_2d) throw ConfigError("coefficient spec: framed excludes lift_2d");
    if (frame_center.n != dim || frame_S.n != dim || frame_Sinv.n != dim)
      throw ConfigError("coefficient spec: frame dimension mismatch");
    if (!(frame_scale > 0.0)) throw ConfigError("coefficient spec: frame_scale must be positive");
    if (!(frame_f_scale > 0.0) || !(frame_s_scale > 0.0))
      throw ConfigError("coefficient spec: frame reaction scales must be positive");
    if (min_eigenvalue(frame_S) <= 0.0)
      throw ConfigError("coefficient spec: frame_S must be positive definite");
    double inv_gap = 0.0;
    for (int i = 0; i < dim; ++i)
      for (int j = 0; j < dim; ++j) {
        double v = 0.0;
        for (int p = 0; p < dim; ++p) v += frame_S(i, p) * frame_Sinv(p, j);
        inv_gap = std::max(inv_gap, std::abs(v - (i == j ? 1.0 : 0.0)));
      }
    if (inv_gap > 1e-10)
      throw ConfigError("coefficient spec: frame_Sinv is not the inverse of frame_S");
  }
}

Vec CoefficientSpec::frame_point(const Vec& y) const {
  if (!framed) return y;
  return frame_center + frame_scale * matvec(frame_S, y);
}

CoefficientSpec CoefficientSpec::unframed() const {
  CoefficientSpec base = *this;
  base.framed = false;
  base.frame_center = Vec{};
  base.frame_scale = 1.0;
  base.frame_S = SymMatrix{};
  base.frame_Sinv = SymMatrix{};
  base.frame_f_scale = 1.0;
  base.frame_s_scale = 1.0;
  return base;
}

double CoefficientSpec::theta() const {
  // conjugation by Sinv with S^2 = A(c): <Sinv A Sinv v, v> >= theta |Sinv v|^2
  // and |Sinv v|^2 >= |v|^2 / ||S||^2 >= |v|^2 / norm_bound
  if (framed) {
    const CoefficientSpec base = unframed();
    return base.theta() / base.norm_bound();
  }
  // a lifted matrix is block-diag(A_2d, 1), so the 2d constants apply
  const int d = lift_2d ? 2 : dim;
  switch (matrix_family) {
    case MatrixFamily::identity: return 1.0;
    case MatrixFamily::diagonal_smooth: return 1.0 - matrix_eps;
    case MatrixFamily::rotated_perturbation: return 1.0 - matrix_eps * d;
  }
  return 1.0;
}

double CoefficientSpec::norm_bound() const {
  // ||Sinv A Sinv|| <= ||A|| / theta; the DA part gains frame_scale ||S||
  if (framed) {
    const CoefficientSpec base = unframed();
    const double m = base.norm_bound() / base.theta();
    return m * std::max(1.0, frame_scale * spectral_norm(frame_S));
  }
  const int d = lift_2d ? 2 : dim;
  switch (matrix_family) {
    case MatrixFamily::identity: return 1.0;
    case MatrixFamily::diagonal_smooth:
      return std::max(1.0 + matrix_eps, matrix_eps * std::sqrt(2.0 * d));
    case MatrixFamily::rotated_perturbation:
      return std::max(1.0 + matrix_eps * d, matrix_eps * std::pow(double(d), 1.5));
  }
  return 1.0;
}

double CoefficientSpec::closeness_scale() const {
  // ||Sinv (A(c + sSy) - A(c)) Sinv|| <= c_base s ||S|| ||Sinv||^2 |y|, and the
  // same constant covers the frame derivative d/dy_k = s Sinv (S e_k . DA) Sinv
  if (framed) {
    const CoefficientSpec base = unframed();
    const double sn = spectral_norm(frame_Sinv);
    return base.closeness_scale() * frame_scale * spectral_norm(frame_S) * sn * sn;
  }
  const int d = lift_2d ? 2 : dim;
  switch (matrix_family) {
    case MatrixFamily::identity: return 0.0;
    // diagonal: per entry |sin(x_k) cos(x_{k+1})| <= |x| and per-axis
    // derivative entries stay within eps
    case MatrixFamily::diagonal_smooth: return matrix_eps;
    // rotated: Frobenius bounds sqrt(6)|x| (2d) / 2 sqrt(3)|x| (3d) for S and
    // 2 / sqrt(6) for each axis derivative of S
    case MatrixFamily::rotated_perturbation:
      return matrix_eps * (d == 2 ? std::sqrt(6.0) : 2.0 * std::sqrt(3.0));
  }
  return 0.0;
}

double CoefficientSpec::weight_floor() const {
  // strict floor: constant family sits at weight_base, smooth family dips to
  // weight_base * (1 - 0.25 sin 1) > 0.75 * weight_base on the unit box
  return weight_family == WeightFamily::constant ? 0.9 * weight_base : 0.75 * weight_base;
}

namespace {

// diagonal family: A_kk = 1 + eps * sin(x_k) cos(x_{k+1 mod dim})
double diag_entry(const Vec& x, int k, int dim) {
  return std::sin(x[k]) * std::cos(x[(k + 1) % dim]);
}

// d/dx_m of diag_entry
double diag_entry_deriv(const Vec& x, int k, int dim, int m) {
  const int kp = (k + 1) % dim;
  double d = 0.0;
  if (m == k) d += std::cos(x[k]) * std::cos(x[kp]);
  if (m == kp) d += -std::sin(x[k]) * std::sin(x[kp]);
  return d;
}

// rotated family: A = Id + eps * S with S symmetric, S(0) = 0
double rot_entry(const Vec& x, int i, int j, int dim) {
  if (dim == 2) {
    if (i == 0 && j == 0) return std::sin(x[0] + x[1]);
    if (i == 1 && j == 1) return std::sin(x[1] - x[0]);
    return std::sin(x[0]) * std::cos(x[1]);  // (0,1)
  }
  if (i == j) {
    if (i == 0) return std::sin(x[0] + x[1]);
    if (i == 1) return std::sin(x[1] + x[2]);
    return std::sin(x[2] - x[0]);
  }
  const int a = std::min(i, j), b = std::max(i, j);
  if (a == 0 && b == 1) return std::sin(x[0]) * std::cos(x[1]);
  if (a == 0 && b == 2) return std::sin(x[2]) * std::cos(x[0]);
  return std::sin(x[1]) * std::cos(x[2]);  // (1,2)
}

double rot_entry_deriv(const Vec& x, int i, int j, int dim, int m) {
  if (dim == 2) {
    if (i == 0 && j == 0) return (m == 0 || m == 1) ? std::cos(x[0] + x[1]) : 0.0;
    if (i == 1 && j == 1) {
      if (m == 1) return std::cos(x[1] - x[0]);
      if (m == 0) return -std::cos(x[1] - x[0]);
      return 0.0;
    }
    if (m == 0) return std::cos(x[0]) * std::cos(x[1]);
    if (m == 1) return -std::sin(x[0]) * std::sin(x[1]);
    return 0.0;
  }
  if (i == j) {
    if (i == 0) return (m == 0 || m == 1) ? std::cos(x[0] + x[1]) : 0.0;
    if (i == 1) return (m == 1 || m == 2) ? std::cos(x[1] + x[2]) : 0.0;
    if (m == 2) return std::cos(x[2] - x[0]);
    if (m == 0) return -std::cos(x[2] - x[0]);
    return 0.0;
  }
  const int a = std::min(i, j), b = std::max(i, j);
  if (a == 0 && b == 1) {
    if (m == 0) return std::cos(x[0]) * std::cos(x[1]);
    if (m == 1) return -std::sin(x[0]) * std::sin(x[1]);
    return 0.0;
  }
  if (a == 0 && b == 2) {
    if (m == 2) return std::cos(x[2]) * std::cos(x[0]);
    if (m == 0) return -std::sin(x[2]) * std::sin(x[0]);
    return 0.0;
  }
  if (m == 1) return std::cos(x[1]) * std::cos(x[2]);
  if (m == 2) return -std::sin(x[1]) * std::sin(x[2]);
  return 0.0;
}

}  // namespace

namespace {

CoefficientSpec unlifted(const CoefficientSpec& spec) {
  CoefficientSpec flat = spec;
  flat.dim = 2;
  flat.lift_2d = false;
  return flat;
}

}  // namespace

SymMatrix eval_matrix(const CoefficientSpec& spec, const Vec& x) {
  if (spec.framed)
    return sandwich(spec.frame_Sinv, eval_matrix(spec.unframed(), spec.frame_point(x)));
  if (spec.lift_2d) {
    const SymMatrix a2 = eval_matrix(unlifted(spec), Vec::of(x[0], x[1]));
    SymMatrix a = SymMatrix::identity(3);
    a.set(0, 0, a2(0, 0));
    a.set(1, 1, a2(1, 1));
    a.set(0, 1, a2(0, 1));
    return a;
  }
  SymMatrix a = SymMatrix::identity(spec.dim);
  switch (spec.matrix_family) {
    case MatrixFamily::identity: break;
    case MatrixFamily::diagonal_smooth:
      for (int k = 0; k < spec.dim; ++k)
        a.set(k, k, 1.0 + spec.matrix_eps * diag_entry(x, k, spec.dim));
      break;
    case MatrixFamily::rotated_perturbation:
      for (int i = 0; i < spec.dim; ++i)
        for (int j = i; j < spec.dim; ++j)
          a.set(i, j, (i == j ? 1.0 : 0.0) + spec.matrix_eps * rot_entry(x, i, j, spec.dim));
      break;
  }
  return a;
}

SymMatrix eval_matrix_deriv(const CoefficientSpec& spec, const Vec& x, int k) {
  // chain rule through z = c + s S y: d/dy_k = s sum_m S(m,k) d/dz_m
  if (spec.framed) {
    const CoefficientSpec base = spec.unframed();
    const Vec z = spec.frame_point(x);
    SymMatrix acc = SymMatrix::zero(spec.dim);
    for (int m = 0; m < spec.dim; ++m) {
      const double w = spec.frame_scale * spec.frame_S(m, k);
      if (w != 0.0) acc = acc + w * eval_matrix_deriv(base, z, m);
    }
    return sandwich(spec.frame_Sinv, acc);
  }
  if (spec.lift_2d) {
    SymMatrix d = SymMatrix::zero(3);
    if (k < 2) {
      const SymMatrix d2 = eval_matrix_deriv(unlifted(spec), Vec::of(x[0], x[1]), k);
      d.set(0, 0, d2(0, 0));
      d.set(1, 1, d2(1, 1));
      d.set(0, 1, d2(0, 1));
    }
    return d;
  }
  SymMatrix d = SymMatrix::zero(spec.dim);
  switch (spec.matrix_family) {
    case MatrixFamily::identity: break;
    case MatrixFamily::diagonal_smooth:
      for (int j = 0; j < spec.dim; ++j)
        d.set(j, j, spec.matrix_eps * diag_entry_deriv(x, j, spec.dim, k));
      break;
    case MatrixFamily::rotated_perturbation:
      for (int i = 0; i < spec.dim; ++i)
        for (int j = i; j < spec.dim; ++j)
          d.set(i, j, spec.matrix_eps * rot_entry_deriv(x, i, j, spec.dim, k));
      break;
  }
  return d;
}

double eval_weight(const CoefficientSpec& spec, const Vec& x) {
  if (spec.framed) return eval_weight(spec.unframed(), spec.frame_point(x));
  if (spec.weight_family == WeightFamily::constant) return spec.weight_base;
  return spec.weight_base * (1.0 + 0.25 * std::sin(x[0]) * std::cos(x[1]));
}

Vec eval_weight_grad(const CoefficientSpec& spec, const Vec& x) {
  // gradient in frame coordinates: s S^T grad_z, and S is symmetric
  if (spec.framed)
    return spec.frame_scale *
           matvec(spec.frame_S, eval_weight_grad(spec.unframed(), spec.frame_point(x)));
  Vec g = Vec::zero(spec.dim);
  if (spec.weight_family == WeightFamily::smooth_positive) {
    g[0] = spec.weight_base * 0.25 * std::cos(x[0]) * std::cos(x[1]);
    g[1] = spec.weight_base * 0.25 * std::sin(x[0]) * (-std::sin(x[1]));
  }
  return g;
}

namespace {

// component modulation for the linear reaction family, |w_i| <= 1
double reaction_w(const Vec& x, int i) { return std::cos(x[0] + 0.7 * (i + 1)); }

}  // namespace

double eval_reaction(const CoefficientSpec& spec, int i, const Vec& x, double s) {
  if (spec.framed)
    return spec.frame_f_scale *
           eval_reaction(spec.unframed(), i, spec.frame_point(x), spec.frame_s_scale * s);
  switch (spec.reaction_family) {
    case ReactionFamily::zero: return 0.0;
    case ReactionFamily::linear: return spec.reaction_d * reaction_w(x, i) * s;
    case ReactionFamily::saturating: {
      const double q = s / spec.reaction_m;
      return spec.reaction_d * s / (1.0 + q * q);
    }
  }
  return 0.0;
}

double eval_reaction_ds(const CoefficientSpec& spec, int i, const Vec& x, double s) {
  if (spec.framed)
    return spec.frame_f_scale * spec.frame_s_scale *
           eval_reaction_ds(spec.unframed(), i, spec.frame_point(x), spec.frame_s_scale * s);
  switch (spec.reaction_family) {
    case ReactionFamily::zero: return 0.0;
    case ReactionFamily::linear: return spec.reaction_d * reaction_w(x, i);
    case ReactionFamily::saturating: {
      const double q2 = (s / spec.reaction_m) * (s / spec.reaction_m);
      return spec.reaction_d * (1.0 - q2) / ((1.0 + q2) * (1.0 + q2));
    }
  }
  return 0.0;
}

double eval_reaction_antiderivative(const CoefficientSpec& spec, int i, const Vec& x, double s) {
  // F(s) = int_0^s f, so the base antiderivative is rescaled by f_scale / s_scale
  if (spec.framed)
    return (spec.frame_f_scale / spec.frame_s_scale) *
           eval_reaction_antiderivative(spec.unframed(), i, spec.frame_point(x),
                                        spec.frame_s_scale * s);
  switch (spec.reaction_family) {
    case ReactionFamily::zero: return 0.0;
    case ReactionFamily::linear: return 0.5 * spec.reaction_d * reaction_w(x, i) * s * s;
    case ReactionFamily::saturating: {
      const double q = s / spec.reaction_m;
      return 0.5 * spec.reaction_d * spec.reaction_m * spec.reaction_m * std::log1p(q * q);
    }
  }
  return 0.0;
}

double eval_mu(const CoefficientSpec& spec, const Vec& x) {
  const double r = norm(x);
  if (r == 0.0) throw GeometryError("eval_mu: undefined at the origin");
  const Vec nu = (1.0 / r) * x;
  return quad_form(eval_matrix(spec, x), nu);
}

Vec eval_mu_grad(const CoefficientSpec& spec, const Vec& x) {
  const double r = norm(x);
  if (r == 0.0) throw GeometryError("eval_mu_grad: undefined at the origin");
  const Vec nu = (1.0 / r) * x;
  const SymMatrix a = eval_matrix(spec, x);
  const Vec anu = matvec(a, nu);
  const double mu = dot(anu, nu);
  Vec g = Vec::zero(spec.dim);
  for (int k = 0; k < spec.dim; ++k) {
    // d nu / d x_k = (e_k - nu nu_k)/r, so <A nu, d nu> = ((A nu)_k - mu nu_k)/r
    g[k] = quad_form(eval_matrix_deriv(spec, x, k), nu) + 2.0 * (anu[k] - mu * nu[k]) / r;
  }
  return g;
}

Vec vector_field_Z(const CoefficientSpec& spec, const Vec& x) {
  const double mu = eval_mu(spec, x);
  return (1.0 / mu) * matvec(eval_matrix(spec, x), x);
}

double div_Z(const CoefficientSpec& spec, const Vec& x) {
  const double mu = eval_mu(spec, x);
  const SymMatrix a = eval_matrix(spec, x);
  const Vec ax = matvec(a, x);
  double div_ax = a.trace();
  for (int k = 0; k < spec.dim; ++k) {
    const SymMatrix dk = eval_matrix_deriv(spec, x, k);
    for (int m = 0; m < spec.dim; ++m) div_ax += dk(k, m) * x[m];
  }
  return div_ax / mu - dot(ax, eval_mu_grad(spec, x)) / (mu * mu);
}

double div_A_grad_dist(const CoefficientSpec& spec, const Vec& x) {
  const double r = norm(x);
  if (r == 0.0) throw GeometryError("div_A_grad_dist: undefined at the origin");
  const Vec nu = (1.0 / r) * x;
  const SymMatrix a = eval_matrix(spec, x);
  double s = (a.trace() - quad_form(a, nu)) / r;
  for (int k = 0; k < spec.dim; ++k) {
    const SymMatrix dk = eval_matrix_deriv(spec, x, k);
    for (int m = 0; m < spec.dim; ++m) s += dk(k, m) * nu[m];
  }
  return s;
}

namespace {

double halton(unsigned long long idx, int base) {
  double f = 1.0, r = 0.0;
  while (idx > 0) {
    f /= base;
    r += f * double(idx % static_cast<unsigned long long>(base));
    idx /= static_cast<unsigned long long>(base);
  }
  return r;
}

}  // namespace

BoundsReport verify_coefficient_bounds(const CoefficientSpec& spec, int samples, double radius,
                                       unsigned seed) {
  spec.validate();
  if (radius <= 0.0 || radius > spec.box_half)
    throw GeometryError("verify_coefficient_bounds: radius must lie in ]0, box_half]");

  const SymMatrix a0 = eval_matrix(spec, Vec::zero(spec.dim));
  if (spectral_norm(a0 - SymMatrix::identity(spec.dim)) > 1e-14)
    throw GeometryError("verify_coefficient_bounds: A(0) != Id");

  BoundsReport rep;
  rep.samples = samples;
  rep.radius = radius;
  rep.seed = seed;
  rep.min_matrix_eigenvalue = 1e300;
  rep.min_weight = 1e300;

  static const int bases[3] = {2, 3, 5};
  unsigned long long idx = 1 + 7919ull * seed;
  int accepted = 0;
  while (accepted < samples) {
    Vec x = Vec::zero(spec.dim);
    for (int k = 0; k < spec.dim; ++k) x[k] = radius * (2.0 * halton(idx, bases[k]) - 1.0);
    ++idx;
    const double r = norm(x);
    if (r < 1e-3 * radius || r > radius) continue;
    ++accepted;

    const SymMatrix a = eval_matrix(spec, x);
    const double mu = eval_mu(spec, x);
    const double v1 = spectral_norm(a - SymMatrix::identity(spec.dim));
    const double v2 = std::abs(mu - 1.0);
    const double v3 = std::abs(1.0 / mu - 1.0);
    const double v4 = std::abs(1.0 / (mu * mu) - 1.0);

    rep.c_matrix_closeness = std::max(rep.c_matrix_closeness, v1 / r);
    rep.c_mu_closeness = std::max(rep.c_mu_closeness, v2 / r);
    rep.c_inv_mu_closeness = std::max(rep.c_inv_mu_closeness, v3 / r);
    // v <= C r / (1 - C r^2)  <=>  C >= v / (r + v r^2)
    rep.c_inv_mu_sq = std::max(rep.c_inv_mu_sq, v4 / (r + v4 * r * r));
    rep.c_mu_grad = std::max(rep.c_mu_grad, norm(eval_mu_grad(spec, x)));
    rep.c_radial_div =
        std::max(rep.c_radial_div, std::abs(div_A_grad_dist(spec, x) - (spec.dim - 1) / r));
    rep.c_div_Z = std::max(rep.c_div_Z, std::abs(div_Z(spec, x) - spec.dim) / r);

    const EigenSystem es = jacobi_eigensystem(a);
    rep.min_matrix_eigenvalue = std::min(rep.min_matrix_eigenvalue, es.values[0]);
    double danorm2 = 0.0;
    for (int k = 0; k < spec.dim; ++k) {
      const SymMatrix dk = eval_matrix_deriv(spec, x, k);
      for (int i = 0; i < spec.dim; ++i)
        for (int j = 0; j < spec.dim; ++j) danorm2 += dk(i, j) * dk(i, j);
    }
    rep.max_matrix_norm =
        std::max({rep.max_matrix_norm, spectral_norm(a), std::sqrt(danorm2)});
    rep.min_weight = std::min(rep.min_weight, eval_weight(spec, x));
  }

  if (rep.min_matrix_eigenvalue < spec.theta() - 1e-12)
    throw GeometryError("verify_coefficient_bounds: declared ellipticity floor violated");
  if (rep.max_matrix_norm > spec.norm_bound() + 1e-12)
    throw GeometryError("verify_coefficient_bounds: declared norm bound violated");
  if (rep.min_weight <= spec.weight_floor())
    throw GeometryError("verify_coefficient_bounds: declared weight floor violated");

  return rep;
}

std::string BoundsReport::to_json() const {
  nlohmann::ordered_json j;
  j["samples"] = samples;
  j["radius"] = radius;
  j["seed"] = seed;
  j["estimates"] = {
      {"matrix_closeness", c_matrix_closeness},
      {"mu_closeness", c_mu_closeness},
      {"inv_mu_closeness", c_inv_mu_closeness},
      {"inv_mu_squared", c_inv_mu_sq},
      {"mu_gradient", c_mu_grad},
      {"radial_divergence", c_radial_div},
      {"div_Z", c_div_Z},
  };
  j["min_matrix_eigenvalue"] = min_matrix_eigenvalue;
  j["max_matrix_norm"] = max_matrix_norm;
  j["min_weight"] = min_weight;
  return j.dump(2);
}

std::string matrix_family_name(MatrixFamily f) {
  switch (f) {
    case MatrixFamily::identity: return "identity";
    case MatrixFamily::diagonal_smooth: return "diagonal_smooth";
    case MatrixFamily::rotated_perturbation: return "rotated_perturbation";
  }
  return "identity";
}

std::string weight_family_name(WeightFamily f) {
  return f == WeightFamily::constant ? "constant" : "smooth_positive";
}

std::string reaction_family_name(ReactionFamily f) {
  switch (f) {
    case ReactionFamily::zero: return "zero";
    case ReactionFamily::linear: return "linear";
    case ReactionFamily::saturating: return "saturating";
  }
  return "zero";
}

MatrixFamily matrix_family_from_name(const std::string& s) {
  if (s == "identity") return MatrixFamily::identity;
  if (s == "diagonal_smooth") return MatrixFamily::diagonal_smooth;
  if (s == "rotated_perturbation") return MatrixFamily::rotated_perturbation;
  throw ConfigError("unknown matrix family: " + s);
}

WeightFamily weight_family_from_name(const std::string& s) {
  if (s == "constant") return WeightFamily::constant;
  if (s == "smooth_positive") return WeightFamily::smooth_positive;
  throw ConfigError("unknown weight family: " + s);
}

ReactionFamily reaction_family_from_name(const std::string& s) {
  if (s == "zero") return ReactionFamily::zero;
  if (s == "linear") return ReactionFamily::linear;
  if (s == "saturating") return ReactionFamily::saturating;
  throw ConfigError("unknown reaction family: " + s);
}

}  // namespace seglab
