#pragma once

#include <string>

#include "seglab/symmat.hpp"

namespace seglab {

// Closed-form coefficient families. Every matrix family satisfies A(0) = Id,
// uniform ellipticity, and Lipschitz entries; every weight family is bounded
// away from zero; every reaction family obeys |f_i(x,s)| <= d|s|.
enum class MatrixFamily { identity, diagonal_smooth, rotated_perturbation };
enum class WeightFamily { constant, smooth_positive };
enum class ReactionFamily { zero, linear, saturating };

struct CoefficientSpec {
  int dim = 2;  // 2 or 3
  MatrixFamily matrix_family = MatrixFamily::identity;
  double matrix_eps = 0.0;
  WeightFamily weight_family = WeightFamily::constant;
  double weight_base = 1.0;
  ReactionFamily reaction_family = ReactionFamily::zero;
  double reaction_d = 0.0;
  double reaction_m = 1.0;
  double box_half = 1.0;  // coefficients are only evaluated on [-box_half, box_half]^dim
  // constant extension of a 2d spec to dim = 3: the matrix family evaluates in
  // (x1, x2) and extends block-diagonally with a 1 in x3, weight and reactions
  // ignore x3 (they never read it)
  bool lift_2d = false;

  // affine evaluation frame written by the straightening and rescaling
  // operations. All families evaluate at z = frame_center + frame_scale * S y;
  // the matrix is conjugated to Sinv A(z) Sinv (so the frame origin sees the
  // identity when S^2 = A(frame_center)) and reactions pick up the scale pair
  // f(y, t) = frame_f_scale * f_base(z, frame_s_scale * t). Excludes lift_2d.
  bool framed = false;
  Vec frame_center;
  double frame_scale = 1.0;
  SymMatrix frame_S;
  SymMatrix frame_Sinv;
  double frame_f_scale = 1.0;
  double frame_s_scale = 1.0;

  void validate() const;  // ConfigError on out-of-range parameters

  Vec frame_point(const Vec& y) const;  // z = frame_center + frame_scale * S y
  CoefficientSpec unframed() const;     // base family with the frame cleared

  // declared hypothesis constants (conservative closed forms per family; a
  // framed spec inherits conjugation-degraded bounds from its base family)
  double theta() const;         // ellipticity floor
  double norm_bound() const;    // bound for ||A|| and ||DA||
  double weight_floor() const;  // strict lower bound for a(x)
  // smallest declared c with ||A(x)-Id|| <= c|x| and ||dA/dx_k|| <= c on the
  // box; exactly zero for the identity family. Framed specs scale the base
  // constant by frame_scale ||S|| ||Sinv||^2, which tends to zero with the
  // rescaling radius
  double closeness_scale() const;
};

SymMatrix eval_matrix(const CoefficientSpec&, const Vec& x);
SymMatrix eval_matrix_deriv(const CoefficientSpec&, const Vec& x, int k);  // dA/dx_k

double eval_weight(const CoefficientSpec&, const Vec& x);
Vec eval_weight_grad(const CoefficientSpec&, const Vec& x);

double eval_reaction(const CoefficientSpec&, int i, const Vec& x, double s);
double eval_reaction_ds(const CoefficientSpec&, int i, const Vec& x, double s);
// antiderivative in s with F_i(x, 0) = 0
double eval_reaction_antiderivative(const CoefficientSpec&, int i, const Vec& x, double s);

// mu(x) = <A(x) x, x> / |x|^2; GeometryError at x = 0
double eval_mu(const CoefficientSpec&, const Vec& x);
Vec eval_mu_grad(const CoefficientSpec&, const Vec& x);

// Z(x) = A(x) x / mu(x) and its closed-form divergence
Vec vector_field_Z(const CoefficientSpec&, const Vec& x);
double div_Z(const CoefficientSpec&, const Vec& x);

// div(A(x) grad |x|), used by the radial coefficient diagnostics
double div_A_grad_dist(const CoefficientSpec&, const Vec& x);

// Fitted constants for the seven radial coefficient estimates, sampled on a
// seeded low-discrepancy point set in a ball. Also verifies A(0) = Id and the
// declared theta / norm / weight-floor constants (GeometryError on violation).
struct BoundsReport {
  int samples = 0;
  double radius = 0.0;
  unsigned seed = 0;
  // smallest constants C that make each estimate hold on the sample set:
  double c_matrix_closeness = 0.0;   // ||A(x)-Id||      <= C |x|
  double c_mu_closeness = 0.0;       // |mu-1|           <= C |x|
  double c_inv_mu_closeness = 0.0;   // |1/mu - 1|       <= C |x|
  double c_inv_mu_sq = 0.0;          // |1/mu^2 - 1|     <= C|x| / (1 - C|x|^2)
  double c_mu_grad = 0.0;            // |grad mu|        <= C
  double c_radial_div = 0.0;         // |div(A grad|x|) - (dim-1)/|x|| <= C
  double c_div_Z = 0.0;              // |div Z - dim|    <= C |x|
  double min_matrix_eigenvalue = 0.0;
  double max_matrix_norm = 0.0;
  double min_weight = 0.0;

  std::string to_json() const;
};

BoundsReport verify_coefficient_bounds(const CoefficientSpec&, int samples = 4096,
                                       double radius = 0.5, unsigned seed = 17);

std::string matrix_family_name(MatrixFamily);
std::string weight_family_name(WeightFamily);
std::string reaction_family_name(ReactionFamily);
MatrixFamily matrix_family_from_name(const std::string&);    // ConfigError on unknown
WeightFamily weight_family_from_name(const std::string&);
ReactionFamily reaction_family_from_name(const std::string&);

}  // namespace seglab
