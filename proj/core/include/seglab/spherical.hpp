#pragma once

#include <functional>
#include <vector>

#include "seglab/coefficients.hpp"
#include "seglab/symmat.hpp"

namespace seglab {

// characteristic exponent of degree-gamma homogeneous functions: the positive
// root of g^2 + (dim-2) g = t, i.e. sqrt(((dim-2)/2)^2 + t) - (dim-2)/2.
// ConfigError for t below the branch point -((dim-2)/2)^2.
double gamma_exponent(double t, int dim);

// first Dirichlet eigenvalue of the Laplace-Beltrami operator on the geodesic
// cap {polar angle < theta0} of the unit sphere in R^dim:
//   -(sin^{dim-2} t f')' = lambda sin^{dim-2} t f,  f'(0) = 0, f(theta0) = 0,
// by bisection on a Richardson-extrapolated RK4 shot from the series start
// f(t) = 1 - lambda t^2 / (2 (dim-1)) + O(t^4). Relative accuracy ~1e-6.
// ConfigError for theta0 outside (0, pi) or dim outside {2, 3}.
double cap_eigenvalue(double theta0, int dim);

struct CapSumPoint {
  double theta = 0.0;
  double lambda_cap = 0.0;      // cap of opening theta
  double lambda_anticap = 0.0;  // complementary cap, opening pi - theta
  double gamma_sum = 0.0;       // gamma(lambda_cap) + gamma(lambda_anticap)
};

struct FriedmanHaymanReport {
  std::vector<CapSumPoint> points;
  double min_sum = 0.0;
  double argmin_theta = 0.0;
  bool symmetric = false;  // gamma_sum(theta) == gamma_sum(pi - theta) on the grid
};

// the antipodal-cap exponent sum over a symmetric interior grid of n_thetas
// angles; the sum is >= 2 with equality at the hemisphere split
FriedmanHaymanReport friedman_hayman_check(int n_thetas, int dim = 3);

// tangential part of A on the sphere through y:
//   B(y) v = A(y) v - (<A(y) nu, v> / mu(y)) A(y) nu,  nu = y/|y|
// maps tangent vectors to tangent vectors, symmetric and elliptic on the
// tangent space. GeometryError when v is not tangent to the sphere at y.
Vec operator_B(const CoefficientSpec&, const Vec& y, const Vec& v);

// Transport check for div(B grad_T u) under the stereographic chart
// phi : R^2 -> S^2, phi(y) = (2y, |y|^2 - 1)/(1 + |y|^2): the sphere side is
// evaluated by intrinsic polar-coordinate differences and compared on a
// compact planar window against
//   (1+|y|^2)^2 div( (1/4) M(y) grad (u o phi) ),  M = (dphi)^+ B(phi) dphi.
struct StereoPoint {
  int resolution = 0;
  double step = 0.0;
  double max_gap = 0.0;
};

struct StereoReport {
  std::vector<StereoPoint> points;
  double order = 0.0;  // log2 of the gap ratio across the last doubling
};

StereoReport stereographic_divergence_check(const CoefficientSpec&,
                                            const std::function<double(const Vec&)>& u,
                                            const std::vector<int>& resolutions);

}  // namespace seglab
