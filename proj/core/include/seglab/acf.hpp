#pragma once

#include <array>
#include <cstddef>
#include <string>
#include <vector>

#include "seglab/almgren.hpp"
#include "seglab/state.hpp"

namespace seglab {

// Constant extension of a 2d state in x3: u(x1,x2,x3) = u(x1,x2) on the
// cubical grid with the same spacing, spec lifted via lift_2d. Every
// functional in this header assumes the 3d frame (the fundamental weight
// |y|^{2-dim} needs dim >= 3), so 2d inputs pass through here first.
GridState lift_to_frame3(const GridState&);

struct AcfParams {
  double M = 0.0;             // competition scale in J and Lambda, <= 0
  double eta = 0.24;          // correction exponent, in (0, 1/4)
  double alpha = 0.0;         // fundamental-correction multiplier
  double c = 0.0;             // coefficient-closeness scale; 0: spec closeness_scale()
  double eps = 0.0;           // reaction-smallness scale; 0: fitted from the state
  double delta = 0.05;        // margin required by the (h1) window
  double lambda_cap = 50.0;   // (h3) trace-mass comparability ceiling
  double w_floor = 1e-4;      // (h3) trace-mass lower bound
  double doubling_cap = 8.0;  // (h5) ceiling for m_i(r rho) / m_i(r)
  double h4_cap = 0.5;        // (h4) ceiling for c * r
  double violation_tol = 1e-2;  // allowed per-step drop of the corrected log-product
};

// J_i = int_{B_r} (<A grad u_i, grad u_i> - M a u_1^2 u_2^2
//                  - u_i f_i(y, u_i)) |y|^{2-dim} dy
// for the component pair (0, 1), via the fundamental-weight radial sums
std::array<double, 2> compute_J(const GridState&, double r, double M);
std::vector<std::array<double, 2>> compute_J(const GridState&, const std::vector<double>& radii,
                                             double M);

// Lambda_i = r^2 int_{dB_r} (<B grad_T u_i, grad_T u_i> - M a u_1^2 u_2^2
//                            - u_i f_i) dsigma
//            / int_{dB_r} (1 + alpha r c) mu u_i^2 dsigma
// Surface gradients are taken inside interpolation cells, so exactly
// segregated piecewise-multilinear pairs integrate without kink smearing.
// GeometryError when a trace mass degenerates
std::array<double, 2> compute_Lambda(const GridState&, double r, double M, double alpha,
                                     double c);

// smallest alpha >= 0 with
//   int_{B_r} u_i^2 div(A grad |y|^{2-dim}) dy
//     <= alpha c (dim-2) r^{2-dim} int_{dB_r} mu u_i^2 dsigma
// at every ladder radius; the left side is evaluated in the integrated-by-
// parts form, infinity when c = 0 and some left side is positive
double fundamental_correction_alpha(const GridState&, int i, const RadialLadder&, double c);

// gamma(x1) + gamma(x2) for the normalized sphere quotients of the pair (0,1):
//   x_i = r^2 int (<B grad_T u_i, grad_T u_i> + k a u_1^2 u_2^2)
//         / int (1 + alpha ctilde) mu u_i^2  -  eps
double gamma_sum_on_sphere(const GridState&, double r, double k, double eps, double ctilde,
                           double alpha);

struct AcfPoint {
  double r = 0.0;
  double J1 = 0.0, J2 = 0.0;
  double product = 0.0;  // J1 J2 / r^4
  double Lambda1 = 0.0, Lambda2 = 0.0;
  double corrected = 0.0;  // product * exp(C phi(r)), filled by the certificate
  double m1 = 0.0, m2 = 0.0;  // r^{1-dim} int_{dB_r} mu u_i^2
  std::array<bool, 7> h{};    // conditions (h0)..(h6) at this radius
  bool all_h() const;
};

struct AcfProfile {
  std::vector<AcfPoint> points;
  AcfParams params;  // as supplied
  double c_used = 0.0;
  double eps_used = 0.0;
  // extremal constants achieved on the ladder:
  double lambda_star = 0.0;    // worst trace-mass ratio of the pair
  double w_star = 0.0;         // smallest trace mass
  double doubling_star = 0.0;  // worst m_i(r rho) / m_i(r)
  // columns: r, J1, J2, product, Lambda1, Lambda2, corrected_product, h0..h6
  void write_csv(const std::string& path) const;
};

// evaluates J, Lambda, trace masses, and the (h0)..(h6) flags on the ladder;
// corrected products are zero until a certificate fits C
AcfProfile acf_profile(const GridState&, const RadialLadder&, const AcfParams&);

struct AcfCertificate {
  bool certified = false;          // found an all-h run of at least 2 radii
  std::size_t begin = 0, end = 0;  // certified index range [begin, end)
  // smallest C >= 0 with ln product increasing up to violation_tol per step
  // after adding C * phi, phi(r) = -|M|^{-eta} r^{-2 eta} + eps r^2 + c r
  // (the |M| term is dropped when M = 0: no competition, nothing to correct)
  double C_star = 0.0;
  double max_violation = 0.0;  // worst residual drop after the correction
  std::string skipped_reason;  // nonempty when not certified
};

// fits C_star on the longest all-h run and fills points[k].corrected
AcfCertificate acf_monotonicity_report(AcfProfile&);

}  // namespace seglab
