#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "seglab/state.hpp"
#include "seglab/symmat.hpp"

namespace seglab {

// radial C^2 cutoff: 1 on |x| <= r_inner, 0 on |x| >= r_outer, quintic
// smoothstep in between, closed-form slope
struct Cutoff {
  double r_inner = 0.5;
  double r_outer = 1.0;

  void validate() const;  // ConfigError unless 0 < r_inner < r_outer
  double value(double t) const;
  double slope(double t) const;
  double at(const Vec& p) const { return value(norm(p)); }
  Vec grad(const Vec& p) const;
  double max_abs_slope() const { return 1.875 / (r_outer - r_inner); }
};

struct LipschitzReport {
  double L = 0.0;      // max over components and K-nodes of |grad(eta u_i)|
  double plain = 0.0;  // same without the cutoff: max |grad u_i|
  Vec argmax;          // node attaining L
  int comp = 0;        // component attaining L
  // min over other components of |u_comp - u_j| at the argmax; 0 when l = 1
  double interface_gap = 0.0;
};

// discrete max over nodes with |x| <= K_radius of |u_i grad(eta) + eta D u_i|
// with the closed-form cutoff gradient and centered field differences, so
// linear fields and constants are scored exactly. Needs K_radius + h <= box.
LipschitzReport lipschitz_seminorm(const GridState&, double K_radius,
                                   const Cutoff& cutoff = Cutoff{});

// max over node pairs in the ball and components of |u(x)-u(y)| / |x-y|^alpha;
// exhaustive when the ball holds at most max_pairs pairs, otherwise that many
// seeded samples
double holder_seminorm(const GridState&, double K_radius, double alpha,
                       std::uint64_t seed = 1, std::size_t max_pairs = 200000);

// pull u back through y -> x0 + S y onto grid_to by multilinear interpolation;
// GeometryError when the image of grid_to's box leaves the source box
GridField resample_affine(const GridField& u, const Grid& grid_to, const Vec& x0,
                          const SymMatrix& S);

// change of variables u~(y) = u(x0 + A(x0)^{1/2} y). The returned spec carries
// the affine frame, so its matrix is the identity at the origin and ellipticity
// and closeness rescale automatically. box_half_new = 0 picks the largest box
// whose image stays inside the source box. The identity family at the origin
// with the default box returns the input unchanged. GeometryError on framed or
// lifted input, non-interior centers, and boxes whose image escapes.
GridState straighten(const GridState&, const Vec& x0, double box_half_new = 0.0);

// conservative multilinear interpolation error bound for data resampled off
// this grid: (1/8) h^2 max over interior nodes of the second difference
// quotients summed over axes
double interp_error_estimate(const GridField& u);

struct BlowupParams {
  Vec x0;          // center in original coordinates; must match the input frame
  double L = 0.0;  // Lipschitz scale the zoom normalizes against
  int comp = 0;    // component attaining L
  Cutoff cutoff;   // cutoff the scale was measured with
};

struct BlowupFrame {
  Vec x0;
  double L = 0.0;
  double eta0 = 0.0;     // cutoff value at x0
  double r_scale = 0.0;  // zoom radius: eta0 sum_i u~_i(0) / L
  double M_comp = 0.0;   // rescaled coupling beta (L/eta0)^{2g} r^{2g+2}
  double norm_gap = 0.0;    // |sum_i v_i(0) - 1|
  double matrix_gap = 0.0;  // ||A_frame(0) - Id||
  // audit of w_i(y) = eta(q(y))/eta0 * v_i(y) with q the composed frame point:
  // max |D w_i| over the ball 0.45 * box and |D w_comp| at the origin
  double vbar_grad_max = 0.0;
  double vbar_grad_origin = 0.0;
  GridState state;  // rescaled fields; spec carries the composed frame,
                    // sys.beta carries M_comp
};

// zoom v_i(y) = eta0 u~_i(r y) / (L r) onto the node-aligned grid (same node
// count, box_half / r), so node values transfer exactly and the frequency and
// height functions obey N(v, s) = N(u~, r s) and
// H(v, s) = (eta0 / (L r))^2 H(u~, r s) to rounding. The coefficient frame
// composes multiplicatively and the reaction scales absorb the zoom.
// GeometryError when L, eta0, or the zoom radius degenerate.
BlowupFrame blowup_scale(const GridState& straightened, const BlowupParams&);

struct SegregationReport {
  int l = 0;
  // l x l row-major, diagonal zero
  std::vector<double> sup_overlap;  // sup over K-nodes of u_i u_j
  std::vector<double> interaction;  // |beta| sum_K a |u_i|^{g+1} |u_j|^{g+1} h^dim
  double max_overlap = 0.0;
  double max_interaction = 0.0;
};

SegregationReport segregation_metrics(const GridState&, double K_radius);

// zoom-out v~(y) = v(rho y) / sqrt(H(rho)) with H(rho) the total height
// function, node-aligned like blowup_scale, so H(v~, 1) = 1 to rounding.
// Requires rho + h <= box_half; GeometryError when H degenerates.
GridState blowdown_scale(const GridState&, double rho);

struct DirectionFit {
  Vec direction;
  double gamma_pos = 0.0;  // coefficient on <x,e>^+ for component 1
  double gamma_neg = 0.0;  // coefficient on <x,e>^- for component 2
  double residual = 0.0;   // relative l2 misfit over unit-ball nodes
};

// least-squares fit of (g+ <x,e>^+, g- <x,e>^-) to the first two components
// over nodes in the unit ball, scanned over n_dirs directions and locally
// refined by bisected angular steps
DirectionFit blowdown_direction_fit(const GridState&, int n_dirs = 64);

}  // namespace seglab
