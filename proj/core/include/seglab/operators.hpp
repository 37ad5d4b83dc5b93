#pragma once

#include <vector>

#include "seglab/coefficients.hpp"
#include "seglab/grid.hpp"
#include "seglab/quadrature.hpp"

namespace seglab {

// -div(A(x) grad u) over interior nodes via conservative face fluxes; A is
// evaluated at face midpoints, tangential face derivatives are averaged
// centered differences. Boundary rows of the result stay zero.
GridField apply_operator(const CoefficientSpec&, const GridField& u);

// centered differences inside, 2-point one-sided on the faces
std::vector<GridField> gradient(const GridField& u);

// <A grad u, grad u> as a node density. Squared axis derivatives use the mean
// of the two adjacent face difference quotients squared, which is exact on
// columns across an axis-aligned kink and O(h^2) on smooth fields; cross terms
// use centered differences.
GridField energy_density(const CoefficientSpec&, const GridField& u);

// du/dx_h * du/dx_l as a node density, same facing rules as energy_density
GridField grad_product_density(const GridField& u, int h_axis, int l_axis);

// gradient of the multilinear interpolant by centered differences with the
// given step (default: one grid spacing)
Vec interp_gradient(const GridField& u, const Vec& p, double step = 0.0);

std::vector<double> sphere_trace(const GridField& u, const SphereQuadrature& q);

struct TangentialSplit {
  Vec tangential;
  double normal = 0.0;  // signed component along y/|y|
};
TangentialSplit tangential_split(const Vec& g, const Vec& y);

double surface_integral(const std::vector<double>& values, const SphereQuadrature& q);

// \int_{B_r} f dx with a C^1 radial cutoff of width 2h replacing the sharp
// indicator; requires r + h <= box_half
double volume_integral_ball(const GridField& f, double r);

// one pass over nodes accumulating the ball integral for every radius in the
// ascending ladder
std::vector<double> radial_volume_sums(const GridField& f, const std::vector<double>& radii);

// same, with the fundamental-solution weight |y|^{2-dim}; in dim 3 the origin
// node is excised and re-added as f(0) * \int_{B_req} |y|^{-1} dy over the
// equal-volume ball of one cell, 2 pi r_eq^2 with r_eq = h (3/(4pi))^{1/3}
std::vector<double> radial_volume_sums_fundamental(const GridField& f,
                                                   const std::vector<double>& radii);

// smoothed ball indicator used by the volume integrals
double ball_cutoff(double dist, double r, double h);

}  // namespace seglab
