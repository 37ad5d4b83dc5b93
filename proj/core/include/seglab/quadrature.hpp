#pragma once

#include <vector>

#include "seglab/symmat.hpp"

namespace seglab {

// Gauss-Legendre rule on [a, b]; nodes ascending
struct GaussRule {
  std::vector<double> nodes;
  std::vector<double> weights;
};
GaussRule gauss_legendre(int k, double a = -1.0, double b = 1.0);

// Quadrature on the sphere |x| = r. Weights are positive and sum to the exact
// surface measure r^{dim-1} |S^{dim-1}|.
//   dim 2: uniform angles (trapezoid on the circle).
//   dim 3: product rule in (cos polar, azimuth) with polar axis e_1 and the
//          polar interval split into Gauss-Legendre panels [-1,0], [0,1]; the
//          seam lies on the x_1 = 0 great circle where segregated pairs kink.
struct SphereQuadrature {
  int dim = 2;
  double r = 1.0;
  std::vector<Vec> nodes;
  std::vector<double> weights;

  static SphereQuadrature circle(double r, int n_angles = 256);
  static SphereQuadrature sphere(double r, int n_polar = 48, int n_azimuth = 96);
  static SphereQuadrature make(int dim, double r);

  std::size_t size() const { return nodes.size(); }
};

double unit_sphere_area(int dim);  // |S^{dim-1}|: 2 pi, 4 pi
double unit_ball_volume(int dim);  // pi, 4 pi / 3

}  // namespace seglab
