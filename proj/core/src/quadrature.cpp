#include "seglab/quadrature.hpp"

#include <cmath>

#include "seglab/errors.hpp"

namespace seglab {

GaussRule gauss_legendre(int k, double a, double b) {
  if (k < 1) throw GeometryError("gauss_legendre: need at least one node");
  GaussRule rule;
  rule.nodes.resize(static_cast<std::size_t>(k));
  rule.weights.resize(static_cast<std::size_t>(k));
  // Newton on P_k with the three-term recurrence; standard initial guesses
  for (int i = 0; i < k; ++i) {
    double x = std::cos(M_PI * (i + 0.75) / (k + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = x;
      if (k == 1) p1 = x;
      for (int j = 2; j <= k; ++j) {
        const double p2 = ((2.0 * j - 1.0) * x * p1 - (j - 1.0) * p0) / j;
        p0 = p1;
        p1 = p2;
      }
      const double pk = (k == 1) ? x : p1;
      const double pkm1 = (k == 1) ? 1.0 : p0;
      dp = k * (x * pk - pkm1) / (x * x - 1.0);
      const double dx = pk / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    rule.nodes[static_cast<std::size_t>(k - 1 - i)] = x;
    rule.weights[static_cast<std::size_t>(k - 1 - i)] = 2.0 / ((1.0 - x * x) * dp * dp);
  }
  // affine map to [a, b]
  const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
  for (std::size_t i = 0; i < rule.nodes.size(); ++i) {
    rule.nodes[i] = mid + half * rule.nodes[i];
    rule.weights[i] *= half;
  }
  return rule;
}

double unit_sphere_area(int dim) { return dim == 2 ? 2.0 * M_PI : 4.0 * M_PI; }
double unit_ball_volume(int dim) { return dim == 2 ? M_PI : 4.0 * M_PI / 3.0; }

SphereQuadrature SphereQuadrature::circle(double r, int n_angles) {
  if (r <= 0.0) throw GeometryError("sphere quadrature: radius must be positive");
  if (n_angles < 8) throw GeometryError("sphere quadrature: too few angles");
  SphereQuadrature q;
  q.dim = 2;
  q.r = r;
  q.nodes.reserve(static_cast<std::size_t>(n_angles));
  const double w = 2.0 * M_PI * r / n_angles;
  for (int k = 0; k < n_angles; ++k) {
    const double phi = 2.0 * M_PI * k / n_angles;
    q.nodes.push_back(Vec::of(r * std::cos(phi), r * std::sin(phi)));
    q.weights.push_back(w);
  }
  return q;
}

SphereQuadrature SphereQuadrature::sphere(double r, int n_polar, int n_azimuth) {
  if (r <= 0.0) throw GeometryError("sphere quadrature: radius must be positive");
  if (n_polar < 4 || n_polar % 2 != 0)
    throw GeometryError("sphere quadrature: polar count must be even and >= 4");
  if (n_azimuth < 8) throw GeometryError("sphere quadrature: too few azimuth angles");
  SphereQuadrature q;
  q.dim = 3;
  q.r = r;
  const GaussRule lower = gauss_legendre(n_polar / 2, -1.0, 0.0);
  const GaussRule upper = gauss_legendre(n_polar / 2, 0.0, 1.0);
  std::vector<double> c, wc;
  c.insert(c.end(), lower.nodes.begin(), lower.nodes.end());
  c.insert(c.end(), upper.nodes.begin(), upper.nodes.end());
  wc.insert(wc.end(), lower.weights.begin(), lower.weights.end());
  wc.insert(wc.end(), upper.weights.begin(), upper.weights.end());

  q.nodes.reserve(c.size() * static_cast<std::size_t>(n_azimuth));
  const double waz = 2.0 * M_PI / n_azimuth;
  for (std::size_t iq = 0; iq < c.size(); ++iq) {
    const double x1 = c[iq];
    const double s = std::sqrt(std::max(0.0, 1.0 - x1 * x1));
    for (int k = 0; k < n_azimuth; ++k) {
      const double phi = 2.0 * M_PI * k / n_azimuth;
      q.nodes.push_back(Vec::of(r * x1, r * s * std::cos(phi), r * s * std::sin(phi)));
      q.weights.push_back(r * r * wc[iq] * waz);
    }
  }
  return q;
}

SphereQuadrature SphereQuadrature::make(int dim, double r) {
  if (dim == 2) return circle(r);
  if (dim == 3) return sphere(r);
  throw GeometryError("sphere quadrature: dim must be 2 or 3");
}

}  // namespace seglab
