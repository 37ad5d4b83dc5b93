#pragma once

#include <string>
#include <vector>

#include "seglab/grid.hpp"
#include "seglab/state.hpp"

namespace seglab {

// geometric radius ladder for the radial diagnostics
struct RadialLadder {
  std::vector<double> radii;
  double ratio = 1.05;

  // radii r_min * ratio^k up to and including the last value <= r_max;
  // GeometryError unless 0 < r_min < r_max
  static RadialLadder geometric(double r_min, double r_max, double ratio = 1.05);
};

// ladder from 4h to box_fraction * box_half, capped so every H evaluation at
// r * ratio stays a grid spacing inside the box
RadialLadder default_ladder(const Grid&, double box_fraction = 0.85, double ratio = 1.05);

// H_i(r) = r^{1-dim} \int_{dB_r} mu u_i^2 dsigma with mu = <A x, x>/|x|^2
double compute_H(const GridState&, int i, double r);

// E_i(r) in its two forms. For exact solutions they coincide:
//   boundary: r^{2-dim} \int_{dB_r} u_i <A grad u_i, nu> dsigma
//   volume:   r^{2-dim} \int_{B_r} (<A grad u_i, grad u_i> - f_i u_i
//               - sum_{j!=i} a beta |u_j|^{g+1} |u_i|^{g+1}) dx
// The surface quadrature carries only interpolation error; the volume form
// pays O((h/r)^2) for the smoothed ball cutoff, so the boundary form feeds
// the frequency and the volume form cross-checks it.
double compute_E_boundary(const GridState&, int i, double r);
double compute_E_volume(const GridState&, int i, double r);

// sum_i E_i(boundary) / sum_i H_i; GeometryError when the denominator is tiny
double almgren_quotient(const GridState&, double r);

// exact radial derivative of H via the polar parametrization:
// H'(r) = r^{1-dim} \int_{dB_r} (<grad mu, nu> u_i^2 + 2 mu u_i <grad u_i, nu>) dsigma
double h_prime_analytic(const GridState&, int i, double r);

// relative gap of the Rellich-type multiplier identity with Z = A x / mu,
// summed over components; both sides scale like r^dim
//   r \int_{dB_r} <A grad u, grad u>
//   = 2 r \int_{dB_r} <A grad u, nu>^2 / mu + 2 \int_{B_r} g <Z, grad u>
//     - 2 \int_{B_r} <A grad u, (DZ) grad u> + \int_{B_r} <A grad u, grad u> div Z
//     + \int_{B_r} <(Z . grad A) grad u, grad u>
// where g is the full reaction side of the system evaluated on the fields
double pohozaev_gap(const GridState&, double r);

// largest r such that (frequency(s)+1) e^{c s} < 2 - s holds on [radii.front(), r],
// with a linear interpolation of the first crossing; returns radii.front() when
// the condition fails immediately and radii.back() when it never fails
double threshold_radius(const std::vector<double>& radii,
                        const std::vector<double>& nplus1, double c);

struct FrequencyPoint {
  double r = 0.0;
  std::vector<double> H_i;
  double H = 0.0;
  double E_volume = 0.0;
  double E_boundary = 0.0;
  double frequency = 0.0;  // E_boundary / H
  double h_prime_loglog = 0.0;
  double h_prime_analytic = 0.0;
  double dH_residual = 0.0;  // |H' - 2E_boundary/r| / H with the log-log H'
  double pohozaev_gap = 0.0;
};

struct FrequencyReport {
  std::vector<FrequencyPoint> points;
  // smallest constants that make the fitted properties hold on the ladder:
  double c_dH = 0.0;       // max of dH_residual
  double c_freq = 0.0;     // (frequency+1) e^{c r} nondecreasing, adjacent pairs
  double c_H = 0.0;        // H e^{c r} nondecreasing, adjacent pairs
  double doubling_gap = 0.0;  // integrated form: max_k |d ln H - 2 N d ln r| - c_dH dr
  double min_H = 0.0;
  double min_nplus1 = 0.0;

  // columns: r, H_1..H_l, H, E_vol, E_bdy, N, dH_residual, pohozaev_gap
  void write_csv(const std::string& path) const;
};

// evaluates every ladder diagnostic in one sweep; volume integrals are shared
// bucketed passes over the grid, surface integrals are per-radius quadratures
FrequencyReport frequency_report(const GridState&, const RadialLadder&);

}  // namespace seglab
