#pragma once

#include <array>
#include <vector>

#include "seglab/grid.hpp"
#include "seglab/state.hpp"

namespace seglab {

// quintic smoothstep: rises 0 -> 1 on [0,1] with zero first and second
// derivatives at both ends
double quintic_rise(double t);
// radial bump quintic_rise(1 - |d|), peak 1 at d = 0, support |d| <= 1
double quintic_bump(double d);

// Dirichlet bump on one box face; nodes on that face get
// amplitude * quintic_bump(|t - center| / width) in the in-face coordinates
struct FaceBump {
  int axis = 0;
  int side = -1;  // -1: face at -box_half, +1: face at +box_half
  double amplitude = 1.0;
  double width = 0.5;
  std::array<double, 2> center{0.0, 0.0};
};
void apply_face_bump(GridField& g, const FaceBump& bump);

struct SolveOptions {
  double tol = 1e-10;        // relative residual target per continuation stage
  int max_newton = 60;       // Newton iterations per stage
  int max_backtrack = 40;
  double beta_ratio = 10.0;  // geometric step of the |beta| continuation
  int max_stage_splits = 8;  // bisections of a stage that fails to converge
  bool use_continuation = true;
  // optional frozen source terms s_i(x), one field per component
  const std::vector<GridField>* extra_source = nullptr;
};

struct SolveInfo {
  bool converged = false;
  int newton_iterations = 0;  // total across continuation stages
  int gradient_fallbacks = 0;
  std::vector<double> beta_path;
  std::vector<double> residual_history;
  double final_residual = 0.0;
  double final_energy = 0.0;
  double min_value = 0.0;  // smallest field value before the final dust clamp
};

// Energy of the competition functional at the state's fields. The diffusion
// part is the multilinear finite-element form of <A grad u, grad u> (2^dim
// Gauss points per cell), reaction and interaction are nodal sums over
// interior nodes, so system_residual is the exact gradient of this sum with
// respect to the interior values, scaled by h^dim.
double system_energy(const GridState&, const std::vector<GridField>* source = nullptr);

// PDE-scaled gradient per component: (K u_i)/h^dim - f_i(x, u_i) - s_i
//   - beta a(x) |u_i|^{gamma-1} u_i sum_{j != i} |u_j|^{gamma+1},
// zero on boundary rows
std::vector<GridField> system_residual(const GridState&,
                                       const std::vector<GridField>* source = nullptr);

// ||R||_2 / max(1, ||diffusion||_2 + ||reaction + source||_2 + ||interaction||_2),
// all norms over interior nodes of all components
double relative_residual(const GridState&, const std::vector<GridField>* source = nullptr);

// Damped Newton on the energy with geometric continuation in beta. Boundary
// nodes of state.u are Dirichlet data and stay fixed; interior nodes are the
// unknowns and the given values seed the first stage. Throws SolveError when
// some stage fails even after splitting. On success clamps negative dust
// (> -1e-8 * max) to zero and marks the state solution_like when l >= 2.
SolveInfo solve_system(GridState&, const SolveOptions& = {});

}  // namespace seglab
