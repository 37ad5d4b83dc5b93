#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <vector>

#include "seglab/almgren.hpp"
#include "seglab/blowup.hpp"
#include "seglab/coefficients.hpp"
#include "seglab/errors.hpp"
#include "seglab/state.hpp"
#include "seglab/symmat.hpp"

using namespace seglab;

namespace {

constexpr double kPi = 3.14159265358979323846;

template <class F>
GridField field_of(const Grid& g, F&& f) {
  return GridField::sample(g, [&](const Vec& x) { return f(x); });
}

CoefficientSpec plain_spec(int dim, double box_half) {
  CoefficientSpec sp;
  sp.dim = dim;
  sp.box_half = box_half;
  return sp;
}

// smooth positive two-component state on a diagonal-family spec; the workhorse
// input for the straighten / zoom identity checks
GridState smooth_pair_state(int n = 97) {
  const Grid g = Grid::make(2, 1.5, n);
  CoefficientSpec sp = plain_spec(2, 1.5);
  sp.matrix_family = MatrixFamily::diagonal_smooth;
  sp.matrix_eps = 0.08;
  sp.weight_family = WeightFamily::smooth_positive;
  sp.weight_base = 1.2;
  sp.reaction_family = ReactionFamily::linear;
  sp.reaction_d = 0.3;
  SystemConfig sys{2, 1.0, -1.0};
  std::vector<GridField> u;
  u.push_back(field_of(g, [](const Vec& x) {
    return std::exp(0.4 * x[0]) * (1.1 + 0.5 * std::sin(1.2 * x[1]));
  }));
  u.push_back(field_of(g, [](const Vec& x) {
    return 1.4 + 0.3 * std::cos(x[0] + 0.7 * x[1]);
  }));
  return GridState::solution(g, sp, sys, std::move(u));
}

}  // namespace

TEST_SUITE("blowup") {

TEST_CASE("cutoff plateau, seams, and closed-form slope") {
  const Cutoff eta;
  CHECK(eta.value(0.0) == 1.0);
  CHECK(eta.value(0.5) == 1.0);
  CHECK(eta.value(1.0) == 0.0);
  CHECK(eta.value(2.0) == 0.0);
  CHECK(eta.value(0.75) == doctest::Approx(0.5).epsilon(1e-14));
  CHECK(eta.slope(0.75) == doctest::Approx(-3.75).epsilon(1e-14));
  CHECK(eta.max_abs_slope() == doctest::Approx(3.75).epsilon(1e-14));
  CHECK(eta.slope(0.49) == 0.0);
  CHECK(eta.slope(1.01) == 0.0);

  // the smoothstep meets both plateaus to second order: the one-sided gaps
  // shrink like d^3 for the value, d^2 for the slope, and d for the curvature
  const double d = 1e-6;
  for (double seam : {0.5, 1.0}) {
    CHECK(std::abs(eta.value(seam + d) - eta.value(seam - d)) < 1e-11);
    CHECK(std::abs(eta.slope(seam + d) - eta.slope(seam - d)) < 5e-10);
    const double curv_in = (eta.slope(seam) - eta.slope(seam - d)) / d;
    const double curv_out = (eta.slope(seam + d) - eta.slope(seam)) / d;
    CHECK(std::abs(curv_in - curv_out) < 1e-3);
  }

  // slope integrates the drop from 1 to 0
  const int m = 20000;
  double acc = 0.0;
  for (int i = 0; i < m; ++i) acc += eta.slope(0.5 + (i + 0.5) * 0.5 / m) * (0.5 / m);
  CHECK(acc == doctest::Approx(-1.0).epsilon(1e-8));

  // gradient points inward radially
  const Vec gr = eta.grad(Vec::of(0.6, 0.0));
  CHECK(gr[0] == doctest::Approx(eta.slope(0.6)).epsilon(1e-14));
  CHECK(gr[1] == 0.0);
  CHECK(norm(eta.grad(Vec::of(0.1, 0.1))) == 0.0);

  CHECK_THROWS_AS((Cutoff{0.0, 1.0}.validate()), ConfigError);
  CHECK_THROWS_AS((Cutoff{0.7, 0.7}.validate()), ConfigError);
  CHECK_THROWS_AS((Cutoff{0.9, 0.4}.validate()), ConfigError);
}

TEST_CASE("resample through affine maps") {
  const Grid src = Grid::make(2, 2.0, 81);

  SUBCASE("axis scaling against direct evaluation") {
    // u~(y) = u(2 y_1, y_2); linear data makes multilinear interpolation exact
    const GridField u = field_of(src, [](const Vec& x) { return 3.0 * x[0] - 2.0 * x[1]; });
    SymMatrix S = SymMatrix::identity(2);
    S.set(0, 0, 2.0);
    const Grid dst = Grid::make(2, 0.9, 41);
    const GridField out = resample_affine(u, dst, Vec::zero(2), S);
    for (int j = 0; j < dst.n; ++j)
      for (int i = 0; i < dst.n; ++i) {
        const Vec y = dst.node(i, j);
        CHECK(out.at(i, j) == doctest::Approx(6.0 * y[0] - 2.0 * y[1]).epsilon(1e-13));
      }

    // smooth data lands within the tracked interpolation error
    const GridField us = field_of(src, [](const Vec& x) {
      return std::sin(1.3 * x[0]) * std::cos(0.8 * x[1]);
    });
    const double tol = interp_error_estimate(us);
    CHECK(tol > 0.0);
    const GridField outs = resample_affine(us, dst, Vec::zero(2), S);
    double worst = 0.0;
    for (int j = 0; j < dst.n; ++j)
      for (int i = 0; i < dst.n; ++i) {
        const Vec y = dst.node(i, j);
        worst = std::max(worst, std::abs(outs.at(i, j) -
                                         std::sin(2.6 * y[0]) * std::cos(0.8 * y[1])));
      }
    CHECK(worst <= 1.05 * tol);
  }

  SUBCASE("translation is exact on linear data") {
    const GridField u = field_of(src, [](const Vec& x) { return 0.7 + x[0] + 0.5 * x[1]; });
    const Grid dst = Grid::make(2, 0.8, 33);
    const Vec x0 = Vec::of(0.6, -0.9);
    const GridField out = resample_affine(u, dst, x0, SymMatrix::identity(2));
    for (int j = 0; j < dst.n; ++j)
      for (int i = 0; i < dst.n; ++i) {
        const Vec y = dst.node(i, j);
        CHECK(out.at(i, j) ==
              doctest::Approx(0.7 + (0.6 + y[0]) + 0.5 * (-0.9 + y[1])).epsilon(1e-13));
      }
  }

  SUBCASE("image escaping the source box is refused") {
    const GridField u = field_of(src, [](const Vec& x) { return x[0]; });
    SymMatrix S = SymMatrix::identity(2);
    S.set(0, 0, 2.0);
    // 2 * 1.1 > 2: the first axis pokes out
    CHECK_THROWS_AS(resample_affine(u, Grid::make(2, 1.1, 17), Vec::zero(2), S), GeometryError);
    CHECK_THROWS_AS(resample_affine(u, Grid::make(2, 0.9, 17), Vec::of(0.3, 0.0), S),
                    GeometryError);
    CHECK_THROWS_AS(resample_affine(u, Grid::make(3, 0.5, 17), Vec::zero(3),
                                    SymMatrix::identity(3)),
                    GeometryError);
  }
}

TEST_CASE("straighten short circuit, frame invariants, and box fitting") {
  SUBCASE("identity family at the origin returns the input unchanged") {
    const Grid g = Grid::make(2, 1.0, 33);
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return std::sin(x[0]) + x[1] * x[1]; }));
    const GridState st = GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0},
                                               std::move(u));
    const GridState out = straighten(st, Vec::zero(2));
    CHECK_FALSE(out.spec.framed);
    CHECK(out.grid.box_half == st.grid.box_half);
    REQUIRE(out.u[0].v.size() == st.u[0].v.size());
    for (std::size_t k = 0; k < out.u[0].v.size(); ++k) CHECK(out.u[0].v[k] == st.u[0].v[k]);
  }

  SUBCASE("frame matrix is the identity at the origin") {
    const GridState st = smooth_pair_state(49);
    const Vec x0 = Vec::of(0.3, -0.2);
    const GridState out = straighten(st, x0);
    REQUIRE(out.spec.framed);
    CHECK(out.spec.frame_scale == 1.0);
    CHECK(spectral_norm(eval_matrix(out.spec, Vec::zero(2)) - SymMatrix::identity(2)) <= 1e-14);

    // declared framed constants survive a sampling audit
    CHECK_NOTHROW(verify_coefficient_bounds(out.spec, 512, 0.4 * out.grid.box_half, 3));

    // distance to the identity grows at most linearly with the declared slope
    const double c = out.spec.closeness_scale();
    for (int k = 1; k <= 40; ++k) {
      const Vec y = Vec::of(0.02 * k, -0.013 * k);
      const double gap = spectral_norm(eval_matrix(out.spec, y) - SymMatrix::identity(2));
      CHECK(gap <= c * norm(y) * (1.0 + 1e-9) + 1e-13);
    }
  }

  SUBCASE("three dimensional rotated family straightens too") {
    const Grid g = Grid::make(3, 1.0, 25);
    CoefficientSpec sp = plain_spec(3, 1.0);
    sp.matrix_family = MatrixFamily::rotated_perturbation;
    sp.matrix_eps = 0.05;
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return 1.0 + 0.2 * x[0] * x[1] + 0.1 * x[2]; }));
    const GridState st =
        GridState::diagnostic(g, sp, SystemConfig{1, 1.0, 0.0}, std::move(u));
    const GridState out = straighten(st, Vec::of(0.2, -0.1, 0.25));
    REQUIRE(out.spec.framed);
    CHECK(spectral_norm(eval_matrix(out.spec, Vec::zero(3)) - SymMatrix::identity(3)) <= 1e-14);
  }

  SUBCASE("automatic box is maximal for the corner check") {
    const GridState st = smooth_pair_state(49);
    const Vec x0 = Vec::of(0.7, 0.6);
    const GridState out = straighten(st, x0);
    const double b = out.grid.box_half;
    CHECK(b > 0.0);
    CHECK_NOTHROW(straighten(st, x0, 0.95 * b));
    CHECK_THROWS_AS(straighten(st, x0, 1.05 * b), GeometryError);
  }

  SUBCASE("rejects framed and lifted input and boundary centers") {
    const GridState st = smooth_pair_state(49);
    const GridState once = straighten(st, Vec::of(0.2, 0.1));
    CHECK_THROWS_AS(straighten(once, Vec::zero(2)), GeometryError);
    CHECK_THROWS_AS(straighten(st, Vec::of(1.5, 0.0)), GeometryError);
    CHECK_THROWS_AS(straighten(st, Vec::of(0.0, 0.0, 0.0)), GeometryError);
    CHECK_THROWS_AS(straighten(st, Vec::of(0.2, 0.1), -1.0), GeometryError);

    const Grid g3 = Grid::make(3, 1.0, 9);
    CoefficientSpec lsp = plain_spec(3, 1.0);
    lsp.lift_2d = true;
    std::vector<GridField> u3;
    u3.push_back(field_of(g3, [](const Vec& x) { return 1.0 + x[0]; }));
    const GridState lifted =
        GridState::diagnostic(g3, lsp, SystemConfig{1, 1.0, 0.0}, std::move(u3));
    CHECK_THROWS_AS(straighten(lifted, Vec::zero(3)), GeometryError);
  }
}

TEST_CASE("framed coefficient evaluations obey the chain rule") {
  CoefficientSpec sp = plain_spec(2, 1.0);
  sp.matrix_family = MatrixFamily::diagonal_smooth;
  sp.matrix_eps = 0.1;
  sp.weight_family = WeightFamily::smooth_positive;
  sp.weight_base = 1.5;
  sp.reaction_family = ReactionFamily::linear;
  sp.reaction_d = 0.4;
  sp.framed = true;
  sp.frame_center = Vec::of(0.2, -0.1);
  sp.frame_scale = 0.37;
  SymMatrix S = SymMatrix::identity(2);
  S.set(0, 0, 1.2);
  S.set(1, 1, 0.9);
  S.set(0, 1, 0.1);
  sp.frame_S = S;
  sp.frame_Sinv = matrix_inverse(S);
  sp.frame_f_scale = 2.0;
  sp.frame_s_scale = 0.5;
  sp.validate();

  const Vec y = Vec::of(0.31, -0.44);
  CHECK(norm(sp.frame_point(y) - (sp.frame_center + sp.frame_scale * matvec(S, y))) == 0.0);

  const double d = 1e-6;
  SUBCASE("matrix derivative matches finite differences of the frame") {
    for (int k = 0; k < 2; ++k) {
      Vec yp = y, ym = y;
      yp[k] += d;
      ym[k] -= d;
      const SymMatrix fd = (1.0 / (2.0 * d)) * (eval_matrix(sp, yp) - eval_matrix(sp, ym));
      CHECK(spectral_norm(fd - eval_matrix_deriv(sp, y, k)) <= 1e-8);
    }
  }

  SUBCASE("weight gradient matches finite differences of the frame") {
    const Vec g = eval_weight_grad(sp, y);
    for (int k = 0; k < 2; ++k) {
      Vec yp = y, ym = y;
      yp[k] += d;
      ym[k] -= d;
      CHECK(std::abs((eval_weight(sp, yp) - eval_weight(sp, ym)) / (2.0 * d) - g[k]) <= 1e-8);
    }
  }

  SUBCASE("reaction scale pair and antiderivative stay consistent") {
    const double s = 0.83;
    // the frame's value is the base family under the scale pair
    const CoefficientSpec base = sp.unframed();
    const Vec z = sp.frame_point(y);
    CHECK(eval_reaction(sp, 1, y, s) ==
          doctest::Approx(2.0 * eval_reaction(base, 1, z, 0.5 * s)).epsilon(1e-14));
    // slope in s by finite differences
    CHECK(std::abs((eval_reaction(sp, 0, y, s + d) - eval_reaction(sp, 0, y, s - d)) / (2.0 * d) -
                   eval_reaction_ds(sp, 0, y, s)) <= 1e-8);
    // antiderivative differentiates back to the value
    CHECK(std::abs((eval_reaction_antiderivative(sp, 0, y, s + d) -
                    eval_reaction_antiderivative(sp, 0, y, s - d)) /
                       (2.0 * d) -
                   eval_reaction(sp, 0, y, s)) <= 1e-8);
    CHECK(eval_reaction_antiderivative(sp, 0, y, 0.0) == 0.0);
  }

  SUBCASE("frame validation rejects inconsistent data") {
    CoefficientSpec bad = sp;
    bad.frame_scale = 0.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = sp;
    bad.frame_f_scale = -1.0;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = sp;
    bad.frame_Sinv = SymMatrix::identity(2);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = sp;
    SymMatrix neg = SymMatrix::identity(2);
    neg.set(0, 0, -1.0);
    bad.frame_S = neg;
    bad.frame_Sinv = matrix_inverse(neg);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = sp;
    bad.frame_center = Vec::zero(3);
    CHECK_THROWS_AS(bad.validate(), ConfigError);
    bad = sp;
    bad.dim = 3;
    bad.lift_2d = true;
    CHECK_THROWS_AS(bad.validate(), ConfigError);
  }
}

TEST_CASE("frame survives the snapshot roundtrip") {
  const GridState st = smooth_pair_state(33);
  const GridState out = straighten(st, Vec::of(0.4, -0.25));
  REQUIRE(out.spec.framed);

  namespace fs = std::filesystem;
  const fs::path dir = fs::temp_directory_path() / "seglab_blowup_frame_test";
  fs::create_directories(dir);
  save_state(out, dir.string());
  const GridState back = load_state(dir.string());
  fs::remove_all(dir);

  REQUIRE(back.spec.framed);
  CHECK(back.spec.frame_scale == out.spec.frame_scale);
  CHECK(back.spec.frame_f_scale == out.spec.frame_f_scale);
  CHECK(back.spec.frame_s_scale == out.spec.frame_s_scale);
  for (int d = 0; d < 2; ++d) CHECK(back.spec.frame_center[d] == out.spec.frame_center[d]);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j) {
      CHECK(back.spec.frame_S(i, j) == out.spec.frame_S(i, j));
      CHECK(std::abs(back.spec.frame_Sinv(i, j) - out.spec.frame_Sinv(i, j)) <= 1e-15);
    }
  CHECK(back.solution_like == out.solution_like);
  for (std::size_t k = 0; k < out.u[0].v.size(); ++k) {
    CHECK(back.u[0].v[k] == out.u[0].v[k]);
    CHECK(back.u[1].v[k] == out.u[1].v[k]);
  }
  const Vec y = Vec::of(0.2, 0.3);
  CHECK(spectral_norm(eval_matrix(back.spec, y) - eval_matrix(out.spec, y)) <= 1e-15);
}

TEST_CASE("lipschitz seminorm oracles") {
  SUBCASE("linear field inside the cutoff plateau") {
    const Grid g = Grid::make(2, 1.0, 41);
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    const LipschitzReport rep = lipschitz_seminorm(st, 0.41);
    CHECK(rep.L == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.plain == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(rep.comp == 0);
    CHECK(rep.interface_gap == 0.0);
  }

  SUBCASE("constant field scores the cutoff slope exactly") {
    const Grid g = Grid::make(2, 1.5, 121);
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec&) { return 0.7; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.5), SystemConfig{1, 1.0, 0.0}, std::move(u));
    const LipschitzReport rep = lipschitz_seminorm(st, 1.2);
    // max |u grad eta| = 0.7 * 3.75 at the node radius 0.75 hit exactly
    CHECK(rep.L == doctest::Approx(0.7 * 3.75).epsilon(1e-13));
    CHECK(rep.plain == 0.0);
    CHECK(norm(rep.argmax) == doctest::Approx(0.75).epsilon(1e-13));
  }

  SUBCASE("quadratic field has a unique argmax and interface gap") {
    const Grid g = Grid::make(2, 1.0, 41);
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return 3.0 + x[0] - 2.0 * x[0] * x[0]; }));
    u.push_back(field_of(g, [](const Vec&) { return 1.0; }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.0), SystemConfig{2, 1.0, 0.0}, std::move(u));
    const LipschitzReport rep = lipschitz_seminorm(st, 0.401);
    // centered differences are exact on quadratics: max |1 - 4 x_1| at x_1 = -0.4
    CHECK(rep.L == doctest::Approx(2.6).epsilon(1e-13));
    CHECK(rep.comp == 0);
    CHECK(rep.argmax[0] == doctest::Approx(-0.4).epsilon(1e-13));
    CHECK(rep.argmax[1] == 0.0);
    CHECK(rep.interface_gap == doctest::Approx(1.28).epsilon(1e-12));
  }

  SUBCASE("rejects stencils that leave the grid") {
    const Grid g = Grid::make(2, 1.0, 17);
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    CHECK_THROWS_AS(lipschitz_seminorm(st, 0.99), GeometryError);
    CHECK_THROWS_AS(lipschitz_seminorm(st, 0.0), GeometryError);
    CHECK_THROWS_AS(lipschitz_seminorm(st, 0.5, Cutoff{0.9, 0.2}), ConfigError);
  }
}

TEST_CASE("holder seminorm oracles") {
  const Grid g = Grid::make(2, 1.0, 33);

  SUBCASE("linear field attains the aligned diameter pair") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    // |x_1 - y_1| / |x-y|^{1/2} <= sqrt(|x-y|) <= 1 on B_{1/2}, equality on the
    // axis diameter; the ball is small enough for exhaustive pair enumeration
    CHECK(holder_seminorm(st, 0.5, 0.5) == doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("constant field scores zero") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec&) { return 4.2; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    CHECK(holder_seminorm(st, 0.5, 0.5) == 0.0);
  }

  SUBCASE("sampled path is deterministic and bounded") {
    const Grid gf = Grid::make(2, 1.0, 129);
    std::vector<GridField> u;
    u.push_back(field_of(gf, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(gf, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    const double a = holder_seminorm(st, 0.9, 0.5, 7);
    const double b = holder_seminorm(st, 0.9, 0.5, 7);
    CHECK(a == b);
    // sup over the continuum ball is diam^{1/2} = sqrt(1.8)
    CHECK(a <= std::sqrt(1.8) + 1e-12);
    CHECK(a >= 0.8);
    const double c = holder_seminorm(st, 0.9, 0.5, 8);
    CHECK(c <= std::sqrt(1.8) + 1e-12);
    CHECK(c >= 0.8);
  }

  SUBCASE("parameter guards") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    CHECK_THROWS_AS(holder_seminorm(st, 0.5, 0.0), ConfigError);
    CHECK_THROWS_AS(holder_seminorm(st, 0.5, 1.0), ConfigError);
    CHECK_THROWS_AS(holder_seminorm(st, 1.2, 0.5), GeometryError);
    CHECK_THROWS_AS(holder_seminorm(st, -0.1, 0.5), GeometryError);
  }
}

TEST_CASE("zoom of an affine field reduces to one plus the coordinate") {
  const Grid g = Grid::make(2, 1.0, 65);
  std::vector<GridField> u;
  u.push_back(field_of(g, [](const Vec& x) { return 0.7 + x[0]; }));
  const GridState st =
      GridState::diagnostic(g, plain_spec(2, 1.0), SystemConfig{1, 1.0, -1.0}, std::move(u));

  BlowupParams params;
  params.x0 = Vec::zero(2);
  params.L = 1.0;
  params.comp = 0;
  const BlowupFrame fr = blowup_scale(st, params);

  CHECK(fr.eta0 == 1.0);
  CHECK(fr.r_scale == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(fr.norm_gap <= 1e-14);
  CHECK(fr.matrix_gap == 0.0);
  // beta (L/eta0)^{2 gamma} r^{2 gamma + 2} with beta = -1, gamma = 1
  CHECK(fr.M_comp == doctest::Approx(-std::pow(0.7, 4)).epsilon(1e-14));
  CHECK(fr.state.sys.beta == fr.M_comp);

  REQUIRE(fr.state.spec.framed);
  CHECK(fr.state.spec.frame_scale == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(fr.state.spec.frame_f_scale == doctest::Approx(0.7).epsilon(1e-15));
  CHECK(fr.state.spec.frame_s_scale == doctest::Approx(0.7).epsilon(1e-15));

  const Grid& gv = fr.state.grid;
  CHECK(gv.box_half == doctest::Approx(1.0 / 0.7).epsilon(1e-15));
  for (int j = 0; j < gv.n; ++j)
    for (int i = 0; i < gv.n; ++i) {
      const Vec y = gv.node(i, j);
      CHECK(fr.state.u[0].at(i, j) == doctest::Approx(1.0 + y[0]).epsilon(1e-13));
    }

  // the cutoff is flat on the audited ball, so the gradient audit is exact
  CHECK(fr.vbar_grad_max == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(fr.vbar_grad_origin == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("zoom transports frequency and height exactly") {
  const GridState st = smooth_pair_state();
  const Vec x0 = Vec::of(0.25, -0.15);
  const GridState stt = straighten(st, x0);

  const LipschitzReport rep = lipschitz_seminorm(st, 1.4);
  REQUIRE(rep.L > 0.0);

  BlowupParams params;
  params.x0 = x0;
  params.L = rep.L;
  params.comp = rep.comp;
  const BlowupFrame fr = blowup_scale(stt, params);

  CHECK(fr.norm_gap <= 1e-13);
  CHECK(fr.matrix_gap <= 1e-12);
  CHECK(fr.state.solution_like);

  const double sigma = fr.eta0 / (fr.L * fr.r_scale);
  const double bt = stt.grid.box_half;
  for (double s : {0.3 * bt, 0.5 * bt, 0.8 * bt}) {
    const double r = s / fr.r_scale;
    // N(v, r) = N(u~, r_scale r): node-aligned rescaling keeps every
    // quadrature ingredient identical, so agreement is at rounding level
    const double nv = almgren_quotient(fr.state, r);
    const double nt = almgren_quotient(stt, s);
    CHECK(std::abs(nv - nt) <= 1e-10 * std::max(1.0, std::abs(nt)));
    for (int i = 0; i < st.l(); ++i) {
      const double hv = compute_H(fr.state, i, r);
      const double ht = compute_H(stt, i, s);
      CHECK(std::abs(hv - sigma * sigma * ht) <= 1e-10 * sigma * sigma * ht);
    }
  }

  // the rescaled matrix drifts from the identity at most linearly in r_scale
  const double c = fr.state.spec.closeness_scale();
  CHECK(c <= stt.spec.closeness_scale() * fr.r_scale * (1.0 + 1e-12));
  for (int k = 1; k <= 10; ++k) {
    const Vec y = Vec::of(0.04 * k, 0.03 * k);
    const double gap =
        spectral_norm(eval_matrix(fr.state.spec, y) - SymMatrix::identity(2));
    CHECK(gap <= c * norm(y) * (1.0 + 1e-9) + 1e-12);
  }
}

TEST_CASE("zoom at the seminorm argmax transports the gradient bounds") {
  const GridState st = smooth_pair_state();
  const LipschitzReport rep = lipschitz_seminorm(st, 1.4);
  REQUIRE(rep.L > 0.0);
  REQUIRE(norm(rep.argmax) < 1.0);  // inside the cutoff support

  const GridState stt = straighten(st, rep.argmax);
  BlowupParams params;
  params.x0 = rep.argmax;
  params.L = rep.L;
  params.comp = rep.comp;
  const BlowupFrame fr = blowup_scale(stt, params);

  // |D vbar_comp(0)| = |S grad(eta u_comp)(x0)| / L lies between the
  // ellipticity floor and norm bound roots, up to resampling error
  const double lo = std::sqrt(st.spec.theta());
  const double hi = std::sqrt(st.spec.norm_bound());
  CHECK(fr.vbar_grad_origin >= lo - 0.05);
  CHECK(fr.vbar_grad_origin <= hi + 0.05);
  CHECK(fr.vbar_grad_max <= hi + 0.05);
  CHECK(fr.vbar_grad_max >= fr.vbar_grad_origin - 1e-12);
}

TEST_CASE("zoom parameter and degeneracy guards") {
  const Grid g = Grid::make(2, 1.5, 33);
  std::vector<GridField> u;
  u.push_back(field_of(g, [](const Vec& x) { return 1.0 + 0.2 * x[0]; }));
  const GridState st =
      GridState::diagnostic(g, plain_spec(2, 1.5), SystemConfig{1, 1.0, 0.0}, std::move(u));

  BlowupParams params;
  params.x0 = Vec::zero(2);
  params.L = 1.0;
  params.comp = 0;

  BlowupParams bad = params;
  bad.L = 0.0;
  CHECK_THROWS_AS(blowup_scale(st, bad), GeometryError);
  bad = params;
  bad.comp = 1;
  CHECK_THROWS_AS(blowup_scale(st, bad), GeometryError);
  bad = params;
  bad.x0 = Vec::of(0.3, 0.0);  // unframed input must zoom at the origin
  CHECK_THROWS_AS(blowup_scale(st, bad), GeometryError);

  // center outside the cutoff support degenerates eta0
  const GridState stt = straighten(st, Vec::of(0.99, 0.3));
  bad = params;
  bad.x0 = Vec::of(0.99, 0.3);
  CHECK_THROWS_AS(blowup_scale(stt, bad), GeometryError);
  // center mismatch against the frame
  bad.x0 = Vec::of(0.5, 0.3);
  CHECK_THROWS_AS(blowup_scale(stt, bad), GeometryError);

  // fields vanishing at the center degenerate the zoom radius
  std::vector<GridField> uz;
  uz.push_back(field_of(g, [](const Vec& x) { return x[0] * x[0]; }));
  const GridState stz =
      GridState::diagnostic(g, plain_spec(2, 1.5), SystemConfig{1, 1.0, 0.0}, std::move(uz));
  CHECK_THROWS_AS(blowup_scale(stz, params), GeometryError);
}

TEST_CASE("segregation metrics") {
  const Grid g = Grid::make(2, 1.0, 41);

  SUBCASE("disjoint supports score zero") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return std::max(x[0] - 0.2, 0.0); }));
    u.push_back(field_of(g, [](const Vec& x) { return std::max(-x[0] - 0.2, 0.0); }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.0), SystemConfig{2, 1.0, -5.0}, std::move(u));
    const SegregationReport rep = segregation_metrics(st, 0.9);
    CHECK(rep.max_overlap == 0.0);
    CHECK(rep.max_interaction == 0.0);
  }

  SUBCASE("constant pair matches the closed form") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec&) { return 1.0; }));
    u.push_back(field_of(g, [](const Vec&) { return 1.0; }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.0), SystemConfig{2, 1.0, -2.0}, std::move(u));
    const SegregationReport rep = segregation_metrics(st, 0.7);
    CHECK(rep.max_overlap == 1.0);
    // |beta| h^2 #nodes with unit weight and unit fields
    std::size_t count = 0;
    for (int j = 0; j < g.n; ++j)
      for (int i = 0; i < g.n; ++i)
        if (norm(g.node(i, j)) <= 0.7) ++count;
    CHECK(rep.max_interaction ==
          doctest::Approx(2.0 * g.h * g.h * double(count)).epsilon(1e-13));
  }

  SUBCASE("three components fill a symmetric matrix with a zero diagonal") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return 1.0 + 0.5 * x[0]; }));
    u.push_back(field_of(g, [](const Vec& x) { return 1.0 + 0.5 * x[1]; }));
    u.push_back(field_of(g, [](const Vec&) { return 0.5; }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.0), SystemConfig{3, 1.0, -1.0}, std::move(u));
    const SegregationReport rep = segregation_metrics(st, 0.8);
    REQUIRE(rep.l == 3);
    for (int i = 0; i < 3; ++i) {
      CHECK(rep.sup_overlap[std::size_t(4 * i)] == 0.0);
      CHECK(rep.interaction[std::size_t(4 * i)] == 0.0);
      for (int j = 0; j < 3; ++j) {
        CHECK(rep.sup_overlap[std::size_t(3 * i + j)] == rep.sup_overlap[std::size_t(3 * j + i)]);
        CHECK(rep.interaction[std::size_t(3 * i + j)] == rep.interaction[std::size_t(3 * j + i)]);
      }
    }
    CHECK(rep.max_overlap > 0.0);
    CHECK(rep.max_interaction > 0.0);
    CHECK_THROWS_AS(segregation_metrics(st, 1.2), GeometryError);
  }
}

TEST_CASE("zoom-out of a homogeneous field is scale free") {
  const Grid g = Grid::make(2, 9.0, 181);

  SUBCASE("linear field and height normalization") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 9.0), SystemConfig{1, 1.5, -3.0}, std::move(u));

    // H(x_1, rho) = pi rho^2: linear interpolation and the uniform circle rule
    // are both exact here
    const double H2 = compute_H(st, 0, 2.0);
    CHECK(H2 == doctest::Approx(4.0 * kPi).epsilon(1e-12));

    for (double rho : {2.0, 4.0}) {
      const GridState bd = blowdown_scale(st, rho);
      const double root = std::sqrt(kPi);
      for (int j = 0; j < bd.grid.n; ++j)
        for (int i = 0; i < bd.grid.n; ++i) {
          const Vec y = bd.grid.node(i, j);
          if (std::abs(bd.u[0].at(i, j) - y[0] / root) > 1e-11) {
            CHECK(bd.u[0].at(i, j) == doctest::Approx(y[0] / root).epsilon(1e-10));
          }
        }
      CHECK(compute_H(bd, 0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
    }

    // coupling and frame scales after one zoom-out
    const GridState bd = blowdown_scale(st, 2.0);
    const double H = 4.0 * kPi;
    CHECK(bd.sys.beta == doctest::Approx(-3.0 * 4.0 * std::pow(H, 1.5)).epsilon(1e-12));
    REQUIRE(bd.spec.framed);
    CHECK(bd.spec.frame_scale == 2.0);
    CHECK(bd.spec.frame_f_scale == doctest::Approx(4.0 / std::sqrt(H)).epsilon(1e-12));
    CHECK(bd.spec.frame_s_scale == doctest::Approx(std::sqrt(H)).epsilon(1e-12));
  }

  SUBCASE("constant field normalizes to the sphere measure") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec&) { return 3.0; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 9.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    const GridState bd = blowdown_scale(st, 2.0);
    // H(c, rho) = 2 pi c^2, so the rescaled constant is 1/sqrt(2 pi)
    CHECK(bd.u[0].v[0] == doctest::Approx(1.0 / std::sqrt(2.0 * kPi)).epsilon(1e-12));
    CHECK(compute_H(bd, 0, 1.0) == doctest::Approx(1.0).epsilon(1e-12));
  }

  SUBCASE("generic coefficients keep the unit height after zoom-out") {
    const Grid gs = Grid::make(2, 9.0, 145);
    CoefficientSpec sp = plain_spec(2, 9.0);
    sp.matrix_family = MatrixFamily::diagonal_smooth;
    sp.matrix_eps = 0.1;
    std::vector<GridField> u;
    u.push_back(field_of(gs, [](const Vec& x) {
      return 2.0 + std::sin(0.3 * x[0]) * std::cos(0.2 * x[1]);
    }));
    u.push_back(field_of(gs, [](const Vec& x) {
      return 1.5 + 0.4 * std::cos(0.5 * (x[0] - x[1]));
    }));
    const GridState st = GridState::solution(gs, sp, SystemConfig{2, 1.0, -1.0}, std::move(u));
    const GridState bd = blowdown_scale(st, 3.0);
    CHECK(bd.solution_like);
    double h1 = 0.0;
    for (int i = 0; i < 2; ++i) h1 += compute_H(bd, i, 1.0);
    CHECK(h1 == doctest::Approx(1.0).epsilon(1e-10));
  }

  SUBCASE("degeneracy guards") {
    std::vector<GridField> u;
    u.push_back(field_of(g, [](const Vec& x) { return x[0]; }));
    const GridState st =
        GridState::diagnostic(g, plain_spec(2, 9.0), SystemConfig{1, 1.0, 0.0}, std::move(u));
    CHECK_THROWS_AS(blowdown_scale(st, 9.0), GeometryError);
    CHECK_THROWS_AS(blowdown_scale(st, 0.0), GeometryError);

    std::vector<GridField> uz;
    uz.push_back(field_of(g, [](const Vec&) { return 0.0; }));
    const GridState stz =
        GridState::diagnostic(g, plain_spec(2, 9.0), SystemConfig{1, 1.0, 0.0}, std::move(uz));
    CHECK_THROWS_AS(blowdown_scale(stz, 2.0), GeometryError);
  }
}

TEST_CASE("zoom then zoom-out compose through the frame") {
  const GridState st = smooth_pair_state(65);
  const Vec x0 = Vec::of(0.2, 0.1);
  const GridState stt = straighten(st, x0);
  const LipschitzReport rep = lipschitz_seminorm(st, 1.4);

  BlowupParams params;
  params.x0 = x0;
  params.L = rep.L;
  params.comp = rep.comp;
  const BlowupFrame fr = blowup_scale(stt, params);

  const double rho = fr.state.grid.box_half / 3.0;
  const GridState bd = blowdown_scale(fr.state, rho);
  REQUIRE(bd.spec.framed);
  CHECK(bd.spec.frame_scale == doctest::Approx(fr.r_scale * rho).epsilon(1e-12));
  CHECK(bd.solution_like);
  double h1 = 0.0;
  for (int i = 0; i < 2; ++i) h1 += compute_H(bd, i, 1.0);
  CHECK(h1 == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("direction fit recovers planted one dimensional profiles") {
  SUBCASE("planar profile with distinct slopes") {
    const Grid g = Grid::make(2, 1.5, 61);
    const Vec e = Vec::of(std::cos(0.7), std::sin(0.7));
    std::vector<GridField> u;
    u.push_back(field_of(g, [&](const Vec& x) { return 1.3 * std::max(dot(x, e), 0.0); }));
    u.push_back(field_of(g, [&](const Vec& x) { return 0.6 * std::max(-dot(x, e), 0.0); }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.5), SystemConfig{2, 1.0, 0.0}, std::move(u));
    const DirectionFit fit = blowdown_direction_fit(st);
    CHECK(dot(fit.direction, e) >= 1.0 - 1e-6);
    CHECK(fit.gamma_pos == doctest::Approx(1.3).epsilon(1e-6));
    CHECK(fit.gamma_neg == doctest::Approx(0.6).epsilon(1e-6));
    CHECK(fit.residual <= 1e-6);
  }

  SUBCASE("swapped roles resolve to the opposite direction") {
    const Grid g = Grid::make(2, 1.5, 61);
    const Vec e = Vec::of(std::cos(2.1), std::sin(2.1));
    std::vector<GridField> u;
    u.push_back(field_of(g, [&](const Vec& x) { return 0.9 * std::max(-dot(x, e), 0.0); }));
    u.push_back(field_of(g, [&](const Vec& x) { return 0.5 * std::max(dot(x, e), 0.0); }));
    const GridState st =
        GridState::solution(g, plain_spec(2, 1.5), SystemConfig{2, 1.0, 0.0}, std::move(u));
    const DirectionFit fit = blowdown_direction_fit(st);
    CHECK(dot(fit.direction, e) <= -(1.0 - 1e-6));
    CHECK(fit.gamma_pos == doctest::Approx(0.9).epsilon(1e-6));
    CHECK(fit.gamma_neg == doctest::Approx(0.5).epsilon(1e-6));
    CHECK(fit.residual <= 1e-6);
  }

  SUBCASE("spatial profile") {
    const Grid g = Grid::make(3, 1.2, 25);
    Vec e = Vec::of(0.3, -0.5, 0.8);
    e = (1.0 / norm(e)) * e;
    std::vector<GridField> u;
    u.push_back(field_of(g, [&](const Vec& x) { return 0.8 * std::max(dot(x, e), 0.0); }));
    u.push_back(field_of(g, [&](const Vec& x) { return 1.1 * std::max(-dot(x, e), 0.0); }));
    const GridState st =
        GridState::solution(g, plain_spec(3, 1.2), SystemConfig{2, 1.0, 0.0}, std::move(u));
    const DirectionFit fit = blowdown_direction_fit(st);
    CHECK(dot(fit.direction, e) >= 1.0 - 1e-5);
    CHECK(fit.gamma_pos == doctest::Approx(0.8).epsilon(1e-4));
    CHECK(fit.gamma_neg == doctest::Approx(1.1).epsilon(1e-4));
    CHECK(fit.residual <= 1e-4);
  }

  SUBCASE("guards") {
    const Grid g = Grid::make(2, 1.5, 33);
    std::vector<GridField> one;
    one.push_back(field_of(g, [](const Vec& x) { return std::max(x[0], 0.0); }));
    const GridState single =
        GridState::diagnostic(g, plain_spec(2, 1.5), SystemConfig{1, 1.0, 0.0}, std::move(one));
    CHECK_THROWS_AS(blowdown_direction_fit(single), GeometryError);

    const Grid gs = Grid::make(2, 0.8, 33);
    std::vector<GridField> pair;
    pair.push_back(field_of(gs, [](const Vec& x) { return std::max(x[0], 0.0); }));
    pair.push_back(field_of(gs, [](const Vec& x) { return std::max(-x[0], 0.0); }));
    const GridState small =
        GridState::solution(gs, plain_spec(2, 0.8), SystemConfig{2, 1.0, 0.0}, std::move(pair));
    CHECK_THROWS_AS(blowdown_direction_fit(small), GeometryError);

    std::vector<GridField> zero;
    zero.push_back(field_of(g, [](const Vec&) { return 0.0; }));
    zero.push_back(field_of(g, [](const Vec&) { return 0.0; }));
    const GridState zst =
        GridState::solution(g, plain_spec(2, 1.5), SystemConfig{2, 1.0, 0.0}, std::move(zero));
    CHECK_THROWS_AS(blowdown_direction_fit(zst), GeometryError);
    CHECK_THROWS_AS(blowdown_direction_fit(zst, 3), ConfigError);
  }
}

TEST_CASE("interpolation error estimate closed forms") {
  const Grid g = Grid::make(2, 1.0, 33);
  const GridField lin = field_of(g, [](const Vec& x) { return 2.0 * x[0] - x[1]; });
  CHECK(interp_error_estimate(lin) == 0.0);
  const GridField quad = field_of(g, [](const Vec& x) { return x[0] * x[0]; });
  // second difference along the first axis is exactly 2 h^2
  CHECK(interp_error_estimate(quad) == doctest::Approx(0.25 * g.h * g.h).epsilon(1e-10));
}

}  // TEST_SUITE
