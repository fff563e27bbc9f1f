#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "amlab/tonelli.hpp"

using namespace amlab;
using namespace amlab::tonelli;

namespace {

PhaseGrid grid1(int nx, int nv, double vmax = 2.0) {
  PhaseGrid g;
  g.nx = nx;
  g.nv = nv;
  g.vmax = vmax;
  return g;
}

Vec vec1(double x) { return Vec::Constant(1, x); }

Eigen::Index cell(const PhaseGrid& g, int xi, double v) {
  return g.index(0, xi, static_cast<Eigen::Index>(std::lround((v + g.vmax) / g.dv())));
}

double action(const Vec& cost, const Vec& mu) { return cost.dot(mu); }

}  // namespace

TEST(TonelliGrid, Validation) {
  auto g = grid1(8, 7);
  EXPECT_THROW(g.validate(), ConfigError);
  g = grid1(8, 8, -1);
  EXPECT_THROW(g.validate(), ConfigError);
  g = grid1(8, 8);
  g.nt = 3;
  EXPECT_THROW(g.validate(), ConfigError);
  g.time_periodic = true;
  g.dt = 0.25;
  EXPECT_THROW(g.validate(), ConfigError);
  g.dt = 0.0;
  EXPECT_NO_THROW(g.validate());
  EXPECT_EQ(g.size(), 3 * 8 * 9);
}

TEST(TonelliCurve, ConstantCurveIsDirac) {
  auto g = grid1(16, 16);
  auto mu = curve_measure({vec1(0.25), vec1(0.25), vec1(0.25)}, 1.0 / 16, g);
  EXPECT_DOUBLE_EQ(mu[cell(g, 4, 0.0)], 1.0);
}

TEST(TonelliCurve, UnitSpeedRotationIsUniform) {
  auto g = grid1(16, 16);
  std::vector<Vec> s;
  for (int k = 0; k < 16; ++k) s.push_back(vec1(k / 16.0));
  auto mu = curve_measure(s, 1.0 / 16, g);
  for (int i = 0; i < 16; ++i) EXPECT_NEAR(mu[cell(g, i, 1.0)], 1.0 / 16, 1e-15);
  EXPECT_LE(holonomy_residual(g, mu.weights()), 1e-15);
  EXPECT_NEAR(rotation_vector(g, mu.weights())[0], 1.0, 1e-14);
}

TEST(TonelliCurve, ForthAndBackIsSymmetric) {
  auto g = grid1(16, 16);
  std::vector<Vec> s;
  for (int k = 0; k <= 8; ++k) s.push_back(vec1(k / 32.0));
  for (int k = 7; k >= 1; --k) s.push_back(vec1(k / 32.0));
  auto mu = curve_measure(s, 1.0 / 32, g);
  for (Eigen::Index xc = 0; xc < g.x_cells(); ++xc)
    for (int j = 0; j <= g.nv; ++j)
      EXPECT_NEAR(mu[g.index(0, xc, j)], mu[g.index(0, xc, g.nv - j)], 1e-15);
}

TEST(TonelliCurve, TruncationNamesBound) {
  auto g = grid1(16, 16, 0.5);
  std::vector<Vec> s;
  for (int k = 0; k < 16; ++k) s.push_back(vec1(k / 16.0));
  try {
    curve_measure(s, 1.0 / 16, g);
    FAIL() << "expected a truncation error";
  } catch (const TruncationError& e) {
    EXPECT_EQ(e.bound(), 0.5);
    EXPECT_NE(std::string(e.what()).find("0.5"), std::string::npos);
  }
}

TEST(TonelliCurve, SmoothCurveResidualShrinksWithStep) {
  // x(s) = 0.3 + 0.1 sin(2 pi s), period 1, on grids with dt = 1/nx and matching sampling.
  std::vector<double> res;
  for (int nx : {16, 32, 64}) {
    auto g = grid1(nx, 16, 1.0);
    std::vector<Vec> s;
    for (int k = 0; k < nx; ++k) s.push_back(vec1(0.3 + 0.1 * std::sin(2 * std::numbers::pi * k / nx)));
    res.push_back(holonomy_residual(g, curve_measure(s, 1.0 / nx, g).weights()));
  }
  EXPECT_LE(res[0], 16.0 / 16);  // residual <= C dt with C = 16 in these units
  EXPECT_LT(res[1], res[0]);
  EXPECT_LT(res[2], res[1]);
  EXPECT_LE(res[2] * 64, 16.0);
}

TEST(TonelliMinimizing, PendulumMinimizerAtBottom) {
  auto g = grid1(32, 32);
  auto face = minimizing_measures(pendulum(), vec1(0), g);
  EXPECT_NEAR(face.value, -1.0, 1e-12);
  EXPECT_EQ(face.dimension, 0);
  EXPECT_NEAR(face.vertices[0][cell(g, 16, 0.0)], 1.0, 1e-12);
  auto gp = graph_property_check(face, g);
  EXPECT_EQ(gp.max_multiplicity, 1);
  EXPECT_TRUE(support_bound_check(DiscreteMeasure::normalized(face.vertices[0]), g, 1.0));
}

TEST(TonelliMinimizing, FlatIsMaximallyDegenerate) {
  auto g = grid1(12, 8);
  auto face = minimizing_measures(flat(), vec1(0), g);
  EXPECT_NEAR(face.value, 0.0, 1e-12);
  EXPECT_EQ(face.dimension, 11);
}

TEST(TonelliMinimizing, FlatTiltedMovesToHalfSpeed) {
  auto g = grid1(16, 16);
  auto face = minimizing_measures(flat(), vec1(0.5), g);
  EXPECT_NEAR(face.value, -0.125, 1e-12);
  for (const Vec& v : face.vertices) EXPECT_NEAR(rotation_vector(g, v)[0], 0.5, 1e-9);
}

TEST(TonelliChecks, GraphPropertyAndSupport) {
  auto g = grid1(8, 8);
  const Eigen::Index n = g.size();
  Vec d = Vec::Unit(n, cell(g, 3, 0.0));
  EXPECT_EQ(velocity_multiplicity(g, d), 1);
  Vec two = 0.5 * (Vec::Unit(n, cell(g, 3, 0.5)) + Vec::Unit(n, cell(g, 3, -1.0)));
  EXPECT_EQ(velocity_multiplicity(g, two), 2);
  lp::OptimalFace f;
  f.vertices = {d, two};
  EXPECT_FALSE(graph_property_check(f, g).holds());
  EXPECT_TRUE(support_bound_check(DiscreteMeasure(d), g, 1.0));
  EXPECT_FALSE(support_bound_check(DiscreteMeasure(Vec::Unit(n, cell(g, 3, 2.0))), g, 1.0));
}

TEST(TonelliResolution, PendulumFlatAndTilted) {
  std::vector<PhaseGrid> grids{grid1(16, 16), grid1(32, 32), grid1(64, 64)};
  auto rows = resolution_study(pendulum(), vec1(0), grids);
  for (const auto& r : rows) EXPECT_LE(std::abs(r.value + 1.0), 1.0 / r.grid.nx);
  for (const auto& r : resolution_study(flat(), vec1(0), {grid1(8, 8), grid1(16, 16)})) EXPECT_NEAR(r.value, 0, 1e-12);
  // Velocity nodes that miss 1/2 converge to the pointwise minimum -1/8 at rate dv^2.
  double prev_err = 1.0;
  for (int nv : {6, 10, 14, 22}) {
    auto r = resolution_study(flat(), vec1(0.5), {grid1(8, nv)}).front();
    const double err = r.value + 0.125;
    EXPECT_GE(err, -1e-12);
    EXPECT_LE(err, 0.5 * std::pow(4.0 / nv, 2) + 1e-12);
    EXPECT_LE(err, prev_err);
    prev_err = err;
  }
}

TEST(TonelliProperty, ActionLinearityAndTiltIdentity) {
  Rng rng(3);
  auto g = grid1(8, 8);
  const Vec base = action_costs(pendulum(), g, vec1(0));
  for (int t = 0; t < 50; ++t) {
    const double c = uniform(rng, -2, 2);
    const Vec tilted = action_costs(pendulum(), g, vec1(c));
    Vec a = dirichlet(rng, g.size(), 0.3), b = dirichlet(rng, g.size(), 0.3);
    const double th = uniform(rng);
    EXPECT_NEAR(action(base, th * a + (1 - th) * b), th * action(base, a) + (1 - th) * action(base, b), 1e-12);
    EXPECT_NEAR(action(tilted, a), action(base, a) - c * rotation_vector(g, a)[0], 1e-12);
  }
}

TEST(TonelliProperty, FixedRotationSlicesReproduceMinimum) {
  auto g = grid1(8, 8);
  const double c = 0.9;
  auto face = minimizing_measures(pendulum(0.2), vec1(c), g);
  const double rho_star = rotation_vector(g, face.vertices[0])[0];
  lp::LinearProgram p = holonomic_polytope(g);
  p.objective = action_costs(pendulum(0.2), g, vec1(0));
  // Add the row rho(mu) = r.
  Mat m(p.rows() + 1, p.cols());
  m.topRows(p.rows()) = p.matrix;
  for (Eigen::Index i = 0; i < p.cols(); ++i) m(p.rows(), i) = g.velocity(g.v_of(i))[0];
  p.matrix = m;
  Vec rhs(p.rows());
  rhs.head(p.rows() - 1) = p.rhs;
  double best = std::numeric_limits<double>::infinity();
  for (double r : {rho_star, 0.0, 0.25, 0.5, 0.75, 1.0, -0.5}) {
    rhs[p.rows() - 1] = r;
    p.rhs = rhs;
    auto s = lp::solve(p);
    if (s.optimal()) best = std::min(best, s.value - c * r);
  }
  EXPECT_NEAR(best, face.value, 1e-8);
}

TEST(TonelliProperty, AlphaConvexAndMeasuresValid) {
  auto g = grid1(8, 8);
  Rng rng(4);
  auto alpha = [&](double c) { return -minimizing_measures(pendulum(0.3), vec1(c), g).value; };
  for (int t = 0; t < 10; ++t) {
    const double a = uniform(rng, -1.5, 1.5), b = uniform(rng, -1.5, 1.5);
    EXPECT_LE(alpha(0.5 * (a + b)), 0.5 * (alpha(a) + alpha(b)) + 1e-9);
    auto face = minimizing_measures(pendulum(0.3), vec1(a), g);
    for (const Vec& v : face.vertices) {
      EXPECT_NEAR(v.sum(), 1.0, 1e-10);
      EXPECT_GE(v.minCoeff(), -1e-10);
      EXPECT_LE(holonomy_residual(g, v), 1e-9);
    }
  }
}

TEST(TonelliTimePeriodic, UnforcedMatchesAutonomous) {
  PhaseGrid g = grid1(8, 8);
  g.time_periodic = true;
  g.nt = 8;
  auto face = minimizing_measures(forced_pendulum(0.0), vec1(0), g);
  EXPECT_NEAR(face.value, -1.0, 1e-12);
  EXPECT_EQ(face.dimension, 0);
  // A resting curve puts mass 1/nt on each slice and is holonomic.
  std::vector<Vec> rest(8, vec1(0.5));
  auto mu = curve_measure(rest, 1.0 / 8, g);
  EXPECT_LE(holonomy_residual(g, mu.weights()), 1e-15);
  auto forced = minimizing_measures(forced_pendulum(0.3), vec1(0), g);
  EXPECT_GE(forced.value, -1.3 - 1e-12);
  for (const Vec& v : forced.vertices) EXPECT_LE(holonomy_residual(g, v), 1e-9);
  PhaseGrid bad = grid1(8, 8);
  EXPECT_THROW(action_costs(forced_pendulum(0.3), bad, vec1(0)), ConfigError);
}

TEST(TonelliTwoDim, FlatTorus) {
  PhaseGrid g;
  g.dim = 2;
  g.nx = 3;
  g.nv = 2;
  g.vmax = 1.0;
  auto face = minimizing_measures(flat(), Vec::Zero(2), g);
  EXPECT_NEAR(face.value, 0.0, 1e-12);
  EXPECT_EQ(face.dimension, 8);
  auto p = minimizing_measures(pendulum(), Vec::Zero(2), PhaseGrid{2, 4, 2, 1.0});
  EXPECT_NEAR(p.value, -2.0, 1e-12);
  EXPECT_EQ(p.dimension, 0);
}

TEST(TonelliLagrangian, PresetsEvaluateAsDocumented) {
  std::vector<double> samples;
  for (int i = 0; i < 16; ++i) samples.push_back(-std::cos(2 * std::numbers::pi * i / 16));
  auto mech = mechanical(samples);
  auto pend = pendulum();
  for (int i = 0; i < 16; ++i)
    EXPECT_NEAR(mech(0, vec1(i / 16.0), vec1(0.7)), pend(0, vec1(i / 16.0), vec1(0.7)), 1e-14);
  EXPECT_TRUE(is_fiberwise_convex(flat(), grid1(8, 8)));
  LagrangianSpec concave{"concave", [](double, const Vec&, const Vec& v) { return -v.squaredNorm(); }, false};
  EXPECT_FALSE(is_fiberwise_convex(concave, grid1(8, 8)));
  EXPECT_THROW(mechanical({1, 2, 3}, 2), ConfigError);
  EXPECT_THROW(action_costs(flat(), grid1(8, 8), Vec::Zero(2)), DimensionError);
}
