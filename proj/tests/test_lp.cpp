#include <gtest/gtest.h>

#include <algorithm>
#include <numeric>

#include "amlab/lp.hpp"

using namespace amlab;
using amlab::lp::LinearProgram;
using amlab::lp::Sense;
using amlab::lp::Status;

namespace {

LinearProgram make(const Mat& a, const Vec& b, const Vec& c, std::vector<Sense> s = {}) {
  LinearProgram lp;
  lp.matrix = a;
  lp.rhs = b;
  lp.objective = c;
  lp.sense = std::move(s);
  return lp;
}

LinearProgram simplex_lp(int n, const Vec& c) {
  return make(Mat::Ones(1, n), Vec::Ones(1), c);
}

// Brute-force oracle: every basic feasible solution of {Ax = b, x >= 0}.
std::vector<Vec> enumerate_bfs(const Mat& a, const Vec& b) {
  const int m = static_cast<int>(a.rows()), n = static_cast<int>(a.cols());
  std::vector<Vec> out;
  std::vector<int> pick(static_cast<std::size_t>(n), 0);
  std::fill(pick.end() - m, pick.end(), 1);
  do {
    Mat bm(m, m);
    std::vector<int> cols;
    for (int j = 0; j < n; ++j)
      if (pick[static_cast<std::size_t>(j)]) cols.push_back(j);
    for (int k = 0; k < m; ++k) bm.col(k) = a.col(cols[static_cast<std::size_t>(k)]);
    Eigen::FullPivLU<Mat> lu(bm);
    if (lu.rank() < m) continue;
    Vec xb = lu.solve(b);
    if (xb.minCoeff() < -1e-10) continue;
    Vec x = Vec::Zero(n);
    for (int k = 0; k < m; ++k) x[cols[static_cast<std::size_t>(k)]] = std::max(0.0, xb[k]);
    out.push_back(x);
  } while (std::next_permutation(pick.begin(), pick.end()));
  return out;
}

}  // namespace

TEST(LpSolve, MinFirstCoordinateOnSegment) {
  Mat a(1, 2);
  a << 1, 1;
  auto sol = lp::solve(make(a, Vec::Ones(1), Vec::Unit(2, 0)));
  ASSERT_EQ(sol.status, Status::Optimal);
  EXPECT_NEAR(sol.value, 0.0, 1e-12);
  EXPECT_NEAR(sol.point[0], 0.0, 1e-12);
  EXPECT_NEAR(sol.point[1], 1.0, 1e-12);
}

TEST(LpSolve, ZeroObjectiveOverSimplex) {
  auto sol = lp::solve(simplex_lp(3, Vec::Zero(3)));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.value, 0.0, 1e-12);
  EXPECT_NEAR(sol.point.sum(), 1.0, 1e-12);
}

TEST(LpSolve, InequalityRow) {
  Mat a(1, 2);
  a << 1, 1;
  Vec c(2);
  c << -1, -1;
  auto sol = lp::solve(make(a, Vec::Ones(1), c, {Sense::Le}));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.value, -1.0, 1e-12);
  EXPECT_NEAR(lp::dual_value(make(a, Vec::Ones(1), c, {Sense::Le}), sol), -1.0, 1e-12);
}

TEST(LpSolve, UpperBounds) {
  Mat a(1, 2);
  a << 1, 1;
  Vec c(2);
  c << -2, -1;
  auto p = make(a, Vec::Ones(1), c, {Sense::Le});
  p.upper = {0.25, std::nullopt};
  auto sol = lp::solve(p);
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.point[0], 0.25, 1e-12);
  EXPECT_NEAR(sol.value, -1.25, 1e-12);
  EXPECT_NEAR(lp::dual_value(p, sol), sol.value, 1e-10);
}

TEST(LpSolve, InfeasibleHasFarkasCertificate) {
  // x1 + x2 = 1 and x1 + x2 = 2.
  Mat a(2, 2);
  a << 1, 1, 1, 1;
  Vec b(2);
  b << 1, 2;
  auto sol = lp::solve(make(a, b, Vec::Zero(2)));
  ASSERT_EQ(sol.status, Status::Infeasible);
  ASSERT_EQ(sol.certificate.size(), 2);
  EXPECT_GT(sol.certificate.dot(b), 1e-9);
  Vec ya = a.transpose() * sol.certificate;
  EXPECT_LE(ya.maxCoeff(), 1e-9);
}

TEST(LpSolve, UnboundedHasRay) {
  Mat a(1, 2);
  a << 1, -1;
  Vec c(2);
  c << -1, 0;
  auto sol = lp::solve(make(a, Vec::Zero(1), c));
  ASSERT_EQ(sol.status, Status::Unbounded);
  EXPECT_LT(c.dot(sol.certificate), 0.0);
  EXPECT_NEAR((a * sol.certificate).norm(), 0.0, 1e-12);
  EXPECT_GE(sol.certificate.minCoeff(), -1e-12);
}

TEST(LpSolve, RedundantRowsAreTolerated) {
  Mat a(3, 3);
  a << 1, 1, 1, 2, 2, 2, 1, -1, 0;
  Vec b(3);
  b << 1, 2, 0;
  Vec c(3);
  c << 1, 1, 3;
  auto sol = lp::solve(make(a, b, c));
  ASSERT_TRUE(sol.optimal());
  EXPECT_NEAR(sol.value, 1.0, 1e-12);
  EXPECT_LE(sol.primal_residual, 1e-9);
}

TEST(LpSolve, MismatchedShapesThrow) {
  LinearProgram p = make(Mat::Ones(1, 2), Vec::Ones(2), Vec::Zero(2));
  EXPECT_THROW(lp::solve(p), DimensionError);
}

TEST(LpFace, UniqueVertex) {
  Mat a(1, 2);
  a << 1, 1;
  auto f = lp::optimal_face(make(a, Vec::Ones(1), Vec::Unit(2, 0)));
  EXPECT_EQ(f.dimension, 0);
  ASSERT_EQ(f.vertices.size(), 1u);
  EXPECT_NEAR(f.vertices[0][1], 1.0, 1e-12);
}

TEST(LpFace, WholeSimplexOptimal) {
  auto f = lp::optimal_face(simplex_lp(3, Vec::Zero(3)));
  EXPECT_EQ(f.dimension, 2);
}

TEST(LpFace, TwoSimplexVertexAndEdge) {
  Vec c1(3);
  c1 << 1, 1, 0;
  auto f1 = lp::optimal_face(simplex_lp(3, c1));
  EXPECT_EQ(f1.dimension, 0);
  EXPECT_NEAR(f1.vertices[0][2], 1.0, 1e-12);
  auto f2 = lp::optimal_face(simplex_lp(3, Vec::Unit(3, 2)));
  EXPECT_EQ(f2.dimension, 1);
  for (const Vec& v : f2.vertices) EXPECT_NEAR(v[2], 0.0, 1e-12);
}

TEST(LpFace, InfeasibleThrows) {
  Mat a(2, 1);
  a << 1, 1;
  Vec b(2);
  b << 1, 2;
  EXPECT_THROW(lp::optimal_face(make(a, b, Vec::Zero(1))), LpError);
}

// Random standard-form programs with integer objectives so that ties are common;
// exhaustive basis enumeration is the independent oracle.
TEST(LpProperty, MatchesVertexEnumeration) {
  Rng rng(20240611);
  for (int trial = 0; trial < 150; ++trial) {
    const int n = 4 + static_cast<int>(rng() % 9);  // 4..12
    const int m = 1 + static_cast<int>(rng() % 4);  // 1..4 rows incl. mass
    Mat a(m, n);
    a.row(0).setOnes();
    for (int i = 1; i < m; ++i)
      for (int j = 0; j < n; ++j) a(i, j) = static_cast<double>(static_cast<int>(rng() % 5) - 2);
    Vec xf = dirichlet(rng, n, 1.0);
    Vec b = a * xf;
    Vec c(n);
    for (int j = 0; j < n; ++j) c[j] = static_cast<double>(rng() % 3);
    auto p = make(a, b, c);
    auto sol = lp::solve(p);
    ASSERT_TRUE(sol.optimal());

    Eigen::FullPivLU<Mat> lu(a);
    if (lu.rank() < m) continue;  // oracle needs full row rank
    auto bfs = enumerate_bfs(a, b);
    ASSERT_FALSE(bfs.empty());
    double best = 1e300;
    for (const Vec& v : bfs) best = std::min(best, c.dot(v));
    EXPECT_NEAR(sol.value, best, 1e-9) << "trial " << trial;
    // Strong duality and complementary slackness.
    EXPECT_NEAR(lp::dual_value(p, sol), sol.value, 1e-7);
    EXPECT_LE(sol.complementarity_residual, 1e-7);
    EXPECT_LE(sol.primal_residual, 1e-9);

    std::vector<Vec> opt;
    for (const Vec& v : bfs)
      if (c.dot(v) <= best + 1e-9) opt.push_back(v);
    const int oracle_dim = affine_rank(opt);
    lp::FaceOptions fo;
    fo.seed = static_cast<std::uint64_t>(trial);
    auto face = lp::optimal_face(p, fo);
    EXPECT_EQ(face.dimension, oracle_dim) << "trial " << trial;
    for (const Vec& v : face.vertices) {
      EXPECT_LE(std::abs(c.dot(v) - face.value), face.face_tol);
      EXPECT_LE((a * v - b).cwiseAbs().maxCoeff(), 1e-8);
      EXPECT_GE(v.minCoeff(), -1e-8);
    }
  }
}

TEST(LpProperty, DimensionMonotoneInBudget) {
  Rng rng(7);
  for (int trial = 0; trial < 30; ++trial) {
    const int n = 10;
    Vec c(n);
    for (int j = 0; j < n; ++j) c[j] = static_cast<double>(rng() % 2);
    auto p = simplex_lp(n, c);
    int prev = -1;
    for (int budget : {0, 1, 2, 4, 8, 16, 64}) {
      lp::FaceOptions fo;
      fo.budget = budget;
      fo.seed = 3;
      const int d = lp::optimal_face(p, fo).dimension;
      EXPECT_GE(d, prev);
      prev = d;
    }
    // Minimizers are the coordinates carrying the smallest cost.
    const auto ties = (c.array() == c.minCoeff()).count();
    EXPECT_EQ(prev, static_cast<int>(ties) - 1);
  }
}

TEST(LpProperty, ResolveFromReportedVertexKeepsValue) {
  Vec c(4);
  c << 0, 0, 1, 0;
  auto p = simplex_lp(4, c);
  auto face = lp::optimal_face(p);
  for (const Vec& v : face.vertices) {
    // Pin the program to the vertex's support; the optimum is unchanged.
    auto q = p;
    q.upper.assign(4, std::nullopt);
    for (int j = 0; j < 4; ++j)
      if (v[j] == 0.0) q.upper[static_cast<std::size_t>(j)] = 0.0;
    EXPECT_NEAR(lp::solve(q).value, face.value, 1e-12);
  }
}
