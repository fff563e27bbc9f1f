// Tilted value functions over measure polytopes: the fiber-constrained value
// F_m, its conjugate G_m, the argmin set M_m in the image of a separating
// family, and Monte Carlo experiments on how often sampled tilts leave a
// degenerate face.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/graph.hpp"
#include "amlab/linalg.hpp"
#include "amlab/lp.hpp"
#include "amlab/measure.hpp"
#include "amlab/rng.hpp"
#include "amlab/tonelli.hpp"

namespace amlab::genericity {

/// A polytope of probability measures on a phase space, given by equality
/// rows (including the unit-mass row), optionally with its extreme points.
struct MeasurePolytope {
  StateSpace space;
  lp::LinearProgram constraints;
  std::vector<Vec> extreme_points;

  Eigen::Index size() const { return space.phase_size(); }

  /// Base-by-phase matrix of the projection.
  Mat projection() const {
    Mat p = Mat::Zero(space.base_size(), space.phase_size());
    for (Eigen::Index i = 0; i < space.phase_size(); ++i) p(space.phase[static_cast<std::size_t>(i)].base_index, i) = 1.0;
    return p;
  }

  void validate() const {
    space.validate();
    require_dims(constraints.cols() == space.phase_size(), "MeasurePolytope: constraint columns != phase size");
    for (const Vec& v : extreme_points) require_dims(v.size() == size(), "MeasurePolytope: extreme point length mismatch");
  }

  static MeasurePolytope simplex(StateSpace s) {
    MeasurePolytope h;
    const Eigen::Index n = s.phase_size();
    h.space = std::move(s);
    h.constraints.matrix = Mat::Ones(1, n);
    h.constraints.rhs = Vec::Ones(1);
    h.constraints.objective = Vec::Zero(n);
    for (Eigen::Index i = 0; i < n; ++i) h.extreme_points.push_back(Vec::Unit(n, i));
    return h;
  }

  /// Invariant edge measures; extreme points are the simple cycle measures
  /// when there are at most `cycle_limit` of them.
  static MeasurePolytope from_graph(const graph::CostGraph& g, std::size_t cycle_limit = 20000) {
    MeasurePolytope h;
    h.space = g.state_space();
    h.constraints = graph::invariant_polytope(g);
    auto cycles = graph::simple_cycles(g, cycle_limit + 1);
    if (cycles.size() <= cycle_limit)
      for (const auto& c : cycles) h.extreme_points.push_back(c.weights(g.edge_count()));
    return h;
  }

  static MeasurePolytope from_grid(const tonelli::PhaseGrid& grid) {
    MeasurePolytope h;
    h.space = grid.state_space();
    h.constraints = tonelli::holonomic_polytope(grid);
    return h;
  }
};

/// Costs base + sum_i s_i * directions[i] with coefficients s in the box [lo, hi].
struct AffineFamily {
  Vec base;
  std::vector<Vec> directions;
  Vec lo;
  Vec hi;

  int dim() const { return static_cast<int>(directions.size()); }

  void validate() const {
    require(base.size() > 0, "AffineFamily: empty base cost");
    require_dims(lo.size() == dim() && hi.size() == dim(), "AffineFamily: box bounds must have one entry per direction");
    for (int i = 0; i < dim(); ++i) {
      require_dims(directions[static_cast<std::size_t>(i)].size() == base.size(),
                   "AffineFamily: direction " + std::to_string(i) + " has the wrong length");
      require(lo[i] <= hi[i], "AffineFamily: empty coefficient box on axis " + std::to_string(i));
    }
    if (dim() > 0) {
      Mat d(base.size(), dim());
      for (int i = 0; i < dim(); ++i) d.col(i) = directions[static_cast<std::size_t>(i)];
      require(numerical_rank(d) == dim(), "AffineFamily: directions are linearly dependent");
    }
  }

  Vec at(const Vec& s) const {
    require_dims(s.size() == dim(), "AffineFamily::at: coefficient length mismatch");
    Vec c = base;
    for (int i = 0; i < dim(); ++i) c += s[i] * directions[static_cast<std::size_t>(i)];
    return c;
  }

  /// Uniform tensor grid with `per_axis` points per axis (9 by default),
  /// reduced so that the total stays at most `cap`.
  std::vector<Vec> grid(int per_axis = 9, long cap = 10000) const {
    require(per_axis >= 1, "AffineFamily::grid: per_axis must be positive");
    if (dim() == 0) return {Vec::Zero(0)};
    while (per_axis > 1 && std::pow(static_cast<double>(per_axis), dim()) > static_cast<double>(cap)) --per_axis;
    long total = 1;
    for (int i = 0; i < dim(); ++i) total *= per_axis;
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(total));
    for (long id = 0; id < total; ++id) {
      Vec s(dim());
      long r = id;
      for (int a = dim() - 1; a >= 0; --a) {
        const int k = static_cast<int>(r % per_axis);
        r /= per_axis;
        s[a] = per_axis == 1 ? 0.5 * (lo[a] + hi[a]) : lo[a] + (hi[a] - lo[a]) * k / (per_axis - 1);
      }
      out.push_back(s);
    }
    return out;
  }
};

/// The m x phase matrix of x = T(pi(mu)).
inline Mat tilt_map(const MeasurePolytope& h, const SeparatingFamily& fam) {
  require(fam.size() >= 1, "tilt_map: separating family is empty");
  for (const Potential& p : fam.functions)
    require_dims(p.values.size() == h.space.base_size(), "tilt_map: family function length != base size");
  return fam.matrix() * h.projection();
}

namespace detail {

inline void check_inputs(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const MeasurePolytope& h) {
  h.validate();
  require_dims(cost.size() == h.size(), "cost vector has " + std::to_string(cost.size()) + " entries, phase size is " +
                                            std::to_string(h.size()));
  require_dims(w.values.size() == h.space.base_size(), "potential w length != base size");
  require(fam.size() >= 1, "separating family is empty");
}

// Phase costs L - (w + sum_i y_i w_i) o pi.
inline Vec tilted_cost(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                       const MeasurePolytope& h) {
  require_dims(y.size() == fam.size(), "tilt vector length != family size");
  Vec u = w.values;
  for (Eigen::Index i = 0; i < y.size(); ++i) u += y[i] * fam.functions[static_cast<std::size_t>(i)].values;
  return cost - pull_back(h.space, Potential{u});
}

}  // namespace detail

struct FmEvaluation {
  Vec x;
  double value = std::numeric_limits<double>::infinity();
  bool finite = false;
};

/// min (L - w o pi).mu over the polytope subject to T(pi(mu)) = x;
/// +infinity when that fiber is empty.
inline FmEvaluation compute_Fm(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& x,
                               const MeasurePolytope& h, const lp::SolverOptions& opt = {}) {
  detail::check_inputs(cost, w, fam, h);
  require_dims(x.size() == fam.size(), "compute_Fm: x length != family size");
  const Mat t = tilt_map(h, fam);
  lp::LinearProgram p;
  const Eigen::Index r = h.constraints.rows();
  p.matrix.resize(r + t.rows(), h.size());
  p.matrix << h.constraints.matrix, t;
  p.rhs.resize(r + t.rows());
  p.rhs << h.constraints.rhs, x;
  p.objective = cost - pull_back(h.space, w);
  const lp::Solution s = lp::solve(p, opt);
  FmEvaluation out;
  out.x = x;
  if (s.status == lp::Status::Unbounded) throw LpError("compute_Fm: unbounded fiber program");
  if (s.optimal()) {
    out.value = s.value;
    out.finite = true;
  }
  return out;
}

/// max over the polytope of <w + sum y_i w_i, pi(mu)> - L(mu).
inline double compute_Gm(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                         const MeasurePolytope& h, const lp::SolverOptions& opt = {}) {
  detail::check_inputs(cost, w, fam, h);
  lp::LinearProgram p = h.constraints;
  p.objective = detail::tilted_cost(cost, w, fam, y, h);
  const lp::Solution s = lp::solve(p, opt);
  if (!s.optimal()) throw LpError(std::string("compute_Gm: LP status ") + lp::to_string(s.status));
  return -s.value;
}

/// max over the given x points of y.x - F_m(x). Exact when the points contain
/// the images of all extreme points; a lower bound otherwise.
inline double legendre_value(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                             const MeasurePolytope& h, const std::vector<Vec>& x_points,
                             const lp::SolverOptions& opt = {}) {
  require(!x_points.empty(), "legendre_value: no x points");
  double best = -std::numeric_limits<double>::infinity();
  for (const Vec& x : x_points) {
    const FmEvaluation f = compute_Fm(cost, w, fam, x, h, opt);
    if (f.finite) best = std::max(best, y.dot(x) - f.value);
  }
  return best;
}

/// G_m by the x-space route over the images of the enumerated extreme points.
inline double compute_Gm_legendre(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                                  const MeasurePolytope& h, const lp::SolverOptions& opt = {}) {
  require(!h.extreme_points.empty(), "compute_Gm_legendre: polytope has no enumerated extreme points");
  const Mat t = tilt_map(h, fam);
  std::vector<Vec> xs;
  for (const Vec& v : h.extreme_points) {
    Vec x = t * v;
    if (std::none_of(xs.begin(), xs.end(), [&](const Vec& z) { return (z - x).cwiseAbs().maxCoeff() <= 1e-14; }))
      xs.push_back(std::move(x));
  }
  return legendre_value(cost, w, fam, y, h, xs, opt);
}

/// Minimizers of the tilted action in measure space, M_K(L - w - y.w).
inline lp::OptimalFace measure_face(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                                    const MeasurePolytope& h, const lp::FaceOptions& fo = {}) {
  detail::check_inputs(cost, w, fam, h);
  lp::LinearProgram p = h.constraints;
  p.objective = detail::tilted_cost(cost, w, fam, y, h);
  return lp::optimal_face(p, fo);
}

/// argmin_x F_m(L, x) - y.x, explored directly in x-space. `value` is the
/// minimum of the tilted action (equal to -G_m), `image_vertices` the points.
inline lp::OptimalFace compute_Mm(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                                  const MeasurePolytope& h, const lp::FaceOptions& fo = {}) {
  detail::check_inputs(cost, w, fam, h);
  lp::LinearProgram p = h.constraints;
  p.objective = detail::tilted_cost(cost, w, fam, y, h);
  return lp::optimal_face_image(p, tilt_map(h, fam), fo);
}

struct InclusionReport {
  bool holds = true;
  double worst_gap = 0.0;  // max over vertices of F_m(T nu) - y.T nu + G_m
  std::optional<Vec> witness;
  int vertices = 0;
};

/// Every vertex nu of the measure-space face must map to a minimizer of
/// F_m(L, .) - y.(.), tested through an independent fiber LP.
inline InclusionReport check_inclusion(const Vec& cost, const Potential& w, const SeparatingFamily& fam, const Vec& y,
                                       const MeasurePolytope& h, double tol = 1e-7, const lp::FaceOptions& fo = {}) {
  const lp::OptimalFace left = measure_face(cost, w, fam, y, h, fo);
  const double g = compute_Gm(cost, w, fam, y, h, fo.solver);
  const Mat t = tilt_map(h, fam);
  InclusionReport r;
  for (const Vec& nu : left.vertices) {
    ++r.vertices;
    const Vec x = t * nu;
    const FmEvaluation f = compute_Fm(cost, w, fam, x, h, fo.solver);
    const double gap = f.finite ? f.value - y.dot(x) + g : std::numeric_limits<double>::infinity();
    r.worst_gap = std::max(r.worst_gap, gap);
    if (gap > tol && r.holds) {
      r.holds = false;
      r.witness = nu;
    }
  }
  return r;
}

struct SubdiffRow {
  Vec y;
  int dimension = 0;             // dimension of M_m(L, y)
  double inequality_gap = 0.0;   // worst violation of G(z) >= G(y) + x.(z - y)
  double support_gap = 0.0;      // worst |G'(y; d) - max_{x in M_m} x.d|
};

struct SubdiffReport {
  std::vector<SubdiffRow> rows;
  double tol = 1e-6;
  bool ok() const {
    return std::all_of(rows.begin(), rows.end(),
                       [&](const SubdiffRow& r) { return r.inequality_gap <= tol && r.support_gap <= tol; });
  }
};

/// Checks M_m(L, y) against the subdifferential of z -> G_m(L, z): each point
/// must be a subgradient (sampled z), and one-sided difference quotients of the
/// piecewise-linear G along sampled directions must match the support function
/// of M_m.
inline SubdiffReport subdiff_identity_check(const Vec& cost, const Potential& w, const SeparatingFamily& fam,
                                            const std::vector<Vec>& y_grid, const MeasurePolytope& h,
                                            std::uint64_t seed = 0, int samples = 16, double step = 1e-5,
                                            double tol = 1e-6, const lp::FaceOptions& fo = {}) {
  require(!y_grid.empty(), "subdiff_identity_check: empty y grid");
  SubdiffReport rep;
  rep.tol = tol;
  Rng rng(seed);
  const auto m = fam.size();
  auto G = [&](const Vec& z) { return compute_Gm(cost, w, fam, z, h, fo.solver); };
  for (const Vec& y : y_grid) {
    SubdiffRow row;
    row.y = y;
    const lp::OptimalFace mm = compute_Mm(cost, w, fam, y, h, fo);
    row.dimension = mm.dimension;
    const double gy = -mm.value;
    std::vector<Vec> dirs;
    for (Eigen::Index i = 0; i < m; ++i) {
      dirs.push_back(Vec::Unit(m, i));
      dirs.push_back(-Vec::Unit(m, i));
    }
    for (int s = 0; s < samples; ++s) dirs.push_back(gaussian_vec(rng, m).normalized());
    for (const Vec& d : dirs) {
      for (double scale : {1e-3, 0.1, 1.0}) {
        const Vec z = y + scale * d;
        const double gz = G(z);
        for (const Vec& x : mm.image_vertices) row.inequality_gap = std::max(row.inequality_gap, gy + x.dot(z - y) - gz);
      }
      const double fd = (G(y + step * d) - gy) / step;
      double support = -std::numeric_limits<double>::infinity();
      for (const Vec& x : mm.image_vertices) support = std::max(support, x.dot(d));
      row.support_gap = std::max(row.support_gap, std::abs(fd - support));
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

struct TiltExperimentConfig {
  AffineFamily family;
  SeparatingFamily separating;
  Potential w;
  MeasurePolytope polytope;
  int trials = 100;
  double radius = 1e-2;
  int l_samples = 9;  // per axis of the coefficient box
  std::uint64_t seed = 0;
  int threads = 1;
  bool check_inclusion = false;
  double inclusion_tol = 1e-7;
  lp::FaceOptions face{};
  std::function<void(int done, int total)> progress;  // called after every 100 trials
};

struct TiltExperimentReport {
  int trials = 0;
  double radius = 0.0;
  std::uint64_t seed = 0;
  int family_dim = 0;
  long pairs = 0;
  double fraction_ok = 0.0;  // fraction of (y, L) pairs with dim M_m <= family_dim
  int worst_dim = 0;
  int worst_face_dim = 0;    // measure-space face M_K(L - w - y.w)
  std::vector<long> dim_counts;
  long inclusion_checked = 0;
  long inclusion_failures = 0;

  /// Fraction of pairs with dim M_m <= k.
  double fraction_at_most(int k) const {
    long c = 0;
    for (int d = 0; d <= k && d < static_cast<int>(dim_counts.size()); ++d) c += dim_counts[static_cast<std::size_t>(d)];
    return pairs ? static_cast<double>(c) / static_cast<double>(pairs) : 0.0;
  }
};

namespace detail {

struct TrialResult {
  std::vector<int> dims;
  std::vector<int> face_dims;
  long inclusion_failures = 0;
};

inline TrialResult run_trial(const TiltExperimentConfig& cfg, const std::vector<Vec>& coeffs, int trial) {
  Rng rng(mix_seed(cfg.seed, static_cast<std::uint64_t>(trial)));
  const Vec y = uniform_ball(rng, cfg.separating.size(), cfg.radius);
  lp::FaceOptions fo = cfg.face;
  fo.seed = mix_seed(cfg.seed ^ 0x5bd1e995ULL, static_cast<std::uint64_t>(trial));
  TrialResult r;
  for (const Vec& s : coeffs) {
    const Vec cost = cfg.family.at(s);
    const lp::OptimalFace mm = compute_Mm(cost, cfg.w, cfg.separating, y, cfg.polytope, fo);
    r.dims.push_back(mm.dimension);
    const lp::OptimalFace mk = measure_face(cost, cfg.w, cfg.separating, y, cfg.polytope, fo);
    r.face_dims.push_back(mk.dimension);
    if (cfg.check_inclusion &&
        !genericity::check_inclusion(cost, cfg.w, cfg.separating, y, cfg.polytope, cfg.inclusion_tol, fo).holds)
      ++r.inclusion_failures;
  }
  return r;
}

}  // namespace detail

/// Samples tilts y uniformly in the radius ball and, for each family member on
/// the coefficient grid, records dim M_m(L, y). Per-trial seeds derive from the
/// master seed and the trial index, so results do not depend on `threads`.
inline TiltExperimentReport tilt_experiment(const TiltExperimentConfig& cfg) {
  require(cfg.trials >= 1, "tilt_experiment: trials must be at least 1");
  require(cfg.radius > 0 && std::isfinite(cfg.radius), "tilt_experiment: radius must be positive");
  require(cfg.threads >= 1, "tilt_experiment: threads must be at least 1");
  cfg.family.validate();
  cfg.polytope.validate();
  require_dims(cfg.family.base.size() == cfg.polytope.size(), "tilt_experiment: family cost length != phase size");
  const std::vector<Vec> coeffs = cfg.family.grid(cfg.l_samples);
  std::vector<detail::TrialResult> results(static_cast<std::size_t>(cfg.trials));
  if (cfg.threads == 1) {
    for (int t = 0; t < cfg.trials; ++t) {
      results[static_cast<std::size_t>(t)] = detail::run_trial(cfg, coeffs, t);
      if (cfg.progress && (t + 1) % 100 == 0) cfg.progress(t + 1, cfg.trials);
    }
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(static_cast<std::size_t>(cfg.threads));
    for (int k = 0; k < cfg.threads; ++k)
      pool.emplace_back([&, k] {
        try {
          for (int t = k; t < cfg.trials; t += cfg.threads) results[static_cast<std::size_t>(t)] = detail::run_trial(cfg, coeffs, t);
        } catch (...) {
          errors[static_cast<std::size_t>(k)] = std::current_exception();
        }
      });
    for (auto& th : pool) th.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
    if (cfg.progress)
      for (int t = 100; t <= cfg.trials; t += 100) cfg.progress(t, cfg.trials);
  }
  TiltExperimentReport rep;
  rep.trials = cfg.trials;
  rep.radius = cfg.radius;
  rep.seed = cfg.seed;
  rep.family_dim = cfg.family.dim();
  long ok = 0;
  for (const auto& r : results) {
    for (std::size_t i = 0; i < r.dims.size(); ++i) {
      const int d = r.dims[i];
      ++rep.pairs;
      if (d <= rep.family_dim) ++ok;
      rep.worst_dim = std::max(rep.worst_dim, d);
      rep.worst_face_dim = std::max(rep.worst_face_dim, r.face_dims[i]);
      if (static_cast<int>(rep.dim_counts.size()) <= d) rep.dim_counts.resize(static_cast<std::size_t>(d) + 1, 0);
      ++rep.dim_counts[static_cast<std::size_t>(d)];
    }
    rep.inclusion_failures += r.inclusion_failures;
    if (cfg.check_inclusion) rep.inclusion_checked += static_cast<long>(r.dims.size());
  }
  rep.fraction_ok = static_cast<double>(ok) / static_cast<double>(rep.pairs);
  return rep;
}

/// Total-variation distance from nu to the convex hull of the points.
inline double hull_distance(const Vec& nu, const std::vector<Vec>& points, const lp::SolverOptions& opt = {}) {
  require(!points.empty(), "hull_distance: no points");
  const Eigen::Index n = nu.size();
  const auto k = static_cast<Eigen::Index>(points.size());
  lp::LinearProgram p;
  p.matrix = Mat::Zero(n + 1, k + 2 * n);
  for (Eigen::Index j = 0; j < k; ++j) {
    require_dims(points[static_cast<std::size_t>(j)].size() == n, "hull_distance: point length mismatch");
    p.matrix.block(0, j, n, 1) = points[static_cast<std::size_t>(j)];
    p.matrix(n, j) = 1.0;
  }
  p.matrix.block(0, k, n, n) = Mat::Identity(n, n);
  p.matrix.block(0, k + n, n, n) = -Mat::Identity(n, n);
  p.rhs.resize(n + 1);
  p.rhs << nu, 1.0;
  p.objective = Vec::Zero(k + 2 * n);
  p.objective.tail(2 * n).setConstant(0.5);
  const lp::Solution s = lp::solve(p, opt);
  if (!s.optimal()) throw LpError("hull_distance: LP failed");
  return std::max(0.0, s.value);
}

struct SemicontinuityReport {
  std::vector<double> scales;   // delta, delta/2, delta/4
  std::vector<double> epsilon;  // empirical modulus at each scale
  int base_dimension = 0;
  int probes = 0;
  bool nonincreasing() const {
    for (std::size_t i = 1; i < epsilon.size(); ++i)
      if (epsilon[i] > epsilon[i - 1]) return false;
    return true;
  }
};

/// Perturbs (L, u) by at most delta in sup norm and measures how far the new
/// minimizing vertices land from the hull of the unperturbed face. The modulus
/// at a scale is the worst distance over all sampled perturbations no larger
/// than that scale, pooled across the three levels.
inline SemicontinuityReport semicontinuity_probe(const Vec& cost, const Potential& u, const MeasurePolytope& h,
                                                 double delta, int probes, std::uint64_t seed = 0,
                                                 const lp::FaceOptions& fo = {}) {
  require(delta >= 0 && std::isfinite(delta), "semicontinuity_probe: delta must be nonnegative");
  require(probes >= 1, "semicontinuity_probe: probes must be positive");
  h.validate();
  require_dims(cost.size() == h.size() && u.values.size() == h.space.base_size(),
               "semicontinuity_probe: cost or potential length mismatch");
  auto face_of = [&](const Vec& c, const Vec& pot) {
    lp::LinearProgram p = h.constraints;
    p.objective = c - pull_back(h.space, Potential{pot});
    return lp::optimal_face(p, fo);
  };
  const lp::OptimalFace base = face_of(cost, u.values);
  SemicontinuityReport rep;
  rep.base_dimension = base.dimension;
  rep.scales = {delta, delta / 2, delta / 4};
  std::vector<std::pair<double, double>> samples;  // (scale, distance)
  Rng rng(seed);
  for (double level : rep.scales)
    for (int k = 0; k < probes; ++k) {
      const double s = level * (1.0 - uniform(rng));  // in (0, level]
      Vec dc(cost.size()), du(u.values.size());
      for (Eigen::Index i = 0; i < dc.size(); ++i) dc[i] = uniform(rng, -1, 1);
      for (Eigen::Index i = 0; i < du.size(); ++i) du[i] = uniform(rng, -1, 1);
      const lp::OptimalFace f = face_of(cost + s * dc, u.values + s * du);
      double worst = 0.0;
      for (const Vec& v : f.vertices) worst = std::max(worst, hull_distance(v, base.vertices, fo.solver));
      samples.emplace_back(s, worst);
      ++rep.probes;
    }
  for (double level : rep.scales) {
    double eps = 0.0;
    for (const auto& [s, d] : samples)
      if (s <= level) eps = std::max(eps, d);
    rep.epsilon.push_back(eps);
  }
  return rep;
}

}  // namespace amlab::genericity
