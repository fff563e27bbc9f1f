// Finite measure spaces: phase points over base points, probability weights,
// potentials on the base, the projection, the pairing, total-variation
// distance, separating families of potentials and the C-infinity metric on
// periodic grid functions.
#pragma once

#include <algorithm>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/linalg.hpp"
#include "amlab/rng.hpp"

namespace amlab {

inline constexpr double kMassTol = 1e-10;

struct PhasePoint {
  std::string label;
  int base_index = 0;
  std::vector<double> coords;  // extra coordinates, e.g. velocity
};

struct StateSpace {
  std::vector<std::string> base_labels;
  std::vector<PhasePoint> phase;

  Eigen::Index base_size() const { return static_cast<Eigen::Index>(base_labels.size()); }
  Eigen::Index phase_size() const { return static_cast<Eigen::Index>(phase.size()); }

  void validate() const {
    require(!base_labels.empty(), "StateSpace: no base points");
    require(!phase.empty(), "StateSpace: no phase points");
    for (std::size_t i = 0; i < phase.size(); ++i)
      require(phase[i].base_index >= 0 && phase[i].base_index < base_size(),
              "StateSpace: phase point " + std::to_string(i) + " has invalid base_index " +
                  std::to_string(phase[i].base_index));
  }

  /// Phase space equal to the base (identity projection).
  static StateSpace identity(int n) {
    StateSpace s;
    for (int i = 0; i < n; ++i) {
      s.base_labels.push_back(std::to_string(i));
      s.phase.push_back({std::to_string(i), i, {}});
    }
    return s;
  }
};

/// Nonnegative weights of total mass one.
class DiscreteMeasure {
 public:
  explicit DiscreteMeasure(Vec w, double tol = kMassTol) : w_(std::move(w)) {
    require(w_.size() > 0, "DiscreteMeasure: empty weight vector");
    require(w_.allFinite(), "DiscreteMeasure: non-finite weight");
    require(w_.minCoeff() >= -tol, "DiscreteMeasure: negative weight");
    require(std::abs(w_.sum() - 1.0) <= tol,
            "DiscreteMeasure: total mass " + std::to_string(w_.sum()) + " != 1");
    w_ = w_.cwiseMax(0.0);
  }

  static DiscreteMeasure dirac(Eigen::Index n, Eigen::Index at) {
    require(at >= 0 && at < n, "DiscreteMeasure::dirac: index out of range");
    return DiscreteMeasure(Vec::Unit(n, at));
  }
  static DiscreteMeasure uniform(Eigen::Index n) { return DiscreteMeasure(Vec::Constant(n, 1.0 / static_cast<double>(n))); }
  /// Renormalizes a nonnegative vector with positive total (for numerical LP output).
  static DiscreteMeasure normalized(Vec w) {
    w = w.cwiseMax(0.0);
    const double s = w.sum();
    require(s > 0.0, "DiscreteMeasure::normalized: zero total mass");
    return DiscreteMeasure(w / s);
  }

  const Vec& weights() const { return w_; }
  Eigen::Index size() const { return w_.size(); }
  double mass() const { return w_.sum(); }
  double operator[](Eigen::Index i) const { return w_[i]; }

 private:
  Vec w_;
};

/// A function on the base points.
struct Potential {
  Vec values;

  static Potential constant(Eigen::Index n, double c) { return {Vec::Constant(n, c)}; }
  static Potential indicator(Eigen::Index n, Eigen::Index at) { return {Vec::Unit(n, at)}; }
};

inline double pair(const Potential& u, const DiscreteMeasure& nu) {
  require_dims(u.values.size() == nu.size(), "pair: potential has " + std::to_string(u.values.size()) +
                                                 " values, measure has " + std::to_string(nu.size()));
  return u.values.dot(nu.weights());
}

/// Pushforward n_phase -> n_base under phase -> base_index.
inline Vec project_weights(const StateSpace& space, const Vec& mu) {
  require_dims(mu.size() == space.phase_size(), "project: measure length != phase size");
  Vec out = Vec::Zero(space.base_size());
  for (Eigen::Index i = 0; i < mu.size(); ++i) out[space.phase[static_cast<std::size_t>(i)].base_index] += mu[i];
  return out;
}

inline DiscreteMeasure project(const StateSpace& space, const DiscreteMeasure& mu) {
  return DiscreteMeasure(project_weights(space, mu.weights()));
}

/// Potential composed with the projection: a cost vector over phase points.
inline Vec pull_back(const StateSpace& space, const Potential& u) {
  require_dims(u.values.size() == space.base_size(), "pull_back: potential length != base size");
  Vec out(space.phase_size());
  for (Eigen::Index i = 0; i < out.size(); ++i) out[i] = u.values[space.phase[static_cast<std::size_t>(i)].base_index];
  return out;
}

/// Total-variation distance.
inline double metric_d(const DiscreteMeasure& a, const DiscreteMeasure& b) {
  require_dims(a.size() == b.size(), "metric_d: measures of different length");
  return 0.5 * (a.weights() - b.weights()).cwiseAbs().sum();
}

inline double tv_distance(const Vec& a, const Vec& b) { return 0.5 * (a - b).cwiseAbs().sum(); }

// ---------------------------------------------------------------------------
// Separating families

struct SeparatingFamily {
  std::vector<Potential> functions;
  std::optional<double> verified_epsilon;

  Eigen::Index size() const { return static_cast<Eigen::Index>(functions.size()); }

  /// m x n_base matrix whose rows are the potentials.
  Mat matrix() const {
    require(!functions.empty(), "SeparatingFamily: empty family");
    const Eigen::Index n = functions.front().values.size();
    Mat w(size(), n);
    for (Eigen::Index i = 0; i < size(); ++i) {
      require_dims(functions[static_cast<std::size_t>(i)].values.size() == n,
                   "SeparatingFamily: potentials of different length");
      w.row(i) = functions[static_cast<std::size_t>(i)].values.transpose();
    }
    return w;
  }

  /// T_m(nu) = (<w_1, nu>, ..., <w_m, nu>).
  Vec apply(const Vec& base_weights) const { return matrix() * base_weights; }
};

/// A pair of base measures with equal images that are at least eps apart.
struct FiberViolation {
  Vec first, second;
  double distance = 0.0;
};

/// Samples pairs in a common fiber of T_m: a random base measure plus the two
/// endpoints of a random chord of the fiber through it.
inline std::optional<FiberViolation> find_fiber_violation(const SeparatingFamily& fam, double eps,
                                                          int samples, Rng& rng) {
  const Mat w = fam.matrix();
  const Eigen::Index n = w.cols();
  Mat m(w.rows() + 1, n);
  m << w, Mat::Ones(1, n);
  Eigen::FullPivLU<Mat> lu(m);
  const Mat kernel = lu.kernel();
  if (lu.rank() == n || kernel.cols() == 0) return std::nullopt;
  for (int s = 0; s < samples; ++s) {
    Vec eta;
    switch (s % 3) {
      case 0: eta = Vec::Unit(n, std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng)); break;
      case 1: {
        const auto i = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        const auto j = std::uniform_int_distribution<Eigen::Index>(0, n - 1)(rng);
        const double t = uniform(rng);
        eta = Vec::Zero(n);
        eta[i] += t;
        eta[j] += 1.0 - t;
        break;
      }
      default: eta = dirichlet(rng, n, 0.5);
    }
    Vec dir = kernel * gaussian_vec(rng, kernel.cols());
    if (dir.cwiseAbs().maxCoeff() < 1e-14) continue;
    double tp = std::numeric_limits<double>::infinity(), tm = tp;
    for (Eigen::Index i = 0; i < n; ++i) {
      if (dir[i] < 0) tp = std::min(tp, eta[i] / -dir[i]);
      if (dir[i] > 0) tm = std::min(tm, eta[i] / dir[i]);
    }
    if (!std::isfinite(tp) || !std::isfinite(tm)) continue;
    Vec a = (eta + tp * dir).cwiseMax(0.0), b = (eta - tm * dir).cwiseMax(0.0);
    a /= a.sum();
    b /= b.sum();
    const double d = tv_distance(a, b);
    if (d >= eps) return FiberViolation{a, b, d};
  }
  return std::nullopt;
}

/// Greedy family of coordinate indicators in seeded random order, grown until
/// sampled fibers have diameter below eps. With n-1 indicators T_m is injective
/// on the simplex, so the default cap always verifies.
inline SeparatingFamily build_separating_family(const StateSpace& space, double eps, int sample_budget,
                                                std::uint64_t seed, int max_functions = -1) {
  space.validate();
  require(eps > 0.0, "build_separating_family: eps must be positive");
  require(sample_budget >= 0, "build_separating_family: negative sample budget");
  const Eigen::Index n = space.base_size();
  if (max_functions < 0) max_functions = static_cast<int>(std::max<Eigen::Index>(1, n - 1));
  require(max_functions >= 1, "build_separating_family: max_functions must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
  std::shuffle(order.begin(), order.end(), rng);
  SeparatingFamily fam;
  for (int k = 0; k < max_functions && k < n; ++k) {
    fam.functions.push_back(Potential::indicator(n, order[static_cast<std::size_t>(k)]));
    if (!find_fiber_violation(fam, eps, sample_budget, rng)) {
      fam.verified_epsilon = eps;
      return fam;
    }
  }
  return fam;
}

// ---------------------------------------------------------------------------
// C-infinity metric on periodic grid functions

struct PeriodicGrid {
  std::vector<int> shape;        // points per axis (last axis fastest in the flat index)
  std::vector<double> spacing;   // grid step per axis

  Eigen::Index size() const {
    Eigen::Index s = 1;
    for (int n : shape) s *= n;
    return s;
  }
  void validate() const {
    require(!shape.empty() && shape.size() == spacing.size(), "PeriodicGrid: shape/spacing mismatch");
    for (std::size_t d = 0; d < shape.size(); ++d)
      require(shape[d] >= 1 && spacing[d] > 0, "PeriodicGrid: invalid axis " + std::to_string(d));
  }
  bool operator==(const PeriodicGrid&) const = default;
};

struct GridPotential {
  PeriodicGrid grid;
  Vec values;
};

struct CinfDistance {
  double value = 0.0;
  double tail_bound = 0.0;     // bound on the omitted orders k > k_max
  std::vector<double> norms;   // ||u - v||_k for k = 0..k_max
};

namespace detail {

inline Vec forward_difference(const PeriodicGrid& g, const Vec& u, std::size_t axis) {
  const auto dims = g.shape.size();
  Eigen::Index stride = 1;
  for (std::size_t d = dims; d-- > axis + 1;) stride *= g.shape[d];
  const Eigen::Index len = g.shape[axis];
  Vec out(u.size());
  for (Eigen::Index i = 0; i < u.size(); ++i) {
    const Eigen::Index coord = (i / stride) % len;
    const Eigen::Index j = i + ((coord + 1 == len) ? -(len - 1) * stride : stride);
    out[i] = (u[j] - u[i]) / g.spacing[axis];
  }
  return out;
}

}  // namespace detail

/// sum_{k <= k_max} arctan(||u - v||_k) / 2^k with ||.||_k the max of all
/// forward-difference derivatives of order <= k.
inline CinfDistance cinf_metric(const GridPotential& u, const GridPotential& v, int k_max) {
  u.grid.validate();
  require_dims(u.grid == v.grid, "cinf_metric: grids differ");
  require_dims(u.values.size() == u.grid.size() && v.values.size() == v.grid.size(),
               "cinf_metric: values do not match the grid size");
  require(k_max >= 0, "cinf_metric: k_max must be >= 0");
  const auto dims = u.grid.shape.size();
  // Derivatives of exact order k, indexed by nondecreasing axis sequences.
  std::vector<Vec> layer{u.values - v.values};
  std::vector<std::size_t> last_axis{0};
  CinfDistance out;
  double running = 0.0;
  for (int k = 0; k <= k_max; ++k) {
    if (k > 0) {
      std::vector<Vec> next;
      std::vector<std::size_t> next_axis;
      for (std::size_t t = 0; t < layer.size(); ++t)
        for (std::size_t a = last_axis[t]; a < dims; ++a) {
          next.push_back(detail::forward_difference(u.grid, layer[t], a));
          next_axis.push_back(a);
        }
      layer = std::move(next);
      last_axis = std::move(next_axis);
    }
    for (const Vec& d : layer) running = std::max(running, d.cwiseAbs().maxCoeff());
    out.norms.push_back(running);
    out.value += std::atan(running) / std::ldexp(1.0, k);
  }
  out.tail_bound = (std::numbers::pi / 2.0) / std::ldexp(1.0, k_max);
  return out;
}

}  // namespace amlab
