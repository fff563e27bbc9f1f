// Discretized Lagrangians on the torus: a truncated phase grid, the polytope
// of holonomic measures, occupation measures of closed curves and the
// minimizing measures of the tilted action.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <string>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/linalg.hpp"
#include "amlab/lp.hpp"
#include "amlab/measure.hpp"

namespace amlab::tonelli {

/// Positions x in [0,1)^dim with nx cells per axis, velocities on [-vmax, vmax]^dim
/// with nv intervals per axis (nv + 1 nodes, nv even so v = 0 is a node), and
/// nt time slices for the time-periodic case.
struct PhaseGrid {
  int dim = 1;
  int nx = 16;
  int nv = 16;
  double vmax = 2.0;
  double dt = 0.0;  // 0 selects 1/nx (autonomous) or 1/nt (time-periodic)
  int nt = 1;
  bool time_periodic = false;

  void validate() const {
    require(dim >= 1, "PhaseGrid: dim must be at least 1");
    require(nx >= 1, "PhaseGrid: nx must be positive");
    require(nv >= 2 && nv % 2 == 0, "PhaseGrid: nv must be a positive even number");
    require(vmax > 0 && std::isfinite(vmax), "PhaseGrid: vmax must be positive");
    require(dt >= 0 && std::isfinite(dt), "PhaseGrid: dt must be positive");
    require(nt >= 1, "PhaseGrid: nt must be positive");
    if (time_periodic)
      require(dt == 0.0 || std::abs(dt * nt - 1.0) < 1e-12, "PhaseGrid: time-periodic grids need dt = 1/nt");
    else
      require(nt == 1, "PhaseGrid: nt > 1 requires time_periodic");
  }

  double step() const { return dt > 0 ? dt : (time_periodic ? 1.0 / nt : 1.0 / nx); }
  double dv() const { return 2.0 * vmax / nv; }
  int v_nodes() const { return nv + 1; }
  int slices() const { return time_periodic ? nt : 1; }

  Eigen::Index x_cells() const { return ipow(nx, dim); }
  Eigen::Index v_cells() const { return ipow(nv + 1, dim); }
  Eigen::Index size() const { return slices() * x_cells() * v_cells(); }

  Eigen::Index index(int t, Eigen::Index xc, Eigen::Index vc) const { return (t * x_cells() + xc) * v_cells() + vc; }
  int slice_of(Eigen::Index i) const { return static_cast<int>(i / (x_cells() * v_cells())); }
  Eigen::Index x_of(Eigen::Index i) const { return (i / v_cells()) % x_cells(); }
  Eigen::Index v_of(Eigen::Index i) const { return i % v_cells(); }

  /// Multi-index of a flat cell id, last axis fastest.
  std::vector<int> unflatten(Eigen::Index id, int base) const {
    std::vector<int> out(static_cast<std::size_t>(dim));
    for (int a = dim - 1; a >= 0; --a) {
      out[static_cast<std::size_t>(a)] = static_cast<int>(id % base);
      id /= base;
    }
    return out;
  }
  Eigen::Index flatten(const std::vector<int>& idx, int base) const {
    Eigen::Index id = 0;
    for (int a = 0; a < dim; ++a) id = id * base + idx[static_cast<std::size_t>(a)];
    return id;
  }

  Vec position(Eigen::Index xc) const {
    const auto idx = unflatten(xc, nx);
    Vec x(dim);
    for (int a = 0; a < dim; ++a) x[a] = static_cast<double>(idx[static_cast<std::size_t>(a)]) / nx;
    return x;
  }
  Vec velocity(Eigen::Index vc) const {
    const auto idx = unflatten(vc, nv + 1);
    Vec v(dim);
    for (int a = 0; a < dim; ++a) v[a] = -vmax + idx[static_cast<std::size_t>(a)] * dv();
    return v;
  }
  double time(int t) const { return time_periodic ? static_cast<double>(t) / nt : 0.0; }

  /// Base points are (slice, x cell); phase points are grid cells over them.
  StateSpace state_space() const {
    StateSpace s;
    for (int t = 0; t < slices(); ++t)
      for (Eigen::Index xc = 0; xc < x_cells(); ++xc) s.base_labels.push_back(std::to_string(t * x_cells() + xc));
    s.phase.reserve(static_cast<std::size_t>(size()));
    for (Eigen::Index i = 0; i < size(); ++i) {
      std::vector<double> coords = to_std(velocity(v_of(i)));
      s.phase.push_back({std::to_string(i), static_cast<int>(slice_of(i) * x_cells() + x_of(i)), std::move(coords)});
    }
    return s;
  }

  bool operator==(const PhaseGrid&) const = default;

 private:
  static Eigen::Index ipow(int b, int e) {
    Eigen::Index r = 1;
    for (int i = 0; i < e; ++i) r *= b;
    return r;
  }
};

struct LagrangianSpec {
  std::string name;
  std::function<double(double t, const Vec& x, const Vec& v)> eval;
  bool time_periodic = false;

  double operator()(double t, const Vec& x, const Vec& v) const { return eval(t, x, v); }
};

/// 1/2 |v|^2 - V(x) with V given by samples on a periodic grid of `per_axis`
/// points per axis, interpolated multilinearly.
inline LagrangianSpec mechanical(std::vector<double> samples, int dim = 1, std::string name = "mechanical") {
  require(!samples.empty(), "mechanical: empty potential samples");
  int per_axis = static_cast<int>(std::lround(std::pow(static_cast<double>(samples.size()), 1.0 / dim)));
  Eigen::Index expect = 1;
  for (int a = 0; a < dim; ++a) expect *= per_axis;
  require(expect == static_cast<Eigen::Index>(samples.size()),
          "mechanical: " + std::to_string(samples.size()) + " samples do not form a " + std::to_string(dim) +
              "-dimensional grid");
  for (double s : samples) require(std::isfinite(s), "mechanical: non-finite potential sample");
  auto potential = [samples = std::move(samples), per_axis, dim](const Vec& x) {
    double acc = 0.0;
    for (int corner = 0; corner < (1 << dim); ++corner) {
      double w = 1.0;
      Eigen::Index id = 0;
      for (int a = 0; a < dim; ++a) {
        const double p = (x[a] - std::floor(x[a])) * per_axis;
        const int lo = static_cast<int>(std::floor(p)) % per_axis;
        const double fr = p - std::floor(p);
        const bool up = (corner >> a) & 1;
        w *= up ? fr : 1.0 - fr;
        id = id * per_axis + (up ? (lo + 1) % per_axis : lo);
      }
      if (w != 0.0) acc += w * samples[static_cast<std::size_t>(id)];
    }
    return acc;
  };
  return {std::move(name), [potential](double, const Vec& x, const Vec& v) { return 0.5 * v.squaredNorm() - potential(x); },
          false};
}

inline LagrangianSpec flat() {
  return {"flat", [](double, const Vec&, const Vec& v) { return 0.5 * v.squaredNorm(); }, false};
}

/// 1/2 |v|^2 + amplitude * sum_a cos(2 pi * frequency * x_a).
inline LagrangianSpec cosine(double amplitude, int frequency, std::string name) {
  return {std::move(name),
          [amplitude, frequency](double, const Vec& x, const Vec& v) {
            double pot = 0.0;
            for (Eigen::Index a = 0; a < x.size(); ++a) pot += std::cos(2 * std::numbers::pi * frequency * x[a]);
            return 0.5 * v.squaredNorm() + amplitude * pot;
          },
          false};
}

inline LagrangianSpec pendulum(double amplitude = 1.0) { return cosine(amplitude, 1, "pendulum"); }
inline LagrangianSpec two_well(double amplitude = 1.0) { return cosine(amplitude, 2, "two-well"); }

/// Pendulum with a travelling-wave forcing eps * cos(2 pi (x - t)).
inline LagrangianSpec forced_pendulum(double eps) {
  return {"forced-pendulum",
          [eps](double t, const Vec& x, const Vec& v) {
            double pot = 0.0;
            for (Eigen::Index a = 0; a < x.size(); ++a)
              pot += std::cos(2 * std::numbers::pi * x[a]) + eps * std::cos(2 * std::numbers::pi * (x[a] - t));
            return 0.5 * v.squaredNorm() + pot;
          },
          true};
}

/// Smallest sampled second difference of L along each velocity axis.
inline double fiberwise_convexity(const LagrangianSpec& L, const PhaseGrid& g) {
  g.validate();
  double worst = std::numeric_limits<double>::infinity();
  const double h = g.dv();
  for (int t = 0; t < g.slices(); ++t)
    for (Eigen::Index xc = 0; xc < g.x_cells(); ++xc) {
      const Vec x = g.position(xc);
      for (Eigen::Index vc = 0; vc < g.v_cells(); ++vc) {
        const Vec v = g.velocity(vc);
        for (int a = 0; a < g.dim; ++a) {
          if (v[a] - h < -g.vmax - 1e-12 || v[a] + h > g.vmax + 1e-12) continue;
          Vec lo = v, hi = v;
          lo[a] -= h;
          hi[a] += h;
          worst = std::min(worst, L(g.time(t), x, hi) - 2 * L(g.time(t), x, v) + L(g.time(t), x, lo));
        }
      }
    }
  return worst;
}

inline bool is_fiberwise_convex(const LagrangianSpec& L, const PhaseGrid& g, double tol = 1e-6) {
  return fiberwise_convexity(L, g) >= -tol;
}

namespace detail {

// Splits the mass of x cell `xc` moved by v * dt onto neighbouring cells.
inline std::vector<std::pair<Eigen::Index, double>> transfer(const PhaseGrid& g, Eigen::Index xc, const Vec& v) {
  const auto idx = g.unflatten(xc, g.nx);
  std::vector<std::pair<Eigen::Index, double>> out;
  for (int corner = 0; corner < (1 << g.dim); ++corner) {
    double w = 1.0;
    std::vector<int> to(static_cast<std::size_t>(g.dim));
    for (int a = 0; a < g.dim; ++a) {
      const double s = v[a] * g.step() * g.nx;
      const double fl = std::floor(s + 1e-12);
      const double fr = std::max(0.0, s - fl);
      const bool up = (corner >> a) & 1;
      w *= up ? fr : 1.0 - fr;
      long target = idx[static_cast<std::size_t>(a)] + static_cast<long>(fl) + (up ? 1 : 0);
      target %= g.nx;
      if (target < 0) target += g.nx;
      to[static_cast<std::size_t>(a)] = static_cast<int>(target);
    }
    if (w > 1e-15) out.emplace_back(g.flatten(to, g.nx), w);
  }
  return out;
}

}  // namespace detail

/// Holonomy rows (one per slice and x cell) followed by the unit-mass row.
inline lp::LinearProgram holonomic_polytope(const PhaseGrid& g) {
  g.validate();
  const Eigen::Index nb = g.slices() * g.x_cells();
  lp::LinearProgram p;
  p.matrix = Mat::Zero(nb + 1, g.size());
  p.rhs = Vec::Zero(nb + 1);
  p.rhs[nb] = 1.0;
  p.objective = Vec::Zero(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const int t = g.slice_of(i);
    const Eigen::Index xc = g.x_of(i);
    const int next = (t + 1) % g.slices();
    p.matrix(t * g.x_cells() + xc, i) -= 1.0;  // mass leaving (for autonomous: returning) through this cell
    for (const auto& [to, w] : detail::transfer(g, xc, g.velocity(g.v_of(i))))
      p.matrix(next * g.x_cells() + to, i) += w;
    p.matrix(nb, i) = 1.0;
  }
  return p;
}

/// Largest absolute holonomy row residual of a measure.
inline double holonomy_residual(const PhaseGrid& g, const Vec& mu) {
  require_dims(mu.size() == g.size(), "holonomy_residual: measure length != grid size");
  const lp::LinearProgram p = holonomic_polytope(g);
  const Eigen::Index nb = p.rows() - 1;
  return (p.matrix.topRows(nb) * mu).cwiseAbs().maxCoeff();
}

/// Action costs L(t, x, v) - c.v - u(t, x) on every cell.
inline Vec action_costs(const LagrangianSpec& L, const PhaseGrid& g, const Vec& c, const Vec* potential = nullptr) {
  g.validate();
  require_dims(c.size() == g.dim, "action_costs: cohomology class has length " + std::to_string(c.size()) +
                                      ", grid dimension is " + std::to_string(g.dim));
  if (potential)
    require_dims(potential->size() == g.slices() * g.x_cells(), "action_costs: potential length != base size");
  require(L.time_periodic == g.time_periodic || !L.time_periodic,
          "action_costs: time-dependent Lagrangian '" + L.name + "' needs a time-periodic grid");
  Vec cost(g.size());
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    const int t = g.slice_of(i);
    const Vec v = g.velocity(g.v_of(i));
    cost[i] = L(g.time(t), g.position(g.x_of(i)), v) - c.dot(v);
    if (potential) cost[i] -= (*potential)[t * g.x_cells() + g.x_of(i)];
    require(std::isfinite(cost[i]), "action_costs: Lagrangian '" + L.name + "' is not finite on the grid");
  }
  return cost;
}

inline lp::OptimalFace minimizing_measures(const LagrangianSpec& L, const Vec& c, const PhaseGrid& g,
                                           const lp::FaceOptions& fo = {}, const Vec* potential = nullptr) {
  lp::LinearProgram p = holonomic_polytope(g);
  p.objective = action_costs(L, g, c, potential);
  return lp::optimal_face(p, fo);
}

/// Average velocity of a measure on the grid.
inline Vec rotation_vector(const PhaseGrid& g, const Vec& mu) {
  require_dims(mu.size() == g.size(), "rotation_vector: measure length != grid size");
  Vec rho = Vec::Zero(g.dim);
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu[i] != 0.0) rho += mu[i] * g.velocity(g.v_of(i));
  return rho;
}

/// Occupation measure of a closed curve given by samples spaced `ds` apart
/// (coordinates may be lifted or wrapped; differences are taken mod 1).
/// Velocities come from centered differences and are split over the two
/// neighbouring velocity nodes per axis, positions over neighbouring x cells.
inline DiscreteMeasure curve_measure(const std::vector<Vec>& samples, double ds, const PhaseGrid& g) {
  g.validate();
  require(!samples.empty(), "curve_measure: no samples");
  require(ds > 0 && std::isfinite(ds), "curve_measure: sample spacing must be positive");
  const auto count = samples.size();
  for (const Vec& s : samples) require_dims(s.size() == g.dim, "curve_measure: sample dimension != grid dimension");
  Vec mu = Vec::Zero(g.size());
  const double share = 1.0 / static_cast<double>(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vec& prev = samples[(k + count - 1) % count];
    const Vec& next = samples[(k + 1) % count];
    Vec v(g.dim);
    for (int a = 0; a < g.dim; ++a) {
      double d = next[a] - prev[a];
      d -= std::round(d);
      v[a] = d / (2 * ds);
    }
    if (v.norm() > g.vmax * (1 + 1e-12))
      throw TruncationError("curve_measure: velocity " + std::to_string(v.norm()) + " exceeds the truncation bound " +
                                std::to_string(g.vmax),
                            g.vmax);
    int slice = 0;
    if (g.time_periodic) {
      const double t = static_cast<double>(k) * ds;
      slice = static_cast<int>(std::lround((t - std::floor(t)) * g.nt)) % g.nt;
    }
    for (int corner = 0; corner < (1 << (2 * g.dim)); ++corner) {
      double w = share;
      std::vector<int> xi(static_cast<std::size_t>(g.dim)), vi(static_cast<std::size_t>(g.dim));
      for (int a = 0; a < g.dim && w > 0; ++a) {
        const double xs = samples[k][a] - std::floor(samples[k][a]);
        const double px = xs * g.nx;
        const int xl = static_cast<int>(std::floor(px)) % g.nx;
        const double xf = px - std::floor(px);
        const bool xu = (corner >> a) & 1;
        w *= xu ? xf : 1.0 - xf;
        xi[static_cast<std::size_t>(a)] = xu ? (xl + 1) % g.nx : xl;
        const double pv = (std::clamp(v[a], -g.vmax, g.vmax) + g.vmax) / g.dv();
        int vl = static_cast<int>(std::floor(pv));
        double vf = pv - vl;
        if (vl >= g.nv) {
          vl = g.nv - 1;
          vf = 1.0;
        }
        const bool vu = (corner >> (g.dim + a)) & 1;
        w *= vu ? vf : 1.0 - vf;
        vi[static_cast<std::size_t>(a)] = vu ? vl + 1 : vl;
      }
      if (w > 0) mu[g.index(slice, g.flatten(xi, g.nx), g.flatten(vi, g.nv + 1))] += w;
    }
  }
  return DiscreteMeasure::normalized(mu);
}

struct GraphPropertyReport {
  int max_multiplicity = 0;
  std::vector<int> per_vertex;
  bool holds() const { return max_multiplicity <= 1; }
};

/// Number of distinct velocity cells with mass above tol over one (slice, x) cell.
inline int velocity_multiplicity(const PhaseGrid& g, const Vec& mu, double tol = 1e-9) {
  require_dims(mu.size() == g.size(), "graph_property_check: measure length != grid size");
  int worst = 0;
  for (Eigen::Index b = 0; b < g.slices() * g.x_cells(); ++b) {
    int count = 0;
    for (Eigen::Index vc = 0; vc < g.v_cells(); ++vc)
      if (mu[b * g.v_cells() + vc] > tol) ++count;
    worst = std::max(worst, count);
  }
  return worst;
}

inline GraphPropertyReport graph_property_check(const lp::OptimalFace& face, const PhaseGrid& g, double tol = 1e-9) {
  GraphPropertyReport r;
  for (const Vec& v : face.vertices) {
    r.per_vertex.push_back(velocity_multiplicity(g, v, tol));
    r.max_multiplicity = std::max(r.max_multiplicity, r.per_vertex.back());
  }
  return r;
}

/// True iff every cell carrying mass above tol has |v| <= bound.
inline bool support_bound_check(const DiscreteMeasure& mu, const PhaseGrid& g, double bound, double tol = 1e-12) {
  require_dims(mu.size() == g.size(), "support_bound_check: measure length != grid size");
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu[i] > tol && g.velocity(g.v_of(i)).norm() > bound + 1e-12) return false;
  return true;
}

/// Largest |v| carrying mass above tol.
inline double support_radius(const PhaseGrid& g, const Vec& mu, double tol = 1e-12) {
  double r = 0.0;
  for (Eigen::Index i = 0; i < mu.size(); ++i)
    if (mu[i] > tol) r = std::max(r, g.velocity(g.v_of(i)).norm());
  return r;
}

struct ResolutionRow {
  PhaseGrid grid;
  double value = 0.0;
  int dimension = 0;
};

inline std::vector<ResolutionRow> resolution_study(const LagrangianSpec& L, const Vec& c,
                                                   const std::vector<PhaseGrid>& grids,
                                                   const lp::FaceOptions& fo = {}) {
  require(!grids.empty(), "resolution_study: no grids");
  std::vector<ResolutionRow> rows;
  for (const PhaseGrid& g : grids) {
    const lp::OptimalFace f = minimizing_measures(L, c, g, fo);
    rows.push_back({g, f.value, f.dimension});
  }
  return rows;
}

}  // namespace amlab::tonelli
