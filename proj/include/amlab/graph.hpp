// Finite directed graphs with edge costs and integer homology labels: the
// invariant-measure polytope, minimum mean cycles, rotation vectors and the
// sampled effective Hamiltonian.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

#include "amlab/error.hpp"
#include "amlab/linalg.hpp"
#include "amlab/lp.hpp"
#include "amlab/measure.hpp"
#include "amlab/rng.hpp"

namespace amlab::graph {

struct Edge {
  int tail = 0;
  int head = 0;
  double cost = 0.0;
  std::vector<int> h;  // homology label
};

struct CostGraph {
  int node_count = 0;
  std::vector<Edge> edges;

  int edge_count() const { return static_cast<int>(edges.size()); }
  int homology_rank() const { return edges.empty() ? 0 : static_cast<int>(edges.front().h.size()); }

  void validate() const {
    require(node_count > 0, "CostGraph: node_count must be positive");
    require(!edges.empty(), "CostGraph: no edges");
    const std::size_t b = edges.front().h.size();
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& e = edges[i];
      require(e.tail >= 0 && e.tail < node_count && e.head >= 0 && e.head < node_count,
              "CostGraph: edge " + std::to_string(i) + " has an endpoint outside [0, " +
                  std::to_string(node_count) + ")");
      require(std::isfinite(e.cost), "CostGraph: edge " + std::to_string(i) + " has a non-finite cost");
      require_dims(e.h.size() == b, "CostGraph: edge " + std::to_string(i) + " homology label has length " +
                                        std::to_string(e.h.size()) + ", expected " + std::to_string(b));
    }
  }

  Vec label(int e) const {
    const auto& h = edges[static_cast<std::size_t>(e)].h;
    Vec v(static_cast<Eigen::Index>(h.size()));
    for (std::size_t i = 0; i < h.size(); ++i) v[static_cast<Eigen::Index>(i)] = h[i];
    return v;
  }

  Vec costs() const {
    Vec v(edge_count());
    for (int e = 0; e < edge_count(); ++e) v[e] = edges[static_cast<std::size_t>(e)].cost;
    return v;
  }

  /// Edge labels as a b x |E| matrix.
  Mat label_matrix() const {
    Mat m(homology_rank(), edge_count());
    for (int e = 0; e < edge_count(); ++e) m.col(e) = label(e);
    return m;
  }

  /// Phase points are edges, lying over their tail node.
  StateSpace state_space() const {
    StateSpace s;
    for (int v = 0; v < node_count; ++v) s.base_labels.push_back(std::to_string(v));
    for (int e = 0; e < edge_count(); ++e) {
      const Edge& ed = edges[static_cast<std::size_t>(e)];
      s.phase.push_back({std::to_string(ed.tail) + "->" + std::to_string(ed.head), ed.tail, {}});
    }
    return s;
  }
};

/// A simple cycle as a list of edge indices, each weighted 1/length.
struct CycleMeasure {
  std::vector<int> edges;

  int length() const { return static_cast<int>(edges.size()); }
  double weight() const { return 1.0 / static_cast<double>(edges.size()); }

  Vec weights(int edge_count) const {
    Vec w = Vec::Zero(edge_count);
    for (int e : edges) w[e] += weight();
    return w;
  }

  double mean(const Vec& cost) const {
    double s = 0.0;
    for (int e : edges) s += cost[e];
    return s / static_cast<double>(edges.size());
  }

  bool is_valid(const CostGraph& g) const {
    if (edges.empty()) return false;
    std::vector<int> seen(static_cast<std::size_t>(g.node_count), 0);
    for (std::size_t i = 0; i < edges.size(); ++i) {
      const Edge& cur = g.edges[static_cast<std::size_t>(edges[i])];
      const Edge& nxt = g.edges[static_cast<std::size_t>(edges[(i + 1) % edges.size()])];
      if (cur.head != nxt.tail) return false;
      if (seen[static_cast<std::size_t>(cur.tail)]++) return false;
    }
    return true;
  }
};

/// Costs cost(e) - c . h(e).
inline Vec tilted_costs(const CostGraph& g, const Vec& c) {
  require_dims(c.size() == g.homology_rank(), "tilted_costs: cohomology vector has length " +
                                                  std::to_string(c.size()) + ", expected " +
                                                  std::to_string(g.homology_rank()));
  Vec w = g.costs();
  if (c.size() > 0) w -= g.label_matrix().transpose() * c;
  return w;
}

inline CostGraph tilted(const CostGraph& g, const Vec& c) {
  CostGraph out = g;
  const Vec w = tilted_costs(g, c);
  for (int e = 0; e < g.edge_count(); ++e) out.edges[static_cast<std::size_t>(e)].cost = w[e];
  return out;
}

struct MeanCycle {
  double mean = 0.0;
  CycleMeasure cycle;
};

namespace detail {

// Splits a closed or open walk (edge list) into the simple cycles it contains.
inline std::vector<CycleMeasure> cycles_in_walk(const CostGraph& g, const std::vector<int>& walk) {
  std::vector<CycleMeasure> out;
  std::vector<int> stack;       // edges on the current path
  std::vector<int> pos(static_cast<std::size_t>(g.node_count), -1);  // node -> index in path
  if (walk.empty()) return out;
  pos[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(walk.front())].tail)] = 0;
  std::vector<int> nodes{g.edges[static_cast<std::size_t>(walk.front())].tail};
  for (int e : walk) {
    const int h = g.edges[static_cast<std::size_t>(e)].head;
    stack.push_back(e);
    if (pos[static_cast<std::size_t>(h)] >= 0) {
      const int start = pos[static_cast<std::size_t>(h)];
      CycleMeasure c;
      c.edges.assign(stack.begin() + start, stack.end());
      out.push_back(c);
      for (std::size_t i = static_cast<std::size_t>(start) + 1; i < nodes.size(); ++i)
        pos[static_cast<std::size_t>(nodes[i])] = -1;
      nodes.resize(static_cast<std::size_t>(start) + 1);
      stack.resize(static_cast<std::size_t>(start));
    } else {
      pos[static_cast<std::size_t>(h)] = static_cast<int>(nodes.size());
      nodes.push_back(h);
    }
  }
  return out;
}

}  // namespace detail

/// Karp's recurrence from a virtual source joined to every node at zero cost.
/// Throws RangeError when the graph has no cycle.
inline MeanCycle karp_min_mean_cycle(const CostGraph& g, const Vec& cost) {
  g.validate();
  require_dims(cost.size() == g.edge_count(), "karp_min_mean_cycle: cost vector length mismatch");
  const int n = g.node_count;
  const double inf = std::numeric_limits<double>::infinity();
  Mat d = Mat::Constant(n + 1, n, inf);
  std::vector<std::vector<int>> parent(static_cast<std::size_t>(n + 1), std::vector<int>(static_cast<std::size_t>(n), -1));
  d.row(0).setZero();
  for (int k = 1; k <= n; ++k)
    for (int e = 0; e < g.edge_count(); ++e) {
      const Edge& ed = g.edges[static_cast<std::size_t>(e)];
      const double cand = d(k - 1, ed.tail) + cost[e];
      if (cand < d(k, ed.head)) {
        d(k, ed.head) = cand;
        parent[static_cast<std::size_t>(k)][static_cast<std::size_t>(ed.head)] = e;
      }
    }
  double best = inf;
  int best_v = -1;
  for (int v = 0; v < n; ++v) {
    if (!std::isfinite(d(n, v))) continue;
    double worst = -inf;
    for (int k = 0; k < n; ++k)
      if (std::isfinite(d(k, v))) worst = std::max(worst, (d(n, v) - d(k, v)) / (n - k));
    if (worst < best) {
      best = worst;
      best_v = v;
    }
  }
  if (best_v < 0) throw RangeError("karp_min_mean_cycle: graph has no cycle");

  std::vector<int> walk(static_cast<std::size_t>(n));
  int v = best_v;
  for (int k = n; k >= 1; --k) {
    const int e = parent[static_cast<std::size_t>(k)][static_cast<std::size_t>(v)];
    walk[static_cast<std::size_t>(k - 1)] = e;
    v = g.edges[static_cast<std::size_t>(e)].tail;
  }
  MeanCycle out;
  out.mean = best;
  double cycle_mean = inf;
  for (auto& c : detail::cycles_in_walk(g, walk)) {
    const double m = c.mean(cost);
    if (m < cycle_mean) {
      cycle_mean = m;
      out.cycle = std::move(c);
    }
  }
  return out;
}

inline MeanCycle karp_min_mean_cycle(const CostGraph& g) { return karp_min_mean_cycle(g, g.costs()); }

/// Flow conservation at every node plus unit total mass, over edge masses >= 0.
inline lp::LinearProgram invariant_polytope(const CostGraph& g) {
  g.validate();
  const int m = g.edge_count();
  lp::LinearProgram p;
  p.matrix = Mat::Zero(g.node_count + 1, m);
  p.rhs = Vec::Zero(g.node_count + 1);
  for (int e = 0; e < m; ++e) {
    const Edge& ed = g.edges[static_cast<std::size_t>(e)];
    p.matrix(ed.tail, e) += 1.0;
    p.matrix(ed.head, e) -= 1.0;
    p.matrix(g.node_count, e) = 1.0;
  }
  p.rhs[g.node_count] = 1.0;
  p.objective = Vec::Zero(m);
  return p;
}

/// Face of invariant measures minimizing the tilted action.
inline lp::OptimalFace minimizing_measures_lp(const CostGraph& g, const Vec& c, const lp::FaceOptions& fo = {}) {
  lp::LinearProgram p = invariant_polytope(g);
  p.objective = tilted_costs(g, c);
  return lp::optimal_face(p, fo);
}

inline lp::OptimalFace minimizing_measures_lp(const CostGraph& g, const lp::FaceOptions& fo = {}) {
  return minimizing_measures_lp(g, Vec::Zero(g.homology_rank()), fo);
}

inline Vec rotation_vector(const DiscreteMeasure& mu, const CostGraph& g) {
  require_dims(mu.size() == g.edge_count(), "rotation_vector: measure has " + std::to_string(mu.size()) +
                                                " weights for " + std::to_string(g.edge_count()) + " edges");
  if (g.homology_rank() == 0) return Vec::Zero(0);
  return g.label_matrix() * mu.weights();
}

struct CycleComponent {
  double mass = 0.0;  // coefficient of the cycle measure
  CycleMeasure cycle;
};

/// Writes an invariant edge measure as a combination of cycle measures by
/// repeatedly removing the lightest edge around a cycle of the support.
inline std::vector<CycleComponent> decompose_cycles(const CostGraph& g, const Vec& edge_mass, double tol = 1e-12) {
  require_dims(edge_mass.size() == g.edge_count(), "decompose_cycles: edge mass length mismatch");
  Vec w = edge_mass;
  std::vector<CycleComponent> out;
  for (int guard = 0; guard <= g.edge_count(); ++guard) {
    int start = -1;
    for (int e = 0; e < g.edge_count(); ++e)
      if (w[e] > tol && (start < 0 || w[e] > w[start])) start = e;
    if (start < 0) break;
    // Follow the heaviest outgoing edge until a node repeats.
    std::vector<int> walk{start};
    std::vector<int> seen(static_cast<std::size_t>(g.node_count), 0);
    seen[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(start)].tail)] = 1;
    std::vector<CycleMeasure> found;
    for (int step = 0; step <= g.node_count && found.empty(); ++step) {
      const int h = g.edges[static_cast<std::size_t>(walk.back())].head;
      if (seen[static_cast<std::size_t>(h)]) {
        found = detail::cycles_in_walk(g, walk);
        break;
      }
      seen[static_cast<std::size_t>(h)] = 1;
      int next = -1;
      for (int e = 0; e < g.edge_count(); ++e)
        if (g.edges[static_cast<std::size_t>(e)].tail == h && w[e] > tol && (next < 0 || w[e] > w[next])) next = e;
      if (next < 0) break;
      walk.push_back(next);
    }
    if (found.empty()) break;  // residual is not a circulation within tol
    CycleMeasure& c = found.back();
    double peel = std::numeric_limits<double>::infinity();
    for (int e : c.edges) peel = std::min(peel, w[e]);
    for (int e : c.edges) w[e] -= peel;
    out.push_back({peel * c.length(), c});
  }
  return out;
}

/// All simple cycles, each listed once starting from its smallest node.
/// Stops after `limit` cycles.
inline std::vector<CycleMeasure> simple_cycles(const CostGraph& g, std::size_t limit = 100000) {
  g.validate();
  std::vector<CycleMeasure> out;
  std::vector<std::vector<int>> out_edges(static_cast<std::size_t>(g.node_count));
  for (int e = 0; e < g.edge_count(); ++e)
    out_edges[static_cast<std::size_t>(g.edges[static_cast<std::size_t>(e)].tail)].push_back(e);
  std::vector<int> path;
  std::vector<char> on_path(static_cast<std::size_t>(g.node_count), 0);
  auto dfs = [&](auto&& self, int root, int v) -> void {
    for (int e : out_edges[static_cast<std::size_t>(v)]) {
      if (out.size() >= limit) return;
      const int h = g.edges[static_cast<std::size_t>(e)].head;
      if (h < root) continue;
      if (h == root) {
        path.push_back(e);
        out.push_back({path});
        path.pop_back();
      } else if (!on_path[static_cast<std::size_t>(h)]) {
        on_path[static_cast<std::size_t>(h)] = 1;
        path.push_back(e);
        self(self, root, h);
        path.pop_back();
        on_path[static_cast<std::size_t>(h)] = 0;
      }
    }
  };
  for (int r = 0; r < g.node_count && out.size() < limit; ++r) {
    on_path[static_cast<std::size_t>(r)] = 1;
    dfs(dfs, r, r);
    on_path[static_cast<std::size_t>(r)] = 0;
  }
  return out;
}

struct AlphaSamples {
  std::vector<Vec> c;
  std::vector<double> alpha;
  std::vector<Vec> rotation;  // rotation vector of one minimizing measure at each c
};

/// alpha(c) = -min over invariant measures of the tilted action.
inline AlphaSamples alpha_function(const CostGraph& g, const std::vector<Vec>& c_grid,
                                   const lp::SolverOptions& opt = {}) {
  require(!c_grid.empty(), "alpha_function: empty cohomology grid");
  AlphaSamples out;
  lp::LinearProgram p = invariant_polytope(g);
  for (const Vec& c : c_grid) {
    p.objective = tilted_costs(g, c);
    const lp::Solution s = lp::solve(p, opt);
    if (!s.optimal()) throw LpError(std::string("alpha_function: LP status ") + lp::to_string(s.status));
    out.c.push_back(c);
    out.alpha.push_back(-s.value);
    out.rotation.push_back(g.homology_rank() ? Vec(g.label_matrix() * s.point) : Vec::Zero(0));
  }
  return out;
}

struct RandomGraphOptions {
  int nodes = 10;
  int edges = 30;  // includes the backbone cycle
  int homology_rank = 1;
  double cost_lo = -1.0;
  double cost_hi = 1.0;
};

/// Seeded random graph: a Hamiltonian cycle through a random node order plus
/// uniformly drawn extra edges; labels uniform in {-1, 0, 1}.
inline CostGraph random_graph(std::uint64_t seed, const RandomGraphOptions& o = {}) {
  require(o.nodes > 0 && o.edges >= o.nodes, "random_graph: need nodes > 0 and edges >= nodes");
  require(o.homology_rank >= 0, "random_graph: homology_rank must be nonnegative");
  Rng rng(seed);
  CostGraph g;
  g.node_count = o.nodes;
  std::vector<int> order(static_cast<std::size_t>(o.nodes));
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  std::uniform_int_distribution<int> node(0, o.nodes - 1), lab(-1, 1);
  auto make = [&](int t, int h) {
    Edge e{t, h, uniform(rng, o.cost_lo, o.cost_hi), {}};
    for (int i = 0; i < o.homology_rank; ++i) e.h.push_back(lab(rng));
    g.edges.push_back(std::move(e));
  };
  for (int i = 0; i < o.nodes; ++i)
    make(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>((i + 1) % o.nodes)]);
  while (g.edge_count() < o.edges) {
    const int t = node(rng), h = node(rng);
    make(t, h);
  }
  return g;
}

}  // namespace amlab::graph
