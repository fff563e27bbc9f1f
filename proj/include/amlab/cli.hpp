// Subcommands of the amlab tool. Each command reads a JSON config, writes its
// artifacts into the output directory and returns the process exit code:
// 0 on success, 2 when a cross-check or acceptance threshold fails. Config and
// I/O problems are thrown as ConfigError and mapped to 1 by the caller.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "amlab/convex.hpp"
#include "amlab/error.hpp"
#include "amlab/genericity.hpp"
#include "amlab/graph.hpp"
#include "amlab/io.hpp"
#include "amlab/lp.hpp"
#include "amlab/tonelli.hpp"

namespace amlab::cli {

using io::json;

inline constexpr const char* kOutDirEnv = "AMLAB_OUT_DIR";

struct RunOptions {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::string out;  // empty selects $AMLAB_OUT_DIR, then "."
  std::optional<double> tol_face;
  std::optional<int> budget;
  std::ostream* log = &std::cerr;
};

namespace detail {

struct Context {
  json cfg;
  std::filesystem::path dir;   // directory of the config, for relative paths
  std::filesystem::path out;
  std::string stem;
  std::uint64_t seed = 0;
  lp::FaceOptions face;
};

inline Context load(const RunOptions& o) {
  Context c;
  if (o.config.empty()) throw ConfigError("no config file given");
  const std::filesystem::path p(o.config);
  if (!std::filesystem::exists(p)) throw ConfigError("config file '" + o.config + "' does not exist");
  const std::string text = io::read_file(o.config);
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') {
    c.cfg = io::parse_json(text, o.config);
  } else {
    // A bare edge-list file stands for a graph model with default settings.
    c.cfg = json::object();
    c.cfg["model"] = {{"type", "graph"}, {"graph", io::graph_to_json(io::graph_from_edge_list(text, o.config))}};
  }
  if (!c.cfg.is_object()) throw ConfigError(o.config + ": top level must be an object");
  // A bare graph JSON file.
  if (c.cfg.contains("nodes") && c.cfg.contains("edges") && !c.cfg.contains("model")) {
    json g = c.cfg;
    c.cfg = json::object();
    c.cfg["model"] = {{"type", "graph"}, {"graph", g}};
  }
  c.dir = p.parent_path();
  c.stem = p.stem().string();
  std::string out = o.out;
  if (out.empty()) {
    const char* env = std::getenv(kOutDirEnv);
    out = env && *env ? env : ".";
  }
  c.out = out;
  std::error_code ec;
  std::filesystem::create_directories(c.out, ec);
  if (!std::filesystem::is_directory(c.out)) throw ConfigError("output directory '" + out + "' cannot be created");

  const long long seed = io::get_or(c.cfg, "seed", 0LL, "config");
  if (seed < 0) throw ConfigError("config.seed: must be nonnegative");
  c.seed = o.seed ? *o.seed : static_cast<std::uint64_t>(seed);
  const json face = c.cfg.contains("face") ? c.cfg["face"] : json::object();
  c.face.face_tol = o.tol_face ? *o.tol_face : io::get_or(face, "tol", -1.0, "config.face");
  c.face.budget = o.budget ? *o.budget : static_cast<int>(io::get_or(face, "budget", 64LL, "config.face"));
  if (o.tol_face && !(*o.tol_face > 0)) throw ConfigError("--tol-face must be positive");
  if (face.contains("tol") && !(c.face.face_tol > 0)) throw ConfigError("config.face.tol: must be positive");
  if (c.face.budget < 0) throw ConfigError("budget must be nonnegative");
  c.face.seed = c.seed;
  return c;
}

inline void write(const Context& c, const std::string& name, const std::string& text) {
  io::write_file((c.out / (c.stem + "." + name)).string(), text);
}

inline const json& model(const Context& c) { return io::field(c.cfg, "model", "config"); }

inline std::string model_type(const Context& c) {
  return io::as_string(io::field(model(c), "type", "config.model"), "config.model.type");
}

inline graph::CostGraph load_graph_model(const Context& c) {
  const json& m = model(c);
  if (model_type(c) != "graph") throw ConfigError("config.model.type: expected 'graph'");
  if (m.contains("graph")) return io::graph_from_json(m["graph"], "config.model.graph");
  if (m.contains("graph_file")) {
    const std::filesystem::path f = c.dir / io::as_string(m["graph_file"], "config.model.graph_file");
    return io::load_graph(f.string());
  }
  throw ConfigError("config.model: needs 'graph' or 'graph_file'");
}

inline Vec cohomology(const Context& c, Eigen::Index len) {
  if (!c.cfg.contains("c")) return Vec::Zero(len);
  const Vec v = io::as_vec(c.cfg["c"], "config.c");
  if (v.size() != len)
    throw ConfigError("config.c: expected " + std::to_string(len) + " entries, got " + std::to_string(v.size()));
  return v;
}

struct TonelliModel {
  tonelli::PhaseGrid grid;
  tonelli::LagrangianSpec lagrangian;
};

inline TonelliModel load_tonelli_model(const Context& c) {
  const json& m = model(c);
  if (model_type(c) != "tonelli") throw ConfigError("config.model.type: expected 'tonelli'");
  TonelliModel t;
  t.grid = io::grid_from_json(io::field(m, "grid", "config.model"), "config.model.grid");
  t.lagrangian = io::lagrangian_from_json(io::field(m, "lagrangian", "config.model"), t.grid.dim,
                                          "config.model.lagrangian");
  if (t.lagrangian.time_periodic && !t.grid.time_periodic)
    throw ConfigError("config.model.grid: Lagrangian '" + t.lagrangian.name + "' needs time_periodic = true");
  return t;
}

inline json face_json(const lp::OptimalFace& f) {
  json j;
  j["value"] = f.value;
  j["face_dim"] = f.dimension;
  j["dimension_bound"] = f.dimension_bound;
  j["face_tol"] = f.face_tol;
  j["probes"] = f.probes;
  return j;
}

}  // namespace detail

/// Minimizing measures of a cost graph, cross-checked against Karp's algorithm.
inline int cmd_solve_graph(const RunOptions& o) {
  const detail::Context c = detail::load(o);
  const graph::CostGraph g = detail::load_graph_model(c);
  const Vec coh = detail::cohomology(c, g.homology_rank());
  const json checks = c.cfg.contains("checks") ? c.cfg["checks"] : json::object();
  const double karp_tol = io::get_or(checks, "karp_tol", 1e-8, "config.checks");
  const Vec w = graph::tilted_costs(g, coh);
  const lp::OptimalFace f = graph::minimizing_measures_lp(g, coh, c.face);
  const graph::MeanCycle k = graph::karp_min_mean_cycle(g, w);

  json out = detail::face_json(f);
  out["karp_value"] = k.mean;
  out["karp_delta"] = std::abs(f.value - k.mean);
  out["karp_cycle"] = k.cycle.edges;
  out["seed"] = c.seed;
  out["vertices"] = json::array();
  for (const Vec& v : f.vertices) {
    json vj;
    vj["measure"] = io::to_json(v);
    vj["rotation"] = io::to_json(g.homology_rank() ? Vec(g.label_matrix() * v) : Vec::Zero(0));
    vj["cycles"] = json::array();
    for (const auto& part : graph::decompose_cycles(g, v, 1e-10))
      vj["cycles"].push_back({{"mass", part.mass}, {"edges", part.cycle.edges}, {"mean", part.cycle.mean(w)}});
    out["vertices"].push_back(vj);
  }
  detail::write(c, "solve_graph.json", out.dump(2) + "\n");
  if (std::abs(f.value - k.mean) > karp_tol) {
    *o.log << "solve-graph: LP value " << io::format_double(f.value) << " differs from Karp value "
           << io::format_double(k.mean) << " by more than " << karp_tol << "\n";
    return 2;
  }
  return 0;
}

/// Minimizing measures of a discretized Lagrangian with the graph and support checks.
inline int cmd_solve_tonelli(const RunOptions& o) {
  const detail::Context c = detail::load(o);
  const detail::TonelliModel t = detail::load_tonelli_model(c);
  const Vec coh = detail::cohomology(c, t.grid.dim);
  const json checks = c.cfg.contains("checks") ? c.cfg["checks"] : json::object();
  const double support_n = io::get_or(checks, "support_n", t.grid.vmax / 2, "config.checks");
  const lp::OptimalFace f = tonelli::minimizing_measures(t.lagrangian, coh, t.grid, c.face);
  for (const Vec& v : f.vertices)
    if (tonelli::support_radius(t.grid, v, 1e-9) >= t.grid.vmax - 1e-12)
      throw TruncationError("solve-tonelli: a minimizing measure reaches the velocity bound n = " +
                                io::format_double(t.grid.vmax) + "; increase config.model.grid.n",
                            t.grid.vmax);
  const auto gp = tonelli::graph_property_check(f, t.grid);
  json out = detail::face_json(f);
  out["lagrangian"] = t.lagrangian.name;
  out["grid"] = io::grid_to_json(t.grid);
  out["c"] = io::to_json(coh);
  out["seed"] = c.seed;
  out["fiberwise_convex"] = tonelli::is_fiberwise_convex(t.lagrangian, t.grid);
  out["graph_property"] = {{"max_multiplicity", gp.max_multiplicity}, {"per_vertex", gp.per_vertex}, {"holds", gp.holds()}};
  bool support_ok = true;
  for (const Vec& v : f.vertices)
    support_ok = support_ok && tonelli::support_bound_check(DiscreteMeasure::normalized(v), t.grid, support_n, 1e-9);
  out["support_bound"] = {{"n", support_n}, {"holds", support_ok}};
  out["rotation"] = json::array();
  for (std::size_t i = 0; i < f.vertices.size(); ++i) {
    out["rotation"].push_back(io::to_json(tonelli::rotation_vector(t.grid, f.vertices[i])));
    detail::write(c, "measure_" + std::to_string(i) + ".csv", io::measure_csv(t.grid, f.vertices[i], 1e-12));
  }
  detail::write(c, "solve_tonelli.json", out.dump(2) + "\n");
  return 0;
}

namespace detail {

struct ExperimentModel {
  genericity::MeasurePolytope polytope;
  Vec base_cost;
  std::function<Vec(const Vec&)> cohomology_direction;  // cost direction of a closed-form tilt
};

inline ExperimentModel load_experiment_model(const Context& c) {
  ExperimentModel e;
  const std::string type = model_type(c);
  if (type == "graph") {
    const graph::CostGraph g = load_graph_model(c);
    e.polytope = genericity::MeasurePolytope::from_graph(g);
    e.base_cost = graph::tilted_costs(g, cohomology(c, g.homology_rank()));
    e.cohomology_direction = [g](const Vec& coh) {
      require_dims(coh.size() == g.homology_rank(), "cohomology direction length != homology rank");
      return Vec(-(g.label_matrix().transpose() * coh));
    };
  } else if (type == "tonelli") {
    const TonelliModel t = load_tonelli_model(c);
    e.polytope = genericity::MeasurePolytope::from_grid(t.grid);
    e.base_cost = tonelli::action_costs(t.lagrangian, t.grid, cohomology(c, t.grid.dim));
    e.cohomology_direction = [grid = t.grid](const Vec& coh) {
      require_dims(coh.size() == grid.dim, "cohomology direction length != grid dimension");
      Vec d(grid.size());
      for (Eigen::Index i = 0; i < grid.size(); ++i) d[i] = -coh.dot(grid.velocity(grid.v_of(i)));
      return d;
    };
  } else if (type == "simplex") {
    const json& m = model(c);
    const Vec cost = io::as_vec(io::field(m, "cost", "config.model"), "config.model.cost");
    StateSpace s;
    if (m.contains("base_of")) {
      const json& b = m["base_of"];
      if (!b.is_array() || static_cast<Eigen::Index>(b.size()) != cost.size())
        throw ConfigError("config.model.base_of: expected one base index per cost entry");
      int nb = 0;
      for (std::size_t i = 0; i < b.size(); ++i)
        nb = std::max(nb, static_cast<int>(io::as_int(b[i], "config.model.base_of[" + std::to_string(i) + "]")) + 1);
      for (int i = 0; i < nb; ++i) s.base_labels.push_back(std::to_string(i));
      for (std::size_t i = 0; i < b.size(); ++i) s.phase.push_back({std::to_string(i), b[i].get<int>(), {}});
    } else {
      s = StateSpace::identity(static_cast<int>(cost.size()));
    }
    try {
      s.validate();
    } catch (const Error& err) {
      throw ConfigError(std::string("config.model.base_of: ") + err.what());
    }
    e.polytope = genericity::MeasurePolytope::simplex(s);
    e.base_cost = cost;
    e.cohomology_direction = [](const Vec&) -> Vec {
      throw ConfigError("config.experiment.family: cohomology directions need a graph or tonelli model");
    };
  } else {
    throw ConfigError("config.model.type: unknown model type '" + type + "'");
  }
  return e;
}

inline genericity::AffineFamily load_family(const json& ex, const ExperimentModel& m) {
  genericity::AffineFamily fam;
  fam.base = m.base_cost;
  const std::string path = "config.experiment.family";
  const json fj = ex.contains("family") ? ex["family"] : json::object();
  if (fj.contains("directions")) {
    const json& dirs = fj["directions"];
    if (!dirs.is_array()) throw ConfigError(path + ".directions: expected an array");
    for (std::size_t i = 0; i < dirs.size(); ++i) {
      const std::string p = path + ".directions[" + std::to_string(i) + "]";
      const json& d = dirs[i];
      Vec dir;
      if (d.contains("vector")) {
        dir = io::as_vec(d["vector"], p + ".vector");
      } else if (d.contains("cohomology")) {
        dir = m.cohomology_direction(io::as_vec(d["cohomology"], p + ".cohomology"));
      } else if (d.contains("potential")) {
        const Vec u = io::as_vec(d["potential"], p + ".potential");
        if (u.size() != m.polytope.space.base_size())
          throw ConfigError(p + ".potential: expected " + std::to_string(m.polytope.space.base_size()) + " entries");
        dir = -pull_back(m.polytope.space, Potential{u});
      } else {
        throw ConfigError(p + ": needs 'vector', 'cohomology' or 'potential'");
      }
      if (dir.size() != fam.base.size())
        throw ConfigError(p + ": direction has " + std::to_string(dir.size()) + " entries, expected " +
                          std::to_string(fam.base.size()));
      fam.directions.push_back(dir);
    }
  }
  const int d = fam.dim();
  fam.lo = fj.contains("lo") ? io::as_vec(fj["lo"], path + ".lo") : Vec::Constant(d, -1.0);
  fam.hi = fj.contains("hi") ? io::as_vec(fj["hi"], path + ".hi") : Vec::Constant(d, 1.0);
  try {
    fam.validate();
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return fam;
}

inline SeparatingFamily load_separating(const json& ex, const ExperimentModel& m, std::uint64_t seed) {
  const std::string path = "config.experiment.separating";
  const json sj = ex.contains("separating") ? ex["separating"] : json{{"type", "indicators"}};
  const Eigen::Index nb = m.polytope.space.base_size();
  if (sj.contains("functions")) {
    SeparatingFamily fam;
    const json& fs = sj["functions"];
    if (!fs.is_array() || fs.empty()) throw ConfigError(path + ".functions: expected a nonempty array");
    for (std::size_t i = 0; i < fs.size(); ++i) {
      const Vec v = io::as_vec(fs[i], path + ".functions[" + std::to_string(i) + "]");
      if (v.size() != nb) throw ConfigError(path + ".functions[" + std::to_string(i) + "]: expected " + std::to_string(nb) + " entries");
      fam.functions.push_back({v});
    }
    return fam;
  }
  const std::string type = io::as_string(io::field(sj, "type", path), path + ".type");
  if (type == "indicators") {
    // Indicators of all base points but the last: injective on probability measures.
    SeparatingFamily fam;
    if (nb == 1) fam.functions.push_back(Potential::indicator(1, 0));
    for (Eigen::Index i = 0; i + 1 < nb; ++i) fam.functions.push_back(Potential::indicator(nb, i));
    fam.verified_epsilon = 0.0;
    return fam;
  }
  if (type == "greedy") {
    const double eps = io::as_double(io::field(sj, "epsilon", path), path + ".epsilon");
    const int samples = static_cast<int>(io::get_or(sj, "samples", 200LL, path));
    const int cap = static_cast<int>(io::get_or(sj, "max_functions", -1LL, path));
    if (!(eps > 0)) throw ConfigError(path + ".epsilon: must be positive");
    return build_separating_family(m.polytope.space, eps, samples, seed, cap);
  }
  throw ConfigError(path + ".type: unknown type '" + type + "'");
}

}  // namespace detail

/// Monte Carlo tilts of an affine cost family; exit 2 below the threshold.
inline int cmd_tilt_experiment(const RunOptions& o) {
  const detail::Context c = detail::load(o);
  const json& ex = io::field(c.cfg, "experiment", "config");
  const std::string path = "config.experiment";
  const detail::ExperimentModel m = detail::load_experiment_model(c);
  genericity::TiltExperimentConfig cfg;
  cfg.polytope = m.polytope;
  cfg.family = detail::load_family(ex, m);
  cfg.separating = detail::load_separating(ex, m, c.seed);
  cfg.w = Potential{Vec::Zero(m.polytope.space.base_size())};
  if (ex.contains("w")) {
    cfg.w.values = io::as_vec(ex["w"], path + ".w");
    if (cfg.w.values.size() != m.polytope.space.base_size()) throw ConfigError(path + ".w: wrong length");
  }
  const long long trials = io::as_int(io::field(ex, "trials", path), path + ".trials");
  if (trials < 1) throw ConfigError(path + ".trials: must be at least 1");
  cfg.trials = static_cast<int>(trials);
  cfg.radius = io::get_or(ex, "radius", 1e-2, path);
  if (!(cfg.radius > 0)) throw ConfigError(path + ".radius: must be positive");
  cfg.l_samples = static_cast<int>(io::get_or(ex, "l_samples", 9LL, path));
  if (cfg.l_samples < 1) throw ConfigError(path + ".l_samples: must be at least 1");
  cfg.threads = static_cast<int>(io::get_or(ex, "threads", 1LL, path));
  if (cfg.threads < 1) throw ConfigError(path + ".threads: must be at least 1");
  cfg.check_inclusion = io::get_or(ex, "check_inclusion", false, path);
  const double threshold = io::get_or(ex, "threshold", 0.99, path);
  if (!(threshold >= 0 && threshold <= 1)) throw ConfigError(path + ".threshold: must lie in [0, 1]");
  cfg.seed = c.seed;
  cfg.face = c.face;
  std::ostream* log = o.log;
  cfg.progress = [log](int done, int total) { *log << "tilt-experiment: " << done << "/" << total << " trials\n"; };

  const genericity::TiltExperimentReport r = genericity::tilt_experiment(cfg);
  // M_m at the untilted point, for reference.
  const lp::OptimalFace at0 =
      genericity::compute_Mm(cfg.family.base, cfg.w, cfg.separating, Vec::Zero(cfg.separating.size()), cfg.polytope, c.face);

  json out;
  out["trials"] = r.trials;
  out["radius"] = r.radius;
  out["seed"] = r.seed;
  out["family_dim"] = r.family_dim;
  out["separating_size"] = cfg.separating.size();
  out["pairs"] = r.pairs;
  out["fraction_ok"] = r.fraction_ok;
  out["threshold"] = threshold;
  out["worst_dim"] = r.worst_dim;
  out["worst_face_dim"] = r.worst_face_dim;
  out["dim_counts"] = r.dim_counts;
  out["untilted_dim"] = at0.dimension;
  out["inclusion_checked"] = r.inclusion_checked;
  out["inclusion_failures"] = r.inclusion_failures;
  const bool pass = r.fraction_ok >= threshold && r.inclusion_failures == 0;
  out["pass"] = pass;
  detail::write(c, "tilt_experiment.json", out.dump(2) + "\n");
  std::string csv = "trials,radius,seed,family_dim,pairs,fraction_ok,worst_dim,worst_face_dim,inclusion_failures\n";
  csv += std::to_string(r.trials) + "," + io::format_double(r.radius) + "," + std::to_string(r.seed) + "," +
         std::to_string(r.family_dim) + "," + std::to_string(r.pairs) + "," + io::format_double(r.fraction_ok) + "," +
         std::to_string(r.worst_dim) + "," + std::to_string(r.worst_face_dim) + "," +
         std::to_string(r.inclusion_failures) + "\n";
  detail::write(c, "tilt_experiment.csv", csv);
  if (!pass) {
    *o.log << "tilt-experiment: fraction_ok " << io::format_double(r.fraction_ok) << " below threshold "
           << io::format_double(threshold);
    if (r.inclusion_failures) *o.log << ", " << r.inclusion_failures << " inclusion failures";
    *o.log << "\n";
    return 2;
  }
  return 0;
}

/// Sampled alpha(c) of a cost graph.
inline int cmd_alpha_curve(const RunOptions& o) {
  const detail::Context c = detail::load(o);
  const graph::CostGraph g = detail::load_graph_model(c);
  const std::string path = "config.alpha";
  const json& aj = io::field(c.cfg, "alpha", "config");
  const Eigen::Index b = g.homology_rank();
  std::vector<Vec> grid;
  if (aj.contains("c_grid")) {
    const json& cg = aj["c_grid"];
    if (!cg.is_array()) throw ConfigError(path + ".c_grid: expected an array");
    for (std::size_t i = 0; i < cg.size(); ++i) {
      const Vec v = io::as_vec(cg[i], path + ".c_grid[" + std::to_string(i) + "]");
      if (v.size() != b) throw ConfigError(path + ".c_grid[" + std::to_string(i) + "]: expected " + std::to_string(b) + " entries");
      grid.push_back(v);
    }
  } else {
    const Vec lo = io::as_vec(io::field(aj, "lo", path), path + ".lo");
    const Vec hi = io::as_vec(io::field(aj, "hi", path), path + ".hi");
    const long long pts = io::as_int(io::field(aj, "points", path), path + ".points");
    if (lo.size() != b || hi.size() != b) throw ConfigError(path + ": lo/hi must have one entry per homology label");
    if (pts < 1) throw ConfigError(path + ".points: must be at least 1");
    long long total = 1;
    for (Eigen::Index i = 0; i < b; ++i) total *= pts;
    if (total > 1000000) throw ConfigError(path + ".points: grid too large");
    for (long long id = 0; id < total; ++id) {
      Vec v(b);
      long long r = id;
      for (Eigen::Index a = b - 1; a >= 0; --a) {
        const long long k = r % pts;
        r /= pts;
        v[a] = pts == 1 ? lo[a] : lo[a] + (hi[a] - lo[a]) * static_cast<double>(k) / static_cast<double>(pts - 1);
      }
      grid.push_back(v);
    }
  }
  if (grid.empty()) throw ConfigError(path + ".c_grid: empty cohomology grid");
  const graph::AlphaSamples a = graph::alpha_function(g, grid, c.face.solver);
  detail::write(c, "alpha.csv", io::alpha_csv(a));
  // Karp gives the same numbers by an independent route.
  double worst = 0.0;
  for (std::size_t i = 0; i < grid.size(); ++i)
    worst = std::max(worst, std::abs(a.alpha[i] + graph::karp_min_mean_cycle(g, graph::tilted_costs(g, grid[i])).mean));
  const double karp_tol = io::get_or(c.cfg.contains("checks") ? c.cfg["checks"] : json::object(), "karp_tol", 1e-8, "config.checks");
  if (worst > karp_tol) {
    *o.log << "alpha-curve: LP and Karp disagree by " << io::format_double(worst) << "\n";
    return 2;
  }
  return 0;
}

/// Cells of a box meeting the stratum where the subdifferential has dimension >= k.
inline int cmd_sigma_scan(const RunOptions& o) {
  const detail::Context c = detail::load(o);
  if (detail::model_type(c) != "convex") throw ConfigError("config.model.type: expected 'convex'");
  const convex::PiecewiseConvexFunction f =
      io::function_from_json(io::field(detail::model(c), "function", "config.model"), "config.model.function");
  const std::string path = "config.scan";
  const json& sj = io::field(c.cfg, "scan", "config");
  const int k = static_cast<int>(io::as_int(io::field(sj, "k", path), path + ".k"));
  const json& bj = io::field(sj, "box", path);
  convex::Box box{to_std(io::as_vec(io::field(bj, "lo", path + ".box"), path + ".box.lo")),
                  to_std(io::as_vec(io::field(bj, "hi", path + ".box"), path + ".box.hi"))};
  const double h = io::as_double(io::field(sj, "cell_size", path), path + ".cell_size");
  convex::StratumScan s;
  try {
    s = convex::sigma_k_scan(f, k, box, h);
  } catch (const DimensionError& e) {
    throw ConfigError(path + ": " + e.what());
  }
  detail::write(c, "sigma_scan.csv", io::stratum_scan_csv(s));
  json out;
  out["k"] = s.k;
  out["cell_size"] = s.cell_size;
  out["shape"] = s.shape;
  out["cells"] = s.cells.size();
  out["fine_cells"] = s.fine_count;
  out["box_count_exponent"] = s.box_count_exponent;
  detail::write(c, "sigma_scan.json", out.dump(2) + "\n");
  return 0;
}

}  // namespace amlab::cli
