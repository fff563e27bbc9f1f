// JSON and CSV formats: graphs (JSON and edge-list text), convex functions,
// phase grids, Lagrangian presets, measures, alpha curves and stratum scans.
#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "amlab/convex.hpp"
#include "amlab/error.hpp"
#include "amlab/graph.hpp"
#include "amlab/linalg.hpp"
#include "amlab/tonelli.hpp"

namespace amlab::io {

using json = nlohmann::ordered_json;

/// 17 significant digits, enough to read back the same double.
inline std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot open '" + path + "'");
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

inline void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path + "'");
  out << text;
  if (!out) throw ConfigError("write failed for '" + path + "'");
}

/// Parses JSON text; syntax errors carry the line and column reported by the parser.
inline json parse_json(const std::string& text, const std::string& source) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(source + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Field access with path-named errors

inline const json& field(const json& j, const std::string& key, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected an object");
  auto it = j.find(key);
  if (it == j.end()) throw ConfigError(path + ": missing field '" + key + "'");
  return *it;
}

inline double as_double(const json& j, const std::string& path) {
  if (!j.is_number()) throw ConfigError(path + ": expected a number");
  return j.get<double>();
}

inline long long as_int(const json& j, const std::string& path) {
  if (!j.is_number_integer()) throw ConfigError(path + ": expected an integer");
  return j.get<long long>();
}

inline bool as_bool(const json& j, const std::string& path) {
  if (!j.is_boolean()) throw ConfigError(path + ": expected true or false");
  return j.get<bool>();
}

inline std::string as_string(const json& j, const std::string& path) {
  if (!j.is_string()) throw ConfigError(path + ": expected a string");
  return j.get<std::string>();
}

inline Vec as_vec(const json& j, const std::string& path) {
  if (!j.is_array()) throw ConfigError(path + ": expected an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = as_double(j[i], path + "[" + std::to_string(i) + "]");
  return v;
}

inline double get_or(const json& j, const std::string& key, double def, const std::string& path) {
  return j.contains(key) ? as_double(j[key], path + "." + key) : def;
}
inline long long get_or(const json& j, const std::string& key, long long def, const std::string& path) {
  return j.contains(key) ? as_int(j[key], path + "." + key) : def;
}
inline bool get_or(const json& j, const std::string& key, bool def, const std::string& path) {
  return j.contains(key) ? as_bool(j[key], path + "." + key) : def;
}

inline json to_json(const Vec& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

// ---------------------------------------------------------------------------
// Graphs

inline graph::CostGraph graph_from_json(const json& j, const std::string& path = "graph") {
  graph::CostGraph g;
  g.node_count = static_cast<int>(as_int(field(j, "nodes", path), path + ".nodes"));
  const json& edges = field(j, "edges", path);
  if (!edges.is_array()) throw ConfigError(path + ".edges: expected an array");
  for (std::size_t i = 0; i < edges.size(); ++i) {
    const std::string p = path + ".edges[" + std::to_string(i) + "]";
    const json& e = edges[i];
    graph::Edge ed;
    ed.tail = static_cast<int>(as_int(field(e, "tail", p), p + ".tail"));
    ed.head = static_cast<int>(as_int(field(e, "head", p), p + ".head"));
    ed.cost = as_double(field(e, "cost", p), p + ".cost");
    if (e.contains("h")) {
      if (!e["h"].is_array()) throw ConfigError(p + ".h: expected an array of integers");
      for (std::size_t k = 0; k < e["h"].size(); ++k)
        ed.h.push_back(static_cast<int>(as_int(e["h"][k], p + ".h[" + std::to_string(k) + "]")));
    }
    g.edges.push_back(std::move(ed));
  }
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return g;
}

inline json graph_to_json(const graph::CostGraph& g) {
  json j;
  j["nodes"] = g.node_count;
  j["edges"] = json::array();
  for (const auto& e : g.edges) j["edges"].push_back({{"tail", e.tail}, {"head", e.head}, {"cost", e.cost}, {"h", e.h}});
  return j;
}

/// Edge-list text: one edge per line "tail head cost h1 h2 ...". Blank lines and
/// lines starting with '#' are skipped; the node count is one more than the
/// largest endpoint unless a line "nodes N" appears.
inline graph::CostGraph graph_from_edge_list(const std::string& text, const std::string& source = "edge list") {
  graph::CostGraph g;
  int declared = -1, max_node = -1;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    std::istringstream ls(line);
    const std::string where = source + ":" + std::to_string(lineno);
    if (line.compare(start, 5, "nodes") == 0) {
      std::string word;
      ls >> word >> declared;
      if (!ls || declared <= 0) throw ConfigError(where + ": expected 'nodes N' with N > 0");
      continue;
    }
    graph::Edge e;
    if (!(ls >> e.tail >> e.head >> e.cost)) throw ConfigError(where + ": expected 'tail head cost h...'");
    int h;
    while (ls >> h) e.h.push_back(h);
    if (!ls.eof()) throw ConfigError(where + ": homology labels must be integers");
    max_node = std::max({max_node, e.tail, e.head});
    g.edges.push_back(std::move(e));
  }
  g.node_count = declared > 0 ? declared : max_node + 1;
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(source + ": " + e.what());
  }
  return g;
}

inline std::string graph_to_edge_list(const graph::CostGraph& g) {
  std::string out = "nodes " + std::to_string(g.node_count) + "\n";
  for (const auto& e : g.edges) {
    out += std::to_string(e.tail) + " " + std::to_string(e.head) + " " + format_double(e.cost);
    for (int h : e.h) out += " " + std::to_string(h);
    out += "\n";
  }
  return out;
}

/// Reads either format; text that starts with '{' is JSON.
inline graph::CostGraph load_graph(const std::string& path) {
  const std::string text = read_file(path);
  const auto start = text.find_first_not_of(" \t\r\n");
  if (start != std::string::npos && text[start] == '{') return graph_from_json(parse_json(text, path), path);
  return graph_from_edge_list(text, path);
}

// ---------------------------------------------------------------------------
// Convex functions

inline convex::PiecewiseConvexFunction function_from_json(const json& j, const std::string& path = "function") {
  const long long n = as_int(field(j, "n", path), path + ".n");
  const double q = get_or(j, "q", 0.0, path);
  const json& pieces = field(j, "pieces", path);
  if (!pieces.is_array() || pieces.empty()) throw ConfigError(path + ".pieces: expected a nonempty array");
  std::vector<convex::AffinePiece> out;
  for (std::size_t i = 0; i < pieces.size(); ++i) {
    const std::string p = path + ".pieces[" + std::to_string(i) + "]";
    Vec g = as_vec(field(pieces[i], "gradient", p), p + ".gradient");
    if (g.size() != n) throw ConfigError(p + ".gradient: expected length " + std::to_string(n));
    out.push_back({g, get_or(pieces[i], "offset", 0.0, p)});
  }
  return convex::PiecewiseConvexFunction(std::move(out), q);
}

inline json function_to_json(const convex::PiecewiseConvexFunction& f) {
  json j;
  j["n"] = f.dim();
  j["q"] = f.quadratic_coeff();
  j["pieces"] = json::array();
  for (const auto& p : f.pieces()) j["pieces"].push_back({{"gradient", to_json(p.gradient)}, {"offset", p.offset}});
  return j;
}

/// Header "i0,...,k" then one row per marked cell.
inline std::string stratum_scan_csv(const convex::StratumScan& s) {
  std::string out;
  for (std::size_t a = 0; a < s.shape.size(); ++a) out += "i" + std::to_string(a) + ",";
  out += "k\n";
  for (const auto& c : s.cells) {
    for (int i : c) out += std::to_string(i) + ",";
    out += std::to_string(s.k) + "\n";
  }
  return out;
}

// ---------------------------------------------------------------------------
// Phase grids and Lagrangians

inline tonelli::PhaseGrid grid_from_json(const json& j, const std::string& path = "grid") {
  tonelli::PhaseGrid g;
  g.dim = static_cast<int>(get_or(j, "dim", 1LL, path));
  g.nx = static_cast<int>(as_int(field(j, "nx", path), path + ".nx"));
  g.nv = static_cast<int>(get_or(j, "nv", static_cast<long long>(g.nx), path));
  g.vmax = get_or(j, "n", 2.0, path);
  g.dt = get_or(j, "dt", 0.0, path);
  g.time_periodic = get_or(j, "time_periodic", false, path);
  g.nt = static_cast<int>(get_or(j, "nt", 1LL, path));
  try {
    g.validate();
  } catch (const Error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return g;
}

inline json grid_to_json(const tonelli::PhaseGrid& g) {
  json j;
  j["dim"] = g.dim;
  j["nx"] = g.nx;
  j["nv"] = g.nv;
  j["n"] = g.vmax;
  j["dt"] = g.step();
  j["time_periodic"] = g.time_periodic;
  j["nt"] = g.nt;
  return j;
}

/// {"preset": "pendulum" | "two-well" | "flat" | "forced-pendulum" | "mechanical", ...}.
/// "mechanical" takes "potential": samples of V, or the name of a preset potential.
inline tonelli::LagrangianSpec lagrangian_from_json(const json& j, int dim, const std::string& path = "lagrangian") {
  const std::string preset = as_string(field(j, "preset", path), path + ".preset");
  const double amp = get_or(j, "amplitude", 1.0, path);
  if (preset == "pendulum") return tonelli::pendulum(amp);
  if (preset == "two-well") return tonelli::two_well(amp);
  if (preset == "flat") return tonelli::flat();
  if (preset == "forced-pendulum") return tonelli::forced_pendulum(get_or(j, "eps", 0.1, path));
  if (preset == "mechanical") {
    const json& pot = field(j, "potential", path);
    if (pot.is_string()) {
      const std::string name = pot.get<std::string>();
      if (name == "pendulum") return tonelli::pendulum(amp);
      if (name == "two-well") return tonelli::two_well(amp);
      throw ConfigError(path + ".potential: unknown preset potential '" + name + "'");
    }
    const Vec v = as_vec(pot, path + ".potential");
    try {
      return tonelli::mechanical(to_std(v), dim);
    } catch (const Error& e) {
      throw ConfigError(path + ".potential: " + e.what());
    }
  }
  throw ConfigError(path + ".preset: unknown preset '" + preset + "'");
}

/// Header "x0,...,v0,...,[t,]weight"; rows for cells with nonzero weight.
inline std::string measure_csv(const tonelli::PhaseGrid& g, const Vec& mu, double drop_below = 0.0) {
  std::string out;
  for (int a = 0; a < g.dim; ++a) out += "x" + std::to_string(a) + ",";
  for (int a = 0; a < g.dim; ++a) out += "v" + std::to_string(a) + ",";
  if (g.time_periodic) out += "t,";
  out += "weight\n";
  for (Eigen::Index i = 0; i < mu.size(); ++i) {
    if (!(mu[i] > drop_below)) continue;
    const Vec x = g.position(g.x_of(i)), v = g.velocity(g.v_of(i));
    for (int a = 0; a < g.dim; ++a) out += format_double(x[a]) + ",";
    for (int a = 0; a < g.dim; ++a) out += format_double(v[a]) + ",";
    if (g.time_periodic) out += format_double(g.time(g.slice_of(i))) + ",";
    out += format_double(mu[i]) + "\n";
  }
  return out;
}

/// Header "c0,...,alpha".
inline std::string alpha_csv(const graph::AlphaSamples& a) {
  std::string out;
  const Eigen::Index b = a.c.empty() ? 0 : a.c.front().size();
  for (Eigen::Index i = 0; i < b; ++i) out += "c" + std::to_string(i) + ",";
  out += "alpha\n";
  for (std::size_t k = 0; k < a.c.size(); ++k) {
    for (Eigen::Index i = 0; i < b; ++i) out += format_double(a.c[k][i]) + ",";
    out += format_double(a.alpha[k]) + "\n";
  }
  return out;
}

}  // namespace amlab::io
