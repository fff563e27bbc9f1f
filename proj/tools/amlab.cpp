// Command-line entry point: amlab <subcommand> CONFIG [--seed N] [--out DIR]
// [--tol-face X] [--budget N].
#include <cstdint>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "amlab/cli.hpp"

namespace {

struct Flags {
  std::string config;
  std::uint64_t seed = 0;
  std::string out;
  double tol_face = 0.0;
  int budget = 0;
};

CLI::App* add_command(CLI::App& app, const std::string& name, const std::string& help, Flags& f) {
  CLI::App* sub = app.add_subcommand(name, help);
  sub->add_option("config", f.config, "JSON config or scenario file")->required();
  sub->add_option("--seed", f.seed, "master seed (overrides the config)");
  sub->add_option("--out", f.out, std::string("output directory (default $") + amlab::cli::kOutDirEnv + " or .)");
  sub->add_option("--tol-face", f.tol_face, "optimal-face tolerance");
  sub->add_option("--budget", f.budget, "probe budget for optimal-face exploration");
  return sub;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrete minimizing-measure experiments"};
  app.require_subcommand(1);
  Flags f;
  struct Entry {
    CLI::App* sub;
    int (*run)(const amlab::cli::RunOptions&);
  };
  const Entry entries[] = {
      {add_command(app, "solve-graph", "minimizing measures of a cost graph", f), amlab::cli::cmd_solve_graph},
      {add_command(app, "solve-tonelli", "minimizing measures of a discretized Lagrangian", f),
       amlab::cli::cmd_solve_tonelli},
      {add_command(app, "tilt-experiment", "Monte Carlo tilts of a cost family", f), amlab::cli::cmd_tilt_experiment},
      {add_command(app, "alpha-curve", "sampled alpha function of a cost graph", f), amlab::cli::cmd_alpha_curve},
      {add_command(app, "sigma-scan", "cells meeting a subdifferential stratum", f), amlab::cli::cmd_sigma_scan},
  };
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 1;
  }
  for (const Entry& e : entries) {
    if (!e.sub->parsed()) continue;
    amlab::cli::RunOptions o;
    o.config = f.config;
    o.out = f.out;
    if (e.sub->count("--seed")) o.seed = f.seed;
    if (e.sub->count("--tol-face")) o.tol_face = f.tol_face;
    if (e.sub->count("--budget")) o.budget = f.budget;
    try {
      return e.run(o);
    } catch (const amlab::Error& err) {
      std::cerr << e.sub->get_name() << ": error: " << err.what() << "\n";
      return 1;
    } catch (const std::exception& err) {
      std::cerr << e.sub->get_name() << ": error: " << err.what() << "\n";
      return 1;
    }
  }
  return 1;
}
