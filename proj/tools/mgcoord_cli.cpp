// mgcoord: centralized solves, Gauss-Seidel coordination runs, spectral
// certificates and multi-variant experiments driven by a JSON config.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "mgcoord/harness.hpp"

namespace {

using mgcoord::Json;

struct Overrides {
  std::string config_path;
  std::string case_kind;
  std::string ordering;
  double tol = 0.0;
  int max_steps = -1;
  bool warm_start = false;
  int warm_start_level = 0;
  std::string schedule;
  std::string coarse_solver;
  bool timing = false;
  bool parallel = false;
  long long seed = -1;
  std::string output;
  std::string plot;
};

void add_common(CLI::App* cmd, Overrides& o) {
  cmd->add_option("-c,--config", o.config_path, "JSON config file");
  cmd->add_option("--case", o.case_kind, "temporal, spatial, chain or custom");
  cmd->add_option("--ordering", o.ordering, "ordering name");
  cmd->add_option("--tol", o.tol, "step-difference tolerance");
  cmd->add_option("--max-steps", o.max_steps, "maximum coordination steps");
  cmd->add_option("--seed", o.seed, "seed for random cases and power iteration");
  cmd->add_option("-o,--output", o.output, "output file (default stdout)");
}

void add_run(CLI::App* cmd, Overrides& o) {
  cmd->add_flag("--warm-start", o.warm_start, "initialize from the prolonged coarse solution");
  cmd->add_option("--warm-start-level", o.warm_start_level, "coarse resolution for --warm-start");
  cmd->add_option("--schedule", o.schedule, "comma-separated coarsening levels, e.g. 1,2,4,5");
  cmd->add_option("--coarse-solver", o.coarse_solver, "central or gs");
  cmd->add_flag("--timing", o.timing, "add a wall_time_ms column");
  cmd->add_flag("--parallel", o.parallel, "solve uncoupled partitions of a group on threads");
}

Json overrides_json(const Overrides& o) {
  Json j = Json::object();
  if (!o.case_kind.empty()) j["case"] = o.case_kind;
  if (!o.ordering.empty()) j["ordering"] = o.ordering;
  if (o.tol != 0.0) j["tol"] = o.tol;
  if (o.max_steps >= 0) j["max_steps"] = o.max_steps;
  if (o.warm_start) j["warm_start"] = true;
  if (o.warm_start_level > 0) j["warm_start_level"] = o.warm_start_level;
  if (!o.schedule.empty()) {
    Json levels = Json::array();
    std::stringstream ss(o.schedule);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        levels.push_back(std::stoi(item));
      } catch (const std::exception&) {
        throw mgcoord::Error(mgcoord::ErrorKind::Config, "bad --schedule entry '" + item + "'");
      }
    }
    j["schedule"] = {{"levels", levels}, {"sweeps_per_level", 1}};
  }
  if (!o.coarse_solver.empty()) j["coarse_solver"] = o.coarse_solver;
  if (o.timing) j["timing"] = true;
  if (o.parallel) j["parallel"] = true;
  if (o.seed >= 0) j["seed"] = o.seed;
  if (!o.output.empty()) j["output"] = o.output;
  if (!o.plot.empty()) j["plot"] = o.plot;
  return j;
}

mgcoord::ExperimentConfig load(const Overrides& o) {
  Json base = Json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw mgcoord::Error(mgcoord::ErrorKind::Config, "cannot open config file '" + o.config_path + "'");
    try {
      in >> base;
    } catch (const Json::exception& e) {
      throw mgcoord::Error(mgcoord::ErrorKind::Config, std::string("malformed config: ") + e.what());
    }
  }
  mgcoord::merge_config(base, overrides_json(o));
  return mgcoord::parse_config(base);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multi-grid Gauss-Seidel coordination of partitioned QPs"};
  app.require_subcommand(1);
  Overrides o;
  auto* solve = app.add_subcommand("solve", "centralized KKT solve, JSON solution");
  auto* gs = app.add_subcommand("gs", "Gauss-Seidel coordination, CSV trace");
  auto* spectrum = app.add_subcommand("spectrum", "spectral radius certificate, JSON");
  auto* experiment = app.add_subcommand("experiment", "several variants, CSV and SVG");
  for (auto* cmd : {solve, gs, spectrum, experiment}) add_common(cmd, o);
  for (auto* cmd : {gs, experiment}) add_run(cmd, o);
  experiment->add_option("--plot", o.plot, "SVG chart path");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  mgcoord::ExperimentConfig config;
  try {
    config = load(o);
  } catch (const mgcoord::Error& e) {
    std::cerr << mgcoord::error_json(e).dump() << '\n';
    return mgcoord::exit_code_for(e.kind());
  }

  std::ofstream file;
  std::ostream* out = &std::cout;
  if (!config.output.empty()) {
    file.open(config.output);
    if (!file) {
      std::cerr << mgcoord::error_json(mgcoord::Error(mgcoord::ErrorKind::Config, "cannot write '" + config.output + "'")).dump()
                << '\n';
      return 2;
    }
    out = &file;
  }

  if (solve->parsed()) return mgcoord::cmd_solve(config, *out, std::cerr);
  if (gs->parsed()) return mgcoord::cmd_gs(config, *out, std::cerr);
  if (spectrum->parsed()) return mgcoord::cmd_spectrum(config, *out, std::cerr);
  return mgcoord::cmd_experiment(config, *out, std::cerr);
}
