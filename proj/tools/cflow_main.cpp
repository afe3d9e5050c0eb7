// Command-line front end for simulating constrained curvature flows of
// convex curves and axisymmetric surfaces.

#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cli_commands.hpp"

namespace {

using namespace cflow;
using namespace cflow::cli;

struct Flag {
  const char* key;
  const char* help;
  std::string value;
  CLI::Option* option = nullptr;
};

std::vector<Flag> experiment_flags() {
  return {
      {"dim", "1 for curves, 2 for axisymmetric surfaces", {}},
      {"shape", "ball:r | ellipse:a,b | spheroid:a,c | perturbed:r0;k:eps[,k:eps]", {}},
      {"speed", "powersum:k:c[,k:c] | log1p | expm1", {}},
      {"mode", "volume | area | standard", {}},
      {"grid", "nodes N (power of two, >= 64)", {}},
      {"tmax", "final time", {}},
      {"cfl", "step safety factor sigma in (0, 1]", {}},
      {"dev-tol", "convergence threshold on max|phi(H) - h| / h", {}},
      {"sphericity-tol", "convergence threshold on R+/R- - 1", {}},
      {"record-interval", "time between diagnostics records", {}},
      {"out", "output directory", {}},
      {"snapshot-every", "keep every k-th record as a snapshot (0: first and last)", {}},
      {"label", "free-form run label copied into summary.json", {}},
  };
}

void add_flags(CLI::App* cmd, std::vector<Flag>& flags) {
  for (auto& f : flags) f.option = cmd->add_option(std::string("--") + f.key, f.value, f.help);
}

void apply_flags(ExperimentConfig& cfg, const std::vector<Flag>& flags) {
  for (const auto& f : flags)
    if (f.option->count() > 0) apply_setting(cfg, f.key, f.value);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulator and property checks for constrained curvature flows"};
  app.require_subcommand(1);

  // run
  auto* run_cmd = app.add_subcommand("run", "integrate one experiment");
  std::string run_config;
  run_cmd->add_option("--config", run_config, "key = value file; flags override it");
  auto run_flags = experiment_flags();
  add_flags(run_cmd, run_flags);
  bool quiet = false;
  run_cmd->add_flag("-q,--quiet", quiet, "no progress line");

  // sweep
  auto* sweep_cmd = app.add_subcommand("sweep", "run a shapes x speeds x modes matrix");
  std::string sweep_config;
  sweep_cmd->add_option("--config", sweep_config, "sweep file")->required();
  std::string sweep_out;
  auto* sweep_out_opt = sweep_cmd->add_option("--out", sweep_out, "output directory");
  std::size_t sweep_jobs = 0;
  auto* sweep_jobs_opt = sweep_cmd->add_option("--jobs", sweep_jobs, "concurrent cells");

  // validate-speed
  auto* vs_cmd = app.add_subcommand("validate-speed", "check admissibility conditions i-v");
  std::string vs_spec, vs_json;
  vs_cmd->add_option("speed", vs_spec, "speed spec")->required();
  vs_cmd->add_option("--json", vs_json, "also write the report as JSON");

  // oracle
  auto* or_cmd = app.add_subcommand("oracle", "radius of a ball under the standard flow");
  std::string or_speed;
  int or_dim = 1;
  double or_r0 = 1.0, or_tmax = 1.0;
  std::size_t or_samples = 1000;
  std::string or_out;
  or_cmd->add_option("--speed", or_speed, "speed spec")->required();
  or_cmd->add_option("--dim", or_dim, "1 or 2");
  or_cmd->add_option("--r0", or_r0, "initial radius");
  or_cmd->add_option("--tmax", or_tmax, "final time");
  or_cmd->add_option("--samples", or_samples, "number of time intervals");
  or_cmd->add_option("--out", or_out, "CSV path (default: stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (*run_cmd) {
      ExperimentConfig cfg = run_config.empty() ? ExperimentConfig{} : load_experiment(run_config);
      apply_flags(cfg, run_flags);
      std::ostream null_stream(nullptr);
      return cmd_run(cfg, quiet ? null_stream : std::cout);
    }
    if (*sweep_cmd) {
      SweepConfig sw = load_sweep(sweep_config);
      if (sweep_out_opt->count() > 0) sw.base.out = sweep_out;
      if (sweep_jobs_opt->count() > 0) sw.jobs = std::max<std::size_t>(1, sweep_jobs);
      return cmd_sweep(sw, std::cout);
    }
    if (*vs_cmd) return cmd_validate_speed(vs_spec, vs_json, std::cout);
    if (*or_cmd) {
      if (or_out.empty()) return cmd_oracle(or_speed, or_dim, or_r0, or_tmax, or_samples,
                                            std::cout, std::cerr);
      std::ofstream csv(or_out);
      if (!csv) {
        std::cerr << "cannot write " << or_out << '\n';
        return kConfigError;
      }
      return cmd_oracle(or_speed, or_dim, or_r0, or_tmax, or_samples, csv, std::cerr);
    }
  } catch (const SpecError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  return kConfigError;
}
