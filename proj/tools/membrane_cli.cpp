// Command-line front end: membrane <subcommand> [--config F] [--out D]
// [--level N] [--tol R].  See README for the config format.

#include <CLI11.hpp>

#include <Eigen/Core>

#include <cstdlib>
#include <iostream>
#include <string>

#include "membrane/commands.hpp"

int main(int argc, char** argv) {
  if (const char* threads = std::getenv("MEMBRANE_THREADS")) {
    const int n = std::atoi(threads);
    if (n > 0) Eigen::setNbThreads(n);
  }

  CLI::App app{
      "Small deformations of bending-energy-minimizing membranes: point "
      "forces on spheres, point constraints on the Clifford torus."};
  app.require_subcommand(1);

  std::string config_path;
  membrane::CliOverrides overrides;

  auto add_common = [&](CLI::App* cmd) {
    cmd->add_option("--config", config_path, "configuration file (TOML-style)")
        ->check(CLI::ExistingFile);
    cmd->add_option_function<std::string>(
        "--out", [&](const std::string& v) { overrides.out_dir = v; },
        "output directory (overrides [output] directory)");
    cmd->add_option_function<int>(
        "--level", [&](int v) { overrides.level = v; },
        "sphere refinement level (overrides [mesh] level)");
    cmd->add_option_function<double>(
        "--tol", [&](double v) { overrides.tol = v; },
        "solver residual tolerance (overrides [numeric] tol)");
  };

  add_common(app.add_subcommand("solve-forces",
                                "solve the sphere point-force problem"));
  add_common(app.add_subcommand("solve-constraints",
                                "solve the torus point-constraint problem"));
  add_common(app.add_subcommand(
      "sweep", "two-force interaction energy over the separation angle"));
  add_common(app.add_subcommand(
      "verify", "run geometry, kernel, spectral and convergence checks"));
  add_common(app.add_subcommand("mesh", "export the surface mesh only"));

  CLI11_PARSE(app, argc, argv);

  const std::string name = app.get_subcommands().front()->get_name();
  return membrane::run_command(name, config_path, overrides, std::cout);
}
