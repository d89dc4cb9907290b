#include <iostream>
#include <map>
#include <string>

#include "CLI11.hpp"
#include "asfem/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Adaptive stabilized finite elements for 2D Stokes"};
  app.require_subcommand(1);
  auto* run = app.add_subcommand("run", "Run a benchmark convergence study");

  std::string config_path;
  run->add_option("--config", config_path, "key = value configuration file (flags override it)");
  // Every setting is collected as text and applied through the same path as the config file.
  const std::map<std::string, std::string> flags = {
      {"case", "case1 | case2 | case3"},
      {"trial", "trial space label: DGk or PkPr"},
      {"beta", "super-penalization exponent (>= 1)"},
      {"eta", "penalty constant, or 'auto' for 10*(k+1)^2"},
      {"refine", "uniform | adaptive"},
      {"levels", "number of solve levels"},
      {"dorfler", "Dorfler fraction theta in (0,1]"},
      {"dorfler-mode", "squared | linear"},
      {"initial", "initial mesh resolution"},
      {"mesh", "initial mesh file (ntri-mesh v1)"},
      {"solver", "direct | fixed_point"},
      {"tol", "fixed-point relative residual tolerance"},
      {"inner-tol", "inner CG relative tolerance"},
      {"max-iter", "fixed-point iteration cap"},
      {"csv", "convergence table path ('-' for stdout)"},
      {"vtk", "prefix for per-level VTK snapshots"},
      {"matrix", "prefix for per-level MatrixMarket dumps"},
  };
  std::map<std::string, std::string> values;
  for (const auto& [name, help] : flags) run->add_option("--" + name, values[name], help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? asfem::kExitOk : asfem::kExitConfig;
  }

  asfem::RunConfig config;
  try {
    if (!config_path.empty()) config = asfem::load_config_file(config_path);
    for (const auto& [name, help] : flags) {
      if (run->count("--" + name) > 0) asfem::apply_setting(config, name, values[name]);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return asfem::kExitConfig;
  }
  return asfem::run(config, std::cerr);
}
