#include "twoscale/config.hpp"
#include "twoscale/errors.hpp"
#include "twoscale/microcell.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

int main(int argc, char** argv) {
  CLI::App app{"Two-scale compliance optimization with adaptive refinement and modeling-error estimation"};
  app.require_subcommand(1);

  std::string config_path, output;
  std::vector<std::string> overrides;
  int verbose = 0;
  bool quiet = false;
  auto* run = app.add_subcommand("run", "Run the adaptive loop for one scenario");
  run->add_option("-c,--config", config_path, "key = value configuration file")->check(CLI::ExistingFile);
  run->add_option("-o,--output", output, "Output directory (overrides the configuration)");
  run->add_option("-s,--set", overrides, "Override one key, key=value (repeatable)");
  run->add_flag("-v,--verbose", verbose, "More output (repeat for optimizer details)");
  run->add_flag("-q,--quiet", quiet, "Errors only");

  int resolution = 64, samples = 11;
  std::string table_path;
  auto* cells = app.add_subcommand("cells", "Write the axis-aligned cell tensor database as CSV");
  cells->add_option("-n,--resolution", resolution, "Micro grid resolution")->check(CLI::Range(16, 1024));
  cells->add_option("--samples", samples, "Samples per width direction")->check(CLI::Range(2, 200));
  cells->add_option("-o,--output", table_path, "CSV file (standard output when omitted)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? twoscale::kExitOk : twoscale::kExitConfig;
  }

  if (*cells) {
    try {
      const twoscale::DirectCellModel model(twoscale::CellMaterials{}, resolution);
      if (table_path.empty()) {
        twoscale::write_cell_database(std::cout, model, samples);
      } else {
        std::ofstream f(table_path);
        if (!f) {
          std::cerr << "cannot write " << table_path << '\n';
          return twoscale::kExitConfig;
        }
        twoscale::write_cell_database(f, model, samples);
      }
      return twoscale::kExitOk;
    } catch (const std::exception& e) {
      std::cerr << "solver failure: " << e.what() << '\n';
      return twoscale::kExitSolver;
    }
  }

  twoscale::RunConfig config;
  try {
    if (!config_path.empty()) config = twoscale::load_config(config_path);
    for (const auto& kv : overrides) twoscale::apply_override(config, kv);
    if (!output.empty()) config.output = output;
    config.validate();
  } catch (const twoscale::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return twoscale::kExitConfig;
  }
  const int verbosity = quiet ? 0 : 1 + verbose;
  return twoscale::run(config, quiet ? std::cerr : std::cout, verbosity);
}
