#pragma once

#include "twoscale/scenario.hpp"

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace twoscale {

/// Settings of one adaptive run. Keys in configuration files carry the field names.
struct RunConfig {
  /// carrier | cantilever | bridge | lshape
  std::string scenario = "carrier";
  /// Uniform level of the starting mesh; the scenario default when unset.
  std::optional<int> initial_level;
  /// Refinement steps; the run emits steps + 1 rows (0 .. steps).
  int steps = 14;
  double fraction = 0.4;
  /// Alternating laminate rounds used for the estimator weights.
  int laminate_rounds = 50;
  /// Micro grid resolution of the cell problems.
  int cell_resolution = 64;
  /// table: interpolated cell tensors; direct: a cell solve per distinct width pair.
  std::string cell_model = "table";
  int optimizer_iterations = 200;
  double optimizer_tolerance = 1e-6;
  std::string output = "output";
  /// Cross-check one cell tensor against the boundary element solver before the run.
  bool bem_check = false;
  /// Width of the point-load segments (cantilever, lshape); the scenario default when unset.
  std::optional<double> load_width;
  /// Resume from the checkpoint of this step in the output directory.
  std::optional<int> resume_step;

  /// Throws ConfigError naming the first key out of range.
  void validate() const;
  Scenario make_scenario() const;
  int level() const;
};

/// Sets one key from its textual value. Throws ConfigError naming the key when it is unknown or the
/// value does not parse.
void set_key(RunConfig& config, const std::string& key, const std::string& value);

/// Applies an override of the form key=value.
void apply_override(RunConfig& config, const std::string& assignment);

/// key = value lines; '#' starts a comment; omitted keys keep their defaults. The result is
/// validated. Throws ConfigError.
RunConfig parse_config(std::istream& is);
RunConfig load_config(const std::string& path);

/// Writes every key with its value in the format parse_config reads.
void write_config(std::ostream& os, const RunConfig& config);

/// Exit statuses of run().
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 1;
inline constexpr int kExitSolver = 2;

/// Runs the adaptive loop and writes into config.output: indicators.csv, diagnostics.csv,
/// design_<step>.csv, mesh_<step>.txt, field_<step>.vtk per row, then summary.txt and run.log.
/// verbosity 0 is silent, 1 prints one line per row to `log`, 2 adds optimizer details.
int run(const RunConfig& config, std::ostream& log, int verbosity = 1);

}  // namespace twoscale
