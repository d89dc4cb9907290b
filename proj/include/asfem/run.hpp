#pragma once

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "asfem/adapt.hpp"

namespace asfem {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string case_id = "case1";
  std::string trial = "P1P1";
  double beta = 1.0;
  std::optional<double> eta;  // empty: 10 (k+1)^2
  Refinement refinement = Refinement::Uniform;
  std::optional<double> theta;  // empty: the case default
  DorflerMode mode = DorflerMode::Squared;
  int levels = 4;
  std::optional<int> resolution;  // initial mesh resolution, empty: case default
  std::string mesh_path;          // initial mesh file, overrides resolution
  SolverKind solver = SolverKind::Direct;
  double tol = 1e-9;
  double inner_tol = 1e-12;
  int max_iter = 200;
  std::string csv_path = "convergence.csv";  // "-" writes to stdout
  std::string vtk_prefix;                    // <prefix>_level<N>.vtk per level
  std::string matrix_prefix;                 // <prefix>_level<N>.mtx per level
};

/// Sets one key (CLI long-option name or config-file key). Throws ConfigError.
void apply_setting(RunConfig& config, const std::string& key, const std::string& value);

/// Reads `key = value` lines ('#' starts a comment) on top of `base`.
RunConfig load_config_file(const std::string& path, RunConfig base = {});
RunConfig parse_config(std::istream& in, RunConfig base = {});

/// Checks label, degrees, theta and levels. Throws ConfigError.
void validate(const RunConfig& config);

FormParameters resolve_parameters(const RunConfig& config);

struct Study {
  BenchmarkCase bcase;
  LoopConfig loop;
  Mesh initial;
};

/// Validated case, loop settings and initial mesh for a configuration. Throws
/// ConfigError, or std::runtime_error for an unreadable mesh file.
Study prepare_study(const RunConfig& config);

inline const std::vector<std::string> kCsvColumns = {
    "level",    "ndof_u",   "ndof_p", "ndof_test", "ndof_total", "h_max",        "err_u_L2",    "err_p_L2",
    "err_triple", "est_triple", "eoc_u", "eoc_p",   "eoc_triple", "marked_cells", "solver_iters"};

/// Comment lines (written with a leading '#'), the header row, then one row per record.
void write_csv(std::ostream& out, const std::vector<ConvergenceRecord>& records,
               const std::vector<std::string>& comments = {});

/// Legacy ASCII VTK unstructured grid: vertices, triangles, vertex-averaged
/// velocity and pressure, and one indicator value per cell.
void write_vtk(std::ostream& out, const FieldCoefficients& velocity, const FieldCoefficients& pressure,
               const Vector& indicators, const std::string& title = "asfem");

enum ExitCode { kExitOk = 0, kExitConfig = 1, kExitSolver = 2 };

/// Runs a configuration end to end. Progress and errors go to `log`.
int run(const RunConfig& config, std::ostream& log);

}  // namespace asfem
