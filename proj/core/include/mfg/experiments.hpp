#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "mfg/operators.hpp"
#include "mfg/solver.hpp"

namespace mfg {

struct InitialSpec {
  /// "four_gaussians" or "custom" (uses `centers`).
  std::string preset = "four_gaussians";
  std::vector<std::array<double, 2>> centers{{0.25, 0.25}, {0.75, 0.25}, {0.25, 0.75}, {0.75, 0.75}};
  double sharpness = 100.0;
};

struct OutputSpec {
  std::string dir = "runs/default";
  std::vector<double> snapshot_times{0.0, 0.25, 0.5, 0.75, 1.0};
};

/// Complete description of one run. Defaults reproduce the reference setup on the
/// (20, 16) grid with f = 0.
struct RunConfig {
  int n_h = 20;
  int n_t = 16;
  double horizon = 1.0;

  double alpha = 1.0;
  double beta = 2.0;
  double epsilon = 0.1;
  double nu = 0.1;
  LaplacianScale laplacian = LaplacianScale::kPaper;
  bool force_params = false;

  std::string f_kind = "zero";
  double f_scale = 0.0;
  std::string terminal = "two_wells";

  InitialSpec initial;
  SolverConfig solver;
  OutputSpec output;
};

/// Parses YAML text. Unknown keys and bad values raise ConfigError naming the field.
RunConfig parse_run_config(const std::string& yaml_text);
RunConfig load_run_config(const std::filesystem::path& path);
/// YAML with every field spelled out; parse_run_config(dump_run_config(c)) == c.
std::string dump_run_config(const RunConfig& config);

/// Sum of isotropic Gaussians exp(-sharpness |x - c|^2), unnormalized.
DensityFunction gaussian_mixture(const std::vector<std::array<double, 2>>& centers,
                                 double sharpness);

Problem make_problem(const RunConfig& config);

/// Nearest time-slice index for t in [0, T].
int nearest_slice(double t, const GridSpec& grid);

/// -h^2 sum rho log rho (0 log 0 = 0).
double discrete_entropy(std::span<const double> slice, const GridSpec& grid);
/// (h^2 sum |a - b|^2)^(1/2) over one slice.
double slice_distance(std::span<const double> a, std::span<const double> b, const GridSpec& grid);

/// One-line header "n_h,n_h,t" then n_h rows of n_h values (%.17g).
void write_snapshot_csv(const std::filesystem::path& path, std::span<const double> slice,
                        int n_h, double t);
struct Snapshot {
  int n_h = 0;
  double t = 0.0;
  std::vector<double> values;
};
Snapshot read_snapshot_csv(const std::filesystem::path& path);

struct SolveOutcome {
  RunResult result;
  std::filesystem::path dir;
};

/// Runs the config and writes config.resolved, diagnostics.csv, rho_t{k}.csv, phi_t{k}.csv
/// and summary.json into `dir`. If the solver stops at max_iter the files are still
/// written and MaxIterationsReached is rethrown.
SolveOutcome solve_and_write(const RunConfig& config, const std::filesystem::path& dir);

struct Table1Cell {
  int n_h = 0;
  int n_t = 0;
  double tol = 0.0;
  std::optional<int> iterations;
  double wall_seconds = 0.0;
};

/// One preconditioned run per grid to the tightest tolerance, recording first hits.
std::vector<Table1Cell> run_table1(const RunConfig& base,
                                   const std::vector<std::array<int, 2>>& grids,
                                   const std::vector<double>& tolerances,
                                   const std::filesystem::path& out_dir);
void write_table1_csv(const std::filesystem::path& path, const std::vector<Table1Cell>& cells);

struct SweepRun {
  double parameter = 0.0;
  std::filesystem::path dir;
  RunResult result;
  double terminal_entropy = 0.0;
  /// Scaled L2 distance of the terminal density from rho_0.
  double terminal_displacement = 0.0;
};

/// nu in {0, 0.02, 0.1} by default; snapshots at t = 0, 0.5, 1.
std::vector<SweepRun> run_viscosity_sweep(const RunConfig& base, const std::vector<double>& nus,
                                          const std::filesystem::path& out_dir);
/// nu = 0 and epsilon in {0, 0.02, 0.1, 1, 5} by default.
std::vector<SweepRun> run_congestion_sweep(const RunConfig& base,
                                           const std::vector<double>& epsilons,
                                           const std::filesystem::path& out_dir);
void write_sweep_csv(const std::filesystem::path& path, const std::string& parameter_name,
                     const std::vector<SweepRun>& runs);

}  // namespace mfg
