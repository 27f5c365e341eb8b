#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "mfg/couplings.hpp"
#include "mfg/errors.hpp"
#include "mfg/grid.hpp"
#include "mfg/hamiltonian.hpp"
#include "mfg/resolvent.hpp"

namespace mfg {

enum class Variant { kBasic, kPreconditioned, kSplit, kSplitPreconditioned };
enum class StepRule { kManual, kAuto };

std::string to_string(Variant v);
Variant parse_variant(const std::string& name);
bool is_preconditioned(Variant v);
bool is_split(Variant v);

struct SolverConfig {
  Variant variant = Variant::kPreconditioned;
  double tau = 0.5;
  double sigma = 0.5;
  int max_iter = 100000;
  double tol = 1e-3;
  /// Diagnostics cadence. Err is checked against tol every iteration regardless.
  int check_every = 1;
  StepRule step_rule = StepRule::kAuto;
  /// Power iterations and seed for ||C|| in the unpreconditioned variants.
  int norm_iterations = 200;
  std::uint64_t seed = 1;
  /// Extra Err thresholds whose first-hit iteration is recorded.
  std::vector<double> record_tolerances;
  /// Throw MaxIterationsReached instead of returning an unconverged result.
  bool throw_on_max_iter = true;
};

/// Upper bound on the squared star-norm of the split operator; see step-size checks.
inline constexpr double kSplitStarNormBound = 3.0;

struct SolverState {
  ValueField phi;
  DensityField rho;
  FluxField w;
  ValueField dual_a;                ///< split variants only
  std::vector<double> dual_b;       ///< split variants only
  int iter = 0;
};

struct DiagnosticsRecord {
  int iter = 0;
  double err_continuity = 0.0;
  double err_hjb = 0.0;
  double mass_error = 0.0;
  double wall_seconds = 0.0;
};

struct RunDiagnostics {
  std::vector<DiagnosticsRecord> records;
  /// (threshold, first iteration with Err < threshold), in record_tolerances order.
  std::vector<std::pair<double, std::optional<int>>> first_hits;
  double tau = 0.0;
  double sigma = 0.0;
  /// ||C||^2 (or its split analogue) when a power iteration was run, else 0.
  double norm_C_squared = 0.0;
  std::size_t zero_branch_nodes = 0;
  std::size_t hjb_vacuum_nodes = 0;
  double setup_seconds = 0.0;
  double wall_seconds = 0.0;
  bool converged = false;
  /// Records with Err above the previous record after 20 iterations.
  int err_increases = 0;
};

struct RunResult {
  SolverState state;
  RunDiagnostics diagnostics;
};

/// Raised when max_iter is reached; carries everything computed so far.
class MaxIterationsReached : public NonConvergence {
 public:
  MaxIterationsReached(const std::string& what, double best, std::shared_ptr<RunResult> result)
      : NonConvergence(what, best), result_(std::move(result)) {}
  const RunResult& result() const { return *result_; }

 private:
  std::shared_ptr<RunResult> result_;
};

struct Problem {
  GridSpec grid;
  CongestionParams params;
  CouplingSpec coupling;
  std::vector<double> rho0;
};

RunResult run(const SolverConfig& config, const Problem& problem);

/// (h^2 dt sum |A rho + B w|^2)^(1/2).
double compute_continuity_residual(const SolverState& state, const GridSpec& grid);

struct HjbResidual {
  double value = 0.0;
  /// Nodes skipped because rho + epsilon vanishes there.
  std::size_t vacuum_nodes = 0;
};

/// Scaled L2 norm of -D_t phi - nu Lap phi + H_h(D_h phi^k, rho^{k+1}) - f, phi^{N_T} := g.
HjbResidual compute_hjb_residual(const SolverState& state, const GridSpec& grid,
                                 const CongestionParams& params, const CouplingSpec& coupling);

/// max_k |h^2 sum rho^k - 1|.
double mass_error(const SolverState& state, const GridSpec& grid);

/// Power iteration on the split operator's normal map; returns the squared norm.
double estimate_norm_C_tilde(const GridSpec& grid, int iterations = 200, std::uint64_t seed = 1);

}  // namespace mfg
