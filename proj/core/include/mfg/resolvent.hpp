#pragma once

#include <span>
#include <vector>

#include "mfg/couplings.hpp"
#include "mfg/extended_real.hpp"
#include "mfg/grid.hpp"
#include "mfg/hamiltonian.hpp"

namespace mfg {

/// How the density argument eta of E_h is tied to rho.
enum class EtaCoupling {
  kSubstitute,  ///< differentiate in (rho, w), then set eta = rho
  kFrozen,      ///< eta held at a fixed value
};

/// Which coupling terms a density node carries.
enum class SliceRole {
  kInterior,  ///< E_h + F
  kTerminal,  ///< E_h + F + G / dt
  kNone,      ///< E_h only (split variants)
};

struct PointResolventProblem {
  double y_rho = 0.0;
  Vec4 y_w{};
  double sigma = 1.0;
  EtaCoupling eta_coupling = EtaCoupling::kSubstitute;
  double eta = 0.0;  ///< used only when eta_coupling == kFrozen
  SliceRole role = SliceRole::kInterior;
  double t = 0.0;
  double x1 = 0.0;
  double x2 = 0.0;
  double dt = 1.0;  ///< weight 1/dt of the terminal term
};

enum class Branch { kPositive, kZero };

struct PointResolventSolution {
  double rho = 0.0;
  Vec4 w{};
  /// Max-norm of the inclusion residual, relative to max(1, |y_rho|, |y_w|_inf).
  double residual = 0.0;
  Branch branch = Branch::kZero;
};

/// Componentwise projection onto K = R+ x R- x R+ x R-.
Vec4 project_cone_K(const Vec4& z);

/// The unique s in [0, m] with s + sigma c s^(beta'-1) = m.
/// Throws NonConvergence if 200 safeguarded Newton steps do not reach 1e-13.
double solve_w_shrink(double m, double c, double sigma, double beta_prime);

inline constexpr double kPointResolventTolerance = 1e-11;

/// Resolvent (I + sigma K)^{-1} at a single node, where K is the subdifferential of
/// E_h (+ F, + G/dt) in (rho, w) evaluated at eta as selected by the problem.
PointResolventSolution solve_point_resolvent(const PointResolventProblem& problem,
                                             const CongestionParams& params,
                                             const CouplingSpec& spec,
                                             double tolerance = kPointResolventTolerance);

/// Re-evaluates the inclusion (y - x)/sigma in K(x) for a candidate x = (rho, w), relative
/// to the same scale as PointResolventSolution::residual.
double point_inclusion_residual(const PointResolventProblem& problem, double rho, const Vec4& w,
                                const CongestionParams& params, const CouplingSpec& spec);

struct ResolventStats {
  std::size_t zero_branch_nodes = 0;
  double max_residual = 0.0;
};

/// Everything the field-level resolvent needs besides its inputs.
struct ResolventContext {
  ResolventContext(const GridSpec& grid, const CongestionParams& params, const CouplingSpec& spec,
                   std::vector<double> rho0, bool include_couplings);

  GridSpec grid;
  CongestionParams params;
  CouplingSpec spec;
  std::vector<double> rho0;
  std::vector<double> terminal_g;  ///< g at the nodes
  bool include_couplings;          ///< false for the reduced operator of the split variants
};

/// Field-level resolvent. Density slice 0 is pinned to rho0; node (k+1, i, j) is solved
/// jointly with w^k_{ij}. Outputs must be preallocated with the grid's shapes.
/// NonConvergence is rethrown with the node coordinates.
void apply_resolvent(const DensityField& y_rho, const FluxField& y_w, double sigma,
                     const ResolventContext& ctx, DensityField& rho, FluxField& w,
                     ResolventStats* stats = nullptr);

struct ResolventResult {
  DensityField rho;
  FluxField w;
  ResolventStats stats;
};

/// (I + sigma K)^{-1} with F and G/dt terms.
ResolventResult apply_resolvent_K(const DensityField& y_rho, const FluxField& y_w, double sigma,
                                  const GridSpec& grid, const CongestionParams& params,
                                  const CouplingSpec& spec, std::span<const double> rho0);

/// (I + sigma K~)^{-1}: E_h and the initial-slice indicator only.
ResolventResult apply_resolvent_K_tilde(const DensityField& y_rho, const FluxField& y_w,
                                        double sigma, const GridSpec& grid,
                                        const CongestionParams& params,
                                        std::span<const double> rho0);

/// Discrete energy J(rho, w, eta) with frozen eta.
ExtendedReal eval_J(const DensityField& rho, const FluxField& w, const DensityField& eta,
                    const GridSpec& grid, const CongestionParams& params, const CouplingSpec& spec,
                    std::span<const double> rho0);

}  // namespace mfg
