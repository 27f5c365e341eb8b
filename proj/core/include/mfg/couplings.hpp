#pragma once

#include <functional>
#include <string>
#include <vector>

#include "mfg/extended_real.hpp"
#include "mfg/grid.hpp"

namespace mfg {

enum class CouplingKind {
  kZero,    ///< f = 0, F = 0 on rho >= 0
  kLinear,  ///< f = s rho, F = s rho^2 / 2 on rho >= 0
};

/// Terminal cost g(x) of space only; G(x, rho) = g(x) rho on rho >= 0.
struct TerminalCost {
  std::string id;
  std::function<double(double x1, double x2)> g;
};

/// 0.1 sin^2(pi (x1 - 0.5)) + 0.1 sin^2(2 pi (x2 - 0.25)); minima at (0.5, 0.25), (0.5, 0.75).
TerminalCost two_wells_terminal_cost();
TerminalCost zero_terminal_cost();
/// Looks up a terminal cost by id ("two_wells", "zero"). Throws ConfigError otherwise.
TerminalCost terminal_cost_preset(const std::string& id);

struct CouplingSpec {
  CouplingKind f_kind = CouplingKind::kZero;
  double f_scale = 0.0;
  TerminalCost terminal = zero_terminal_cost();
};

ExtendedReal eval_F(double rho, double t, double x1, double x2, const CouplingSpec& spec);
double eval_f(double rho, double t, double x1, double x2, const CouplingSpec& spec);
ExtendedReal eval_G(double rho, double x1, double x2, const CouplingSpec& spec);
double eval_g(double x1, double x2, const CouplingSpec& spec);

/// (I + tau dF*)^{-1}(v), with F*(a) = sup_{rho >= 0} (a rho - F(rho)).
double prox_F_star(double v, double tau, double t, double x1, double x2, const CouplingSpec& spec);

/// Pointwise resolvent of d_b G*, G*(b) = sum G*(x, b dt)/dt: projection onto b <= g(x)/dt.
double prox_G_star(double v, double tau, double x1, double x2, const CouplingSpec& spec, double dt);

/// g sampled at the grid nodes, row-major n_h x n_h.
std::vector<double> sample_terminal_cost(const CouplingSpec& spec, const GridSpec& grid);

}  // namespace mfg
