#include "mfg/couplings.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "mfg/errors.hpp"

namespace mfg {

TerminalCost two_wells_terminal_cost() {
  return {"two_wells", [](double x1, double x2) {
            const double a = std::sin(std::numbers::pi * (x1 - 0.5));
            const double b = std::sin(2.0 * std::numbers::pi * (x2 - 0.25));
            return 0.1 * a * a + 0.1 * b * b;
          }};
}

TerminalCost zero_terminal_cost() {
  return {"zero", [](double, double) { return 0.0; }};
}

TerminalCost terminal_cost_preset(const std::string& id) {
  if (id == "two_wells") return two_wells_terminal_cost();
  if (id == "zero") return zero_terminal_cost();
  throw ConfigError("coupling.terminal", "unknown terminal cost preset '" + id + "'");
}

ExtendedReal eval_F(double rho, double, double, double, const CouplingSpec& spec) {
  if (rho < 0.0) return ExtendedReal::infinity();
  if (spec.f_kind == CouplingKind::kZero) return 0.0;
  return 0.5 * spec.f_scale * rho * rho;
}

double eval_f(double rho, double, double, double, const CouplingSpec& spec) {
  return spec.f_kind == CouplingKind::kZero ? 0.0 : spec.f_scale * rho;
}

ExtendedReal eval_G(double rho, double x1, double x2, const CouplingSpec& spec) {
  if (rho < 0.0) return ExtendedReal::infinity();
  return spec.terminal.g(x1, x2) * rho;
}

double eval_g(double x1, double x2, const CouplingSpec& spec) { return spec.terminal.g(x1, x2); }

double prox_F_star(double v, double tau, double, double, double, const CouplingSpec& spec) {
  // zero: F* is the indicator of a <= 0.  linear(s): F*(a) = (a^+)^2 / (2 s).
  if (spec.f_kind == CouplingKind::kZero || spec.f_scale == 0.0) return std::min(v, 0.0);
  if (v <= 0.0) return v;
  return v * spec.f_scale / (spec.f_scale + tau);
}

double prox_G_star(double v, double, double x1, double x2, const CouplingSpec& spec, double dt) {
  return std::min(v, spec.terminal.g(x1, x2) / dt);
}

std::vector<double> sample_terminal_cost(const CouplingSpec& spec, const GridSpec& grid) {
  std::vector<double> out(grid.slice_size());
  for (int i = 0; i < grid.n_h(); ++i) {
    for (int j = 0; j < grid.n_h(); ++j) out[grid.idx(i, j)] = spec.terminal.g(grid.x1(i), grid.x2(j));
  }
  return out;
}

}  // namespace mfg
