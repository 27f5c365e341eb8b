#include "mfg/resolvent.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <sstream>

#include "mfg/errors.hpp"

namespace mfg {

Vec4 project_cone_K(const Vec4& z) {
  return {std::max(z[0], 0.0), std::min(z[1], 0.0), std::max(z[2], 0.0), std::min(z[3], 0.0)};
}

double solve_w_shrink(double m, double c, double sigma, double beta_prime) {
  if (m <= 0.0) return 0.0;
  if (c <= 0.0) return m;
  const double p = beta_prime - 1.0;
  const double sc = sigma * c;
  if (p == 1.0) return m / (1.0 + sc);

  // g(s) = s + sc s^p - m is increasing; start right of the root.
  double lo = 0.0;
  double hi = std::min(m, std::pow(m / sc, 1.0 / p));
  double s = hi;
  const double tol = 1e-13 * std::max(1.0, m);
  double best = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 200; ++it) {
    const double sp = std::pow(s, p - 1.0);
    const double g = s + sc * sp * s - m;
    best = std::min(best, std::abs(g));
    if (std::abs(g) <= tol) return s;
    if (g > 0.0) {
      hi = s;
    } else {
      lo = s;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) return s;
    const double d = 1.0 + sc * p * sp;
    double next = s - g / d;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    s = next;
  }
  throw NonConvergence("w-shrink solve did not converge", best);
}

namespace {

double problem_scale(const PointResolventProblem& pb) {
  double s = std::max(1.0, std::abs(pb.y_rho));
  for (double v : pb.y_w) s = std::max(s, std::abs(v));
  return s;
}

double terminal_term(const PointResolventProblem& pb, const CouplingSpec& spec) {
  if (pb.role != SliceRole::kTerminal) return 0.0;
  return spec.terminal.g(pb.x1, pb.x2) / pb.dt;
}

bool has_f(const PointResolventProblem& pb) { return pb.role != SliceRole::kNone; }

double f_slope(const CouplingSpec& spec) {
  return spec.f_kind == CouplingKind::kLinear ? spec.f_scale : 0.0;
}

// (eta + eps)^(alpha (beta' - 1)), avoiding pow in the common alpha = 1, beta = 2 case.
double dual_weight(double base, const CongestionParams& params) {
  const double a = params.dual_exponent();
  if (a == 1.0) return base;
  if (base == 0.0) return 0.0;
  return std::pow(base, a);
}

double inv_rho_power(double rho, double beta_prime) {
  return beta_prime == 2.0 ? 1.0 / rho : std::pow(rho, 1.0 - beta_prime);
}

// Scalar reduction of the resolvent: for a candidate rho, the w-block is solved in closed
// form along the projected direction and Phi(rho) is the remaining density equation.
class DensityEquation {
 public:
  DensityEquation(const PointResolventProblem& pb, const CongestionParams& params,
                  const CouplingSpec& spec, double m)
      : pb_(pb), params_(params), m_(m),
        shift_(pb.sigma * terminal_term(pb, spec) - pb.y_rho),
        f_slope_(has_f(pb) ? f_slope(spec) : 0.0) {}

  struct Value {
    double phi;
    double dphi;
    double s;
  };

  Value operator()(double rho) const {
    const double bp = params_.beta_prime();
    const bool substitute = pb_.eta_coupling == EtaCoupling::kSubstitute;
    const double base = (substitute ? rho : pb_.eta) + params_.epsilon();
    const double c = dual_weight(base, params_) * inv_rho_power(rho, bp);
    const double s = solve_w_shrink(m_, c, pb_.sigma, bp);
    const double beta = params_.beta();
    const double sm = s * (m_ - s);
    const double phi = rho - sm / (beta * rho) + pb_.sigma * f_slope_ * rho + shift_;

    double ds = 0.0;
    if (m_ > 0.0 && s > 0.0) {
      const double log_c_slope =
          (substitute && base > 0.0 ? params_.dual_exponent() / base : 0.0) - (bp - 1.0) / rho;
      const double denom = s + (bp - 1.0) * (m_ - s);
      if (denom > 0.0) ds = -(m_ - s) * log_c_slope * s / denom;
    }
    const double d_term = (ds * (m_ - 2.0 * s) * rho - sm) / (beta * rho * rho);
    return {phi, 1.0 - d_term + pb_.sigma * f_slope_, s};
  }

 private:
  const PointResolventProblem& pb_;
  const CongestionParams& params_;
  double m_;
  double shift_;
  double f_slope_;
};

Vec4 scaled_direction(const Vec4& p, double m, double s) {
  if (m <= 0.0 || s <= 0.0) return {0.0, 0.0, 0.0, 0.0};
  const double r = s / m;
  return {p[0] * r, p[1] * r, p[2] * r, p[3] * r};
}

}  // namespace

double point_inclusion_residual(const PointResolventProblem& pb, double rho, const Vec4& w,
                                const CongestionParams& params, const CouplingSpec& spec) {
  constexpr double kInf = std::numeric_limits<double>::infinity();
  const double scale = problem_scale(pb);
  const double sigma = pb.sigma;
  const double v_rho = (pb.y_rho - rho) / sigma;
  Vec4 v_w;
  for (int c = 0; c < 4; ++c) v_w[c] = (pb.y_w[c] - w[c]) / sigma;
  const double g_term = terminal_term(pb, spec);
  const double w2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2] + w[3] * w[3];
  const double eta = pb.eta_coupling == EtaCoupling::kSubstitute ? rho : pb.eta;
  const double base = eta + params.epsilon();

  if (rho == 0.0 && w2 == 0.0) {
    // (mu, -q) with mu + H_h(q, eta) <= 0.
    const double f0 = has_f(pb) ? eval_f(0.0, pb.t, pb.x1, pb.x2, spec) : 0.0;
    const double mu = v_rho - f0 - g_term;
    const StaggeredGradient q{-v_w[0], -v_w[1], -v_w[2], -v_w[3]};
    const Vec4 qt = upwind_parts(q);
    const double r2 = qt[0] * qt[0] + qt[1] * qt[1] + qt[2] * qt[2] + qt[3] * qt[3];
    double h = 0.0;
    if (r2 > 0.0) {
      if (!(base > 0.0)) return kInf;
      h = eval_H_h(q, eta, params).value;
    }
    return std::max(0.0, mu + h) * sigma / scale;
  }
  if (!(rho > 0.0) || !in_cone_K(w)) return kInf;

  const double bp = params.beta_prime();
  const double weight = dual_weight(base, params);
  const double norm_w = std::sqrt(w2);
  const double grad_scale =
      norm_w > 0.0 ? weight * std::pow(norm_w, bp - 2.0) * inv_rho_power(rho, bp) / 1.0 : 0.0;
  double worst = 0.0;
  for (int c = 0; c < 4; ++c) {
    if (w[c] != 0.0) {
      worst = std::max(worst, std::abs(v_w[c] - grad_scale * w[c] / 1.0));
    } else {
      // normal cone of R+ (c = 0, 2) is R-, of R- (c = 1, 3) is R+
      const double viol = (c % 2 == 0) ? std::max(0.0, v_w[c]) : std::max(0.0, -v_w[c]);
      worst = std::max(worst, viol);
    }
  }
  const double d_rho = -weight * std::pow(norm_w, bp) * std::pow(rho, -bp) / params.beta() +
                       (has_f(pb) ? eval_f(rho, pb.t, pb.x1, pb.x2, spec) : 0.0) + g_term;
  worst = std::max(worst, std::abs(v_rho - d_rho));
  return worst * sigma / scale;
}

PointResolventSolution solve_point_resolvent(const PointResolventProblem& pb,
                                             const CongestionParams& params,
                                             const CouplingSpec& spec, double tolerance) {
  const Vec4 p = project_cone_K(pb.y_w);
  const double m = std::sqrt(p[0] * p[0] + p[1] * p[1] + p[2] * p[2] + p[3] * p[3]);
  const DensityEquation phi(pb, params, spec, m);
  const double scale = problem_scale(pb);
  const double target = 0.25 * tolerance * scale;

  constexpr double kRhoMin = 1e-14;
  const double rhs = std::max(pb.y_rho - pb.sigma * terminal_term(pb, spec), 0.0);
  double hi = rhs + m / std::sqrt(params.beta()) + 1.0;
  // Phi(hi) > 0 holds whenever f >= 0; doubling covers the remaining cases.
  DensityEquation::Value at_hi = phi(hi);
  for (int it = 0; at_hi.phi <= 0.0 && it < 200; ++it) {
    hi *= 2.0;
    at_hi = phi(hi);
  }

  double lo = kRhoMin;
  DensityEquation::Value at_lo = phi(lo);
  PointResolventSolution zero;
  zero.branch = Branch::kZero;
  if (at_lo.phi >= 0.0) {
    zero.residual = point_inclusion_residual(pb, 0.0, Vec4{}, params, spec);
    // With no congestion offset the vacuum branch can be infeasible while the
    // positive root sits far below kRhoMin.
    while (!(zero.residual <= tolerance) && at_lo.phi >= 0.0 && lo > 1e-280) {
      lo *= 1e-4;
      at_lo = phi(lo);
    }
  }
  if (at_lo.phi >= 0.0) {
    PointResolventSolution edge;
    edge.branch = Branch::kPositive;
    edge.rho = lo;
    edge.w = scaled_direction(p, m, at_lo.s);
    edge.residual = point_inclusion_residual(pb, edge.rho, edge.w, params, spec);
    PointResolventSolution best = edge.residual < zero.residual ? edge : zero;
    if (!(best.residual <= tolerance)) {
      throw NonConvergence("point resolvent: no branch meets the tolerance", best.residual);
    }
    return best;
  }

  double x = std::clamp(rhs, lo, hi);
  if (x <= lo || x >= hi) x = std::sqrt(lo * hi);
  DensityEquation::Value ev = phi(x);
  for (int it = 0; it < 300; ++it) {
    if (std::abs(ev.phi) <= target) break;
    if (ev.phi < 0.0) {
      lo = x;
    } else {
      hi = x;
    }
    if (hi - lo <= 4.0 * std::numeric_limits<double>::epsilon() * hi) break;
    double next = x - ev.phi / ev.dphi;
    if (!(ev.dphi > 0.0) || !(next > lo && next < hi)) {
      next = hi > 1e3 * lo ? std::sqrt(lo * hi) : 0.5 * (lo + hi);
    }
    x = next;
    ev = phi(x);
  }

  PointResolventSolution sol;
  sol.branch = Branch::kPositive;
  sol.rho = x;
  sol.w = scaled_direction(p, m, ev.s);
  sol.residual = point_inclusion_residual(pb, sol.rho, sol.w, params, spec);
  if (!(sol.residual <= tolerance)) {
    throw NonConvergence("point resolvent: density equation did not converge", sol.residual);
  }
  return sol;
}

ResolventContext::ResolventContext(const GridSpec& g, const CongestionParams& p,
                                   const CouplingSpec& s, std::vector<double> r0, bool couplings)
    : grid(g), params(p), spec(s), rho0(std::move(r0)),
      terminal_g(sample_terminal_cost(s, g)), include_couplings(couplings) {
  if (rho0.size() != grid.slice_size()) throw InvalidGrid("rho0 does not match the grid");
}

void apply_resolvent(const DensityField& y_rho, const FluxField& y_w, double sigma,
                     const ResolventContext& ctx, DensityField& rho, FluxField& w,
                     ResolventStats* stats) {
  const GridSpec& grid = ctx.grid;
  const int n = grid.n_h();
  const int nt = grid.n_t();
  std::copy(ctx.rho0.begin(), ctx.rho0.end(), rho.slice(0).begin());

  // g/dt is folded in through a zero-cost terminal cost; the node's g is read from the
  // cached samples so the coupling's std::function is not called per node.
  CouplingSpec local = ctx.spec;
  std::size_t zero_nodes = 0;
  double max_res = 0.0;
  std::exception_ptr failure;

#pragma omp parallel for schedule(static) reduction(+ : zero_nodes) reduction(max : max_res) \
    firstprivate(local)
  for (int k = 0; k < nt; ++k) {
    const bool terminal = ctx.include_couplings && k + 1 == nt;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t node = grid.idx(i, j);
        PointResolventProblem pb;
        pb.y_rho = y_rho(k + 1, i, j);
        for (int c = 0; c < 4; ++c) pb.y_w[c] = y_w(k, i, j, c);
        pb.sigma = sigma;
        pb.role = !ctx.include_couplings ? SliceRole::kNone
                                         : (terminal ? SliceRole::kTerminal : SliceRole::kInterior);
        pb.t = grid.t(k);
        pb.x1 = grid.x1(i);
        pb.x2 = grid.x2(j);
        pb.dt = grid.dt();
        if (terminal) {
          const double gv = ctx.terminal_g[node];
          local.terminal.g = [gv](double, double) { return gv; };
        }
        try {
          const PointResolventSolution sol = solve_point_resolvent(pb, ctx.params, local);
          rho(k + 1, i, j) = sol.rho;
          for (int c = 0; c < 4; ++c) w(k, i, j, c) = sol.w[c];
          if (sol.branch == Branch::kZero) ++zero_nodes;
          max_res = std::max(max_res, sol.residual);
        } catch (const NonConvergence& e) {
          std::ostringstream msg;
          msg << e.what() << " at node (k+1=" << k + 1 << ", i=" << i << ", j=" << j << ")";
#pragma omp critical
          if (!failure) failure = std::make_exception_ptr(NonConvergence(msg.str(), e.best_residual()));
        }
      }
    }
  }
  if (failure) std::rethrow_exception(failure);
  if (stats) {
    stats->zero_branch_nodes = zero_nodes;
    stats->max_residual = max_res;
  }
}

ResolventResult apply_resolvent_K(const DensityField& y_rho, const FluxField& y_w, double sigma,
                                  const GridSpec& grid, const CongestionParams& params,
                                  const CouplingSpec& spec, std::span<const double> rho0) {
  const ResolventContext ctx(grid, params, spec, {rho0.begin(), rho0.end()}, true);
  ResolventResult out{make_density(grid), make_flux(grid), {}};
  apply_resolvent(y_rho, y_w, sigma, ctx, out.rho, out.w, &out.stats);
  return out;
}

ResolventResult apply_resolvent_K_tilde(const DensityField& y_rho, const FluxField& y_w,
                                        double sigma, const GridSpec& grid,
                                        const CongestionParams& params,
                                        std::span<const double> rho0) {
  const ResolventContext ctx(grid, params, CouplingSpec{}, {rho0.begin(), rho0.end()}, false);
  ResolventResult out{make_density(grid), make_flux(grid), {}};
  apply_resolvent(y_rho, y_w, sigma, ctx, out.rho, out.w, &out.stats);
  return out;
}

ExtendedReal eval_J(const DensityField& rho, const FluxField& w, const DensityField& eta,
                    const GridSpec& grid, const CongestionParams& params, const CouplingSpec& spec,
                    std::span<const double> rho0) {
  auto r0 = rho.slice(0);
  if (!std::equal(r0.begin(), r0.end(), rho0.begin(), rho0.end())) return ExtendedReal::infinity();
  const int n = grid.n_h();
  const int nt = grid.n_t();
  ExtendedReal total = 0.0;
  for (int k = 0; k < nt; ++k) {
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const Vec4 wk{w(k, i, j, 0), w(k, i, j, 1), w(k, i, j, 2), w(k, i, j, 3)};
        total += eval_E_h(rho(k + 1, i, j), wk, eta(k + 1, i, j), params);
        total += eval_F(rho(k + 1, i, j), grid.t(k), grid.x1(i), grid.x2(j), spec);
      }
    }
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      total += (1.0 / grid.dt()) * eval_G(rho(nt, i, j), grid.x1(i), grid.x2(j), spec);
    }
  }
  return total;
}

}  // namespace mfg
