#include "mfg/solver.hpp"

#include <chrono>
#include <cmath>
#include <random>
#include <sstream>

#include "mfg/operators.hpp"
#include "mfg/preconditioner.hpp"

namespace mfg {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kBasic: return "basic";
    case Variant::kPreconditioned: return "preconditioned";
    case Variant::kSplit: return "split";
    case Variant::kSplitPreconditioned: return "split_preconditioned";
  }
  return "unknown";
}

Variant parse_variant(const std::string& name) {
  if (name == "basic") return Variant::kBasic;
  if (name == "preconditioned") return Variant::kPreconditioned;
  if (name == "split") return Variant::kSplit;
  if (name == "split_preconditioned") return Variant::kSplitPreconditioned;
  throw ConfigError("solver.variant", "unknown variant '" + name + "'");
}

bool is_preconditioned(Variant v) {
  return v == Variant::kPreconditioned || v == Variant::kSplitPreconditioned;
}

bool is_split(Variant v) { return v == Variant::kSplit || v == Variant::kSplitPreconditioned; }

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

double scaled_l2(std::span<const double> v, const GridSpec& grid) {
  return std::sqrt(grid.h() * grid.h() * grid.dt()) * norm2(v);
}

// Density-side part of the split operator: slice 0 gets nothing, slice k gets a^{k-1},
// slice N_T additionally gets b.
void add_dual_shift(const ValueField& a, std::span<const double> b, double scale,
                    DensityField& rho) {
  const int nt = a.slices();
  for (int k = 0; k < nt; ++k) {
    auto dst = rho.slice(k + 1);
    auto src = a.slice(k);
    for (std::size_t q = 0; q < dst.size(); ++q) dst[q] += scale * src[q];
  }
  auto last = rho.slice(nt);
  for (std::size_t q = 0; q < last.size(); ++q) last[q] += scale * b[q];
}

void check_step_sizes(double tau, double sigma, double norm_sq, const std::string& what) {
  if (!(tau > 0.0) || !(sigma > 0.0)) throw StepSizeViolation("tau and sigma must be positive");
  if (!(tau * sigma * norm_sq < 1.0)) {
    std::ostringstream msg;
    msg << "tau * sigma = " << tau * sigma << " violates tau * sigma * " << what << " < 1 with "
        << what << " = " << norm_sq;
    throw StepSizeViolation(msg.str());
  }
}

}  // namespace

double compute_continuity_residual(const SolverState& state, const GridSpec& grid) {
  return scaled_l2(continuity_residual(state.rho, state.w, grid).values(), grid);
}

HjbResidual compute_hjb_residual(const SolverState& state, const GridSpec& grid,
                                 const CongestionParams& params, const CouplingSpec& coupling) {
  const int n = grid.n_h();
  const int nt = grid.n_t();
  const double dt = grid.dt();
  const std::vector<double> g = sample_terminal_cost(coupling, grid);
  HjbResidual out;
  double sum = 0.0;
  for (int k = 0; k < nt; ++k) {
    const auto phi_k = state.phi.slice(k);
    const std::vector<double> lap = apply_laplacian(phi_k, grid);
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < n; ++j) {
        const std::size_t node = grid.idx(i, j);
        const double eta = state.rho(k + 1, i, j);
        if (!(eta + params.epsilon() > 0.0)) {
          ++out.vacuum_nodes;
          continue;
        }
        const double next = k + 1 < nt ? state.phi(k + 1, i, j) : g[node];
        const double h_val = eval_H_h(staggered_gradient_at(phi_k, grid, i, j), eta, params).value;
        const double r = -(next - phi_k[node]) / dt - grid.nu() * lap[node] + h_val -
                         eval_f(eta, grid.t(k), grid.x1(i), grid.x2(j), coupling);
        sum += r * r;
      }
    }
  }
  out.value = std::sqrt(grid.h() * grid.h() * dt * sum);
  return out;
}

double mass_error(const SolverState& state, const GridSpec& grid) {
  const double h2 = grid.h() * grid.h();
  double worst = 0.0;
  for (int k = 0; k < state.rho.slices(); ++k) {
    double s = 0.0;
    for (double v : state.rho.slice(k)) s += v;
    worst = std::max(worst, std::abs(h2 * s - 1.0));
  }
  return worst;
}

double estimate_norm_C_tilde(const GridSpec& grid, int iterations, std::uint64_t seed) {
  if (iterations < 10) throw std::invalid_argument("estimate_norm_C_tilde: iterations must be >= 10");
  const std::size_t ns = grid.slice_size();
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ValueField a = make_value(grid);
  ValueField phi = make_value(grid);
  std::vector<double> b(ns);
  for (double& v : a.values()) v = normal(rng);
  for (double& v : phi.values()) v = normal(rng);
  for (double& v : b) v = normal(rng);

  auto normalize = [&]() {
    const double s = std::sqrt(dot(a.values(), a.values()) + dot(b, b) +
                               dot(phi.values(), phi.values()));
    for (double& v : a.values()) v /= s;
    for (double& v : phi.values()) v /= s;
    for (double& v : b) v /= s;
    return s;
  };
  normalize();
  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    DensityField rho = apply_A_star(phi, grid);
    add_dual_shift(a, b, -1.0, rho);
    const FluxField w = apply_B_star(phi, grid);
    // adjoint: (-rho^{-0}, -rho^{N_T}, A rho + B w)
    ValueField na = make_value(grid);
    for (int k = 0; k < grid.n_t(); ++k) {
      auto dst = na.slice(k);
      auto src = rho.slice(k + 1);
      for (std::size_t q = 0; q < ns; ++q) dst[q] = -src[q];
    }
    std::vector<double> nb(ns);
    auto last = rho.slice(grid.n_t());
    for (std::size_t q = 0; q < ns; ++q) nb[q] = -last[q];
    ValueField nphi = continuity_residual(rho, w, grid);
    lambda = dot(a.values(), na.values()) + dot(b, nb) + dot(phi.values(), nphi.values());
    a = std::move(na);
    b = std::move(nb);
    phi = std::move(nphi);
    if (normalize() == 0.0) return 0.0;
  }
  return lambda;
}

RunResult run(const SolverConfig& config, const Problem& problem) {
  const GridSpec& grid = problem.grid;
  const auto t_setup = Clock::now();
  if (problem.rho0.size() != grid.slice_size()) throw InvalidGrid("rho0 does not match the grid");
  if (config.max_iter <= 0) throw ConfigError("solver.max_iter", "must be positive");
  if (!(config.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
  if (config.check_every <= 0) throw ConfigError("solver.check_every", "must be positive");

  const Variant variant = config.variant;
  const bool split = is_split(variant);
  const bool precond = is_preconditioned(variant);

  auto result = std::make_shared<RunResult>();
  RunDiagnostics& diag = result->diagnostics;
  double tau = config.tau;
  double sigma = config.sigma;
  std::optional<SpectralPreconditioner> pc;
  if (precond) {
    pc.emplace(build_preconditioner(grid));
    if (config.step_rule == StepRule::kAuto) tau = sigma = 0.5;
    check_step_sizes(tau, sigma, split ? kSplitStarNormBound : 1.0,
                     split ? "||C~||_star^2 bound" : "||C||_star^2");
  } else {
    diag.norm_C_squared = split ? estimate_norm_C_tilde(grid, config.norm_iterations, config.seed)
                                : estimate_norm_C(grid, config.norm_iterations, config.seed);
    if (config.step_rule == StepRule::kAuto) tau = sigma = 0.999 / std::sqrt(diag.norm_C_squared);
    check_step_sizes(tau, sigma, diag.norm_C_squared, split ? "||C~||^2" : "||C||^2");
  }
  diag.tau = tau;
  diag.sigma = sigma;

  SolverState& st = result->state;
  st.phi = make_value(grid);
  st.rho = make_density(grid);
  st.w = make_flux(grid);
  for (int k = 0; k <= grid.n_t(); ++k) {
    std::copy(problem.rho0.begin(), problem.rho0.end(), st.rho.slice(k).begin());
  }
  if (split) {
    st.dual_a = make_value(grid);
    st.dual_b.assign(grid.slice_size(), 0.0);
  }
  const ResolventContext ctx(grid, problem.params, problem.coupling, problem.rho0, !split);
  const std::vector<double> g = sample_terminal_cost(problem.coupling, grid);
  for (double t : config.record_tolerances) diag.first_hits.emplace_back(t, std::nullopt);

  const auto t_iter = Clock::now();
  diag.setup_seconds = std::chrono::duration<double>(t_iter - t_setup).count();

  auto record = [&](double err) {
    DiagnosticsRecord r;
    r.iter = st.iter;
    r.err_continuity = err;
    const HjbResidual hjb = compute_hjb_residual(st, grid, problem.params, problem.coupling);
    r.err_hjb = hjb.value;
    diag.hjb_vacuum_nodes = hjb.vacuum_nodes;
    r.mass_error = mass_error(st, grid);
    r.wall_seconds = seconds_since(t_iter);
    if (!diag.records.empty() && st.iter > 20 && err > diag.records.back().err_continuity) {
      ++diag.err_increases;
    }
    diag.records.push_back(r);
  };

  ValueField resid = continuity_residual(st.rho, st.w, grid);
  double err = scaled_l2(resid.values(), grid);
  record(err);

  const int n = grid.n_h();
  const int nt = grid.n_t();
  ValueField step = make_value(grid);
  ValueField phi_bar = make_value(grid);
  DensityField y_rho = make_density(grid);
  FluxField y_w = make_flux(grid);
  ResolventStats stats;
  ValueField a_bar;
  std::vector<double> b_bar;

  while (st.iter < config.max_iter) {
    if (precond) {
      pc->apply_inverse(resid, step);
    } else {
      step = resid;
    }
    for (std::size_t q = 0; q < step.size(); ++q) {
      const double next = st.phi.values()[q] - tau * step.values()[q];
      phi_bar.values()[q] = 2.0 * next - st.phi.values()[q];
      st.phi.values()[q] = next;
    }

    apply_A_star(phi_bar, grid, y_rho);
    apply_B_star(phi_bar, grid, y_w);

    if (split) {
      a_bar = make_value(grid);
      b_bar.assign(grid.slice_size(), 0.0);
      for (int k = 0; k < nt; ++k) {
        for (int i = 0; i < n; ++i) {
          for (int j = 0; j < n; ++j) {
            const double old = st.dual_a(k, i, j);
            const double next = prox_F_star(old + tau * st.rho(k + 1, i, j), tau, grid.t(k),
                                            grid.x1(i), grid.x2(j), problem.coupling);
            st.dual_a(k, i, j) = next;
            a_bar(k, i, j) = 2.0 * next - old;
          }
        }
      }
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
          const std::size_t node = grid.idx(i, j);
          const double old = st.dual_b[node];
          const double next = std::min(old + tau * st.rho(nt, i, j), g[node] / grid.dt());
          st.dual_b[node] = next;
          b_bar[node] = 2.0 * next - old;
        }
      }
      add_dual_shift(a_bar, b_bar, -1.0, y_rho);
    }

    for (std::size_t q = 0; q < y_rho.size(); ++q) {
      y_rho.values()[q] = st.rho.values()[q] + sigma * y_rho.values()[q];
    }
    for (std::size_t q = 0; q < y_w.size(); ++q) {
      y_w.values()[q] = st.w.values()[q] + sigma * y_w.values()[q];
    }
    apply_resolvent(y_rho, y_w, sigma, ctx, st.rho, st.w, &stats);
    ++st.iter;

    continuity_residual(st.rho, st.w, grid).values().swap(resid.values());
    err = scaled_l2(resid.values(), grid);
    for (auto& [thr, hit] : diag.first_hits) {
      if (!hit && err < thr) hit = st.iter;
    }
    const bool done = err < config.tol;
    if (done || st.iter % config.check_every == 0 || st.iter == config.max_iter) record(err);
    if (done) {
      diag.converged = true;
      break;
    }
  }
  diag.zero_branch_nodes = stats.zero_branch_nodes;
  diag.wall_seconds = seconds_since(t_iter);

  if (!diag.converged && config.throw_on_max_iter) {
    std::ostringstream msg;
    msg << to_string(variant) << ": Err = " << err << " after " << st.iter
        << " iterations, target " << config.tol;
    throw MaxIterationsReached(msg.str(), err, result);
  }
  return std::move(*result);
}

}  // namespace mfg
