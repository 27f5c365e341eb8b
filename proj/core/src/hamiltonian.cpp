#include "mfg/hamiltonian.hpp"

#include <cmath>
#include <sstream>

#include "mfg/errors.hpp"

namespace mfg {

CongestionParams::CongestionParams(double alpha, double beta, double epsilon, bool force)
    : alpha_(alpha), beta_(beta), epsilon_(epsilon) {
  if (!(beta > 1.0) || !std::isfinite(beta)) throw ParameterOutOfRange("beta must exceed 1");
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw ParameterOutOfRange("alpha must be positive");
  if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) {
    throw ParameterOutOfRange("epsilon must be nonnegative");
  }
  beta_prime_ = beta / (beta - 1.0);
  const bool admissible = beta <= 2.0 && alpha <= alpha_bound(beta);
  if (!admissible) {
    if (!force) {
      std::ostringstream msg;
      msg << "congestion parameters outside 1 < beta <= 2, 0 < alpha <= 4(beta-1)/beta (alpha="
          << alpha << ", beta=" << beta << ")";
      throw ParameterOutOfRange(msg.str());
    }
    outside_theory_ = true;
  }
}

namespace {

double squared_norm(const Vec4& v) { return v[0] * v[0] + v[1] * v[1] + v[2] * v[2] + v[3] * v[3]; }

}  // namespace

namespace detail {

HamiltonianPoint eval_H_h(const StaggeredGradient& q, double eta, const CongestionParams& params,
                          bool fast_path) {
  const double base = eta + params.epsilon();
  if (!(base > 0.0)) throw DegenerateDensity("eta + epsilon must be positive in H_h");
  const Vec4 qt = upwind_parts(q);
  const double r2 = squared_norm(qt);
  HamiltonianPoint out;
  if (r2 == 0.0) return out;

  const double inv_denom = params.alpha() == 1.0 ? 1.0 / base : std::pow(base, -params.alpha());
  double scale;  // |q~|^(beta-2) / (eta+eps)^alpha
  if (fast_path) {
    out.value = 0.5 * r2 * inv_denom;
    scale = inv_denom;
  } else {
    const double beta = params.beta();
    const double r_beta = std::pow(r2, 0.5 * beta);
    out.value = r_beta * inv_denom / beta;
    scale = r_beta / r2 * inv_denom;
  }
  for (int c = 0; c < 4; ++c) out.grad_q[c] = scale * qt[c];
  return out;
}

ExtendedReal eval_L_h(const Vec4& v, double eta, const CongestionParams& params, bool fast_path) {
  if (!in_cone_K(v)) return ExtendedReal::infinity();
  const double base = eta + params.epsilon();
  const double r2 = squared_norm(v);
  if (fast_path) {
    return std::pow(base, params.alpha()) * 0.5 * r2;
  }
  const double bp = params.beta_prime();
  return std::pow(base, params.dual_exponent()) * std::pow(r2, 0.5 * bp) / bp;
}

ExtendedReal eval_E_h(double rho, const Vec4& w, double eta, const CongestionParams& params,
                      bool fast_path) {
  const double r2 = squared_norm(w);
  if (rho == 0.0 && r2 == 0.0) return 0.0;
  if (!(rho > 0.0) || !in_cone_K(w)) return ExtendedReal::infinity();
  const double base = eta + params.epsilon();
  if (fast_path) {
    return std::pow(base, params.alpha()) * r2 / (2.0 * rho);
  }
  const double bp = params.beta_prime();
  return std::pow(base, params.dual_exponent()) * std::pow(r2, 0.5 * bp) /
         (bp * std::pow(rho, bp - 1.0));
}

}  // namespace detail

HamiltonianPoint eval_H_h(const StaggeredGradient& q, double eta, const CongestionParams& params) {
  return detail::eval_H_h(q, eta, params, params.quadratic());
}

ExtendedReal eval_L_h(const Vec4& v, double eta, const CongestionParams& params) {
  return detail::eval_L_h(v, eta, params, params.quadratic());
}

ExtendedReal eval_E_h(double rho, const Vec4& w, double eta, const CongestionParams& params) {
  return detail::eval_E_h(rho, w, eta, params, params.quadratic());
}

HamiltonianPoint CongestionHamiltonian::eval(const StaggeredGradient& q, double eta) const {
  return eval_H_h(q, eta, params_);
}

double eval_H(double q1, double q2, double eta, const CongestionParams& params) {
  const double base = eta + params.epsilon();
  if (!(base > 0.0)) throw DegenerateDensity("eta + epsilon must be positive in H");
  const double n = std::hypot(q1, q2);
  return std::pow(n, params.beta()) / (params.beta() * std::pow(base, params.alpha()));
}

ExtendedReal CongestionHamiltonian::legendre(const Vec4& v, double eta) const {
  return eval_L_h(v, eta, params_);
}

ExtendedReal CongestionHamiltonian::perspective(double rho, const Vec4& w, double eta) const {
  return eval_E_h(rho, w, eta, params_);
}

double check_lasry_lions_pair(const DensityGradientPair& p1, const DensityGradientPair& p2,
                              const CongestionParams& params) {
  const HamiltonianPoint h1 = eval_H_h(p1.q, p1.rho, params);
  const HamiltonianPoint h2 = eval_H_h(p2.q, p2.rho, params);
  double pairing = (h1.value - h2.value) * (p2.rho - p1.rho);
  for (int c = 0; c < 4; ++c) {
    pairing += (p2.rho * h2.grad_q[c] - p1.rho * h1.grad_q[c]) * (p2.q[c] - p1.q[c]);
  }
  return pairing;
}

}  // namespace mfg
