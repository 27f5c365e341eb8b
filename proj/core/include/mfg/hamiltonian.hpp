#pragma once

#include <array>

#include "mfg/extended_real.hpp"
#include "mfg/operators.hpp"

namespace mfg {

using Vec4 = std::array<double, 4>;

/// Parameters of H(q, eta) = |q|^beta / (beta (eta + epsilon)^alpha).
///
/// The admissible set is 1 < beta <= 2 and 0 < alpha <= 4(beta - 1)/beta, on
/// which the upwind Hamiltonian is Lasry-Lions monotone. Construction outside
/// that set throws ParameterOutOfRange unless `force` is set, in which case
/// `outside_theory()` reports it. beta > 1, alpha > 0 and epsilon >= 0 are
/// required unconditionally.
class CongestionParams {
 public:
  CongestionParams(double alpha, double beta, double epsilon, bool force = false);

  double alpha() const { return alpha_; }
  double beta() const { return beta_; }
  double epsilon() const { return epsilon_; }
  /// beta' = beta / (beta - 1), the conjugate exponent.
  double beta_prime() const { return beta_prime_; }
  /// alpha (beta' - 1), the exponent of (eta + epsilon) in L_h and E_h.
  double dual_exponent() const { return alpha_ * (beta_prime_ - 1.0); }
  bool quadratic() const { return beta_ == 2.0; }
  bool outside_theory() const { return outside_theory_; }

  static double alpha_bound(double beta) { return 4.0 * (beta - 1.0) / beta; }

 private:
  double alpha_;
  double beta_;
  double epsilon_;
  double beta_prime_;
  bool outside_theory_ = false;
};

struct HamiltonianPoint {
  double value = 0.0;
  Vec4 grad_q{};
};

/// Pointwise Hamiltonian model. Only the congestion model ships.
class Hamiltonian {
 public:
  virtual ~Hamiltonian() = default;
  virtual HamiltonianPoint eval(const StaggeredGradient& q, double eta) const = 0;
  /// Legendre dual in the gradient variables.
  virtual ExtendedReal legendre(const Vec4& v, double eta) const = 0;
  /// Perspective function of the Legendre dual, closed at rho = 0.
  virtual ExtendedReal perspective(double rho, const Vec4& w, double eta) const = 0;
};

class CongestionHamiltonian final : public Hamiltonian {
 public:
  explicit CongestionHamiltonian(CongestionParams params) : params_(params) {}
  const CongestionParams& params() const { return params_; }

  HamiltonianPoint eval(const StaggeredGradient& q, double eta) const override;
  ExtendedReal legendre(const Vec4& v, double eta) const override;
  ExtendedReal perspective(double rho, const Vec4& w, double eta) const override;

 private:
  CongestionParams params_;
};

/// Upwind Hamiltonian and its q-gradient. Throws DegenerateDensity if eta + epsilon == 0.
HamiltonianPoint eval_H_h(const StaggeredGradient& q, double eta, const CongestionParams& params);

/// Continuous Hamiltonian at q in R^2.
double eval_H(double q1, double q2, double eta, const CongestionParams& params);

/// Closed-form Legendre dual; +infinity off the cone K = R+ x R- x R+ x R-.
ExtendedReal eval_L_h(const Vec4& v, double eta, const CongestionParams& params);

/// Closed-form perspective function of L_h.
ExtendedReal eval_E_h(double rho, const Vec4& w, double eta, const CongestionParams& params);

inline bool in_cone_K(const Vec4& v) { return v[0] >= 0 && v[1] <= 0 && v[2] >= 0 && v[3] <= 0; }

/// Signed upwind parts (-q1^-, q2^+, -q3^-, q4^+).
inline Vec4 upwind_parts(const StaggeredGradient& q) {
  return {q[0] < 0 ? q[0] : 0.0, q[1] > 0 ? q[1] : 0.0, q[2] < 0 ? q[2] : 0.0,
          q[3] > 0 ? q[3] : 0.0};
}

struct DensityGradientPair {
  double rho = 0.0;
  StaggeredGradient q{};
};

namespace detail {
// Explicit choice between the beta = 2 closed forms and the general power-law path.
HamiltonianPoint eval_H_h(const StaggeredGradient& q, double eta, const CongestionParams& params,
                          bool fast_path);
ExtendedReal eval_L_h(const Vec4& v, double eta, const CongestionParams& params, bool fast_path);
ExtendedReal eval_E_h(double rho, const Vec4& w, double eta, const CongestionParams& params,
                      bool fast_path);
}  // namespace detail

/// Monotonicity pairing of (rho, q) -> (-H_h(q, rho), rho grad_q H_h(q, rho)).
/// Nonnegative for every pair when the Lasry-Lions condition holds.
double check_lasry_lions_pair(const DensityGradientPair& p1, const DensityGradientPair& p2,
                              const CongestionParams& params);

}  // namespace mfg
