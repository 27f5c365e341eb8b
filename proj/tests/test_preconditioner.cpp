#include <cmath>
#include <complex>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "doctest.h"
#include "mfg/operators.hpp"
#include "mfg/preconditioner.hpp"
#include "oracles.hpp"

using namespace mfg;
using doctest::Approx;

namespace {

Eigen::MatrixXd dense_M(const GridSpec& g) {
  return oracle::dense_A(g) * oracle::dense_A_star(g) + oracle::dense_B(g) * oracle::dense_B_star(g);
}

Eigen::VectorXd to_vec(const ValueField& u) {
  return Eigen::Map<const Eigen::VectorXd>(u.values().data(), static_cast<Eigen::Index>(u.size()));
}

double max_abs_diff(const ValueField& a, const ValueField& b) {
  double m = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) m = std::max(m, std::abs(a.values()[q] - b.values()[q]));
  return m;
}

}  // namespace

TEST_CASE("frequency blocks match DFT-weighted columns of the dense operator") {
  const GridSpec g(4, 3, 1.0, 0.1);
  const SpectralPreconditioner pre(g);
  const Eigen::MatrixXd M = dense_M(g);
  const int n = g.n_h(), nt = g.n_t();
  const double two_pi = 2.0 * std::numbers::pi;
  for (int k1 = 0; k1 < n; ++k1) {
    for (int k2 = 0; k2 <= n / 2; ++k2) {
      const auto blk = pre.block(k1, k2);
      for (int a = 0; a < nt; ++a) {
        for (int b = 0; b < nt; ++b) {
          std::complex<double> sum = 0.0;
          for (int i = 0; i < n; ++i) {
            for (int j = 0; j < n; ++j) {
              const double ph = -two_pi * (k1 * i + k2 * j) / n;
              sum += M(a * n * n + i * n + j, b * n * n) * std::complex<double>(std::cos(ph), std::sin(ph));
            }
          }
          CHECK(blk[a * nt + b] == Approx(sum.real()).epsilon(1e-12).scale(1.0));
          CHECK(std::abs(sum.imag()) < 1e-9);
          CHECK(blk[a * nt + b] == Approx(blk[b * nt + a]).epsilon(1e-12).scale(1.0));
        }
      }
    }
  }
}

TEST_CASE("zero-frequency block with no viscosity") {
  // nu = 0: on constants A A* = 2 / dt^2 (both density slices carry phi) and B B* vanishes.
  const GridSpec g(2, 1, 1.0, 0.0);
  const SpectralPreconditioner pre(g);
  const auto blk = pre.block(0, 0);
  const Eigen::MatrixXd M = dense_M(g);
  double expected = 0.0;
  for (int q = 0; q < 4; ++q) expected += M(q, 0);
  CHECK(blk[0] == Approx(expected));
  CHECK(blk[0] == Approx(2.0 / (g.dt() * g.dt())));
}

TEST_CASE("blocks are positive definite") {
  for (double nu : {0.0, 0.1}) {
    const GridSpec g(6, 4, 1.0, nu);
    const SpectralPreconditioner pre(g);
    for (int k1 = 0; k1 < 6; ++k1) {
      for (int k2 = 0; k2 <= 3; ++k2) {
        const auto blk = pre.block(k1, k2);
        const Eigen::Map<const Eigen::Matrix<double, -1, -1, Eigen::RowMajor>> B(blk.data(), 4, 4);
        const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es{Eigen::MatrixXd(B)};
        CHECK(es.eigenvalues().minCoeff() > 0.0);
      }
    }
  }
  CHECK_NOTHROW(build_preconditioner(GridSpec(5, 3, 1.0, 0.1)));
}

TEST_CASE("inverse application matches a dense solve") {
  for (double nu : {0.0, 0.1}) {
    for (int n : {4, 5}) {
      const GridSpec g(n, 3, 1.0, nu);
      const SpectralPreconditioner pre(g);
      const Eigen::MatrixXd M = dense_M(g);
      const Eigen::LLT<Eigen::MatrixXd> llt(M);
      std::mt19937_64 rng(41 + n);
      ValueField u = make_value(g);
      oracle::randomize(u, rng);
      const ValueField x = pre.apply_inverse(u);
      const Eigen::VectorXd ref = llt.solve(to_vec(u));
      CHECK((to_vec(x) - ref).lpNorm<Eigen::Infinity>() <= 1e-10 * std::max(1.0, ref.lpNorm<Eigen::Infinity>()));
      const ValueField back = forward_CtC(x, g);
      CHECK(max_abs_diff(back, u) <= 1e-10);
    }
  }
}

TEST_CASE("inverse property on a production-size grid") {
  const GridSpec g(20, 16, 1.0, 0.1);
  const SpectralPreconditioner pre(g);
  std::mt19937_64 rng(43);
  ValueField u = make_value(g);
  oracle::randomize(u, rng);
  const ValueField x = pre.apply_inverse(u);
  const ValueField back = forward_CtC(x, g);
  double unorm = 0.0;
  for (double v : u.values()) unorm = std::max(unorm, std::abs(v));
  CHECK(max_abs_diff(back, u) <= 1e-10 * unorm);
  const ValueField y = pre.apply_inverse(forward_CtC(u, g));
  CHECK(max_abs_diff(y, u) <= 1e-9);
  const ValueField z = pre.apply_inverse(make_value(g));
  for (double v : z.values()) CHECK(v == 0.0);
  ValueField wrong = make_value(GridSpec(10, 16));
  CHECK_THROWS(pre.apply_inverse(wrong));
}

TEST_CASE("normal map identity") {
  const GridSpec g(6, 4, 1.0, 0.1);
  std::mt19937_64 rng(47);
  ValueField phi = make_value(g);
  oracle::randomize(phi, rng);
  const DensityField as = apply_A_star(phi, g);
  const FluxField bs = apply_B_star(phi, g);
  const double lhs = dot(as.values(), as.values()) + dot(bs.values(), bs.values());
  const double rhs = dot(forward_CtC(phi, g).values(), phi.values());
  CHECK(lhs == Approx(rhs).epsilon(1e-12));
}

TEST_CASE("norm estimate") {
  const double e20 = estimate_norm_C(GridSpec(20, 16, 1.0, 0.1));
  const double e40 = estimate_norm_C(GridSpec(40, 16, 1.0, 0.1));
  CHECK(e40 > e20);
  CHECK(estimate_norm_C(GridSpec(20, 16, 1.0, 0.1)) == e20);
  CHECK_THROWS(estimate_norm_C(GridSpec(4, 4), 5));

  const GridSpec g(5, 4, 1.0, 0.1);
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(dense_M(g));
  const double lmax = es.eigenvalues().maxCoeff();
  const double est = estimate_norm_C(g, 400);
  CHECK(est <= lmax * (1.0 + 1e-10));
  CHECK(est >= 0.99 * lmax);

  const GridSpec fine_t(8, 64, 1.0, 0.0);
  CHECK(std::sqrt(estimate_norm_C(fine_t)) >= 0.99 * 2.0 / fine_t.dt());
}
