#include <cmath>
#include <random>

#include "doctest.h"
#include "mfg/errors.hpp"
#include "mfg/operators.hpp"
#include "mfg/resolvent.hpp"
#include "oracles.hpp"

using namespace mfg;
using doctest::Approx;

namespace {

double dist(double r1, const Vec4& w1, double r2, const Vec4& w2) {
  double d = (r1 - r2) * (r1 - r2);
  for (int c = 0; c < 4; ++c) d += (w1[c] - w2[c]) * (w1[c] - w2[c]);
  return std::sqrt(d);
}

PointResolventProblem random_problem(std::mt19937_64& rng) {
  std::uniform_real_distribution<double> ur(-0.5, 2.0), uw(-1.5, 1.5), us(0.1, 1.0);
  PointResolventProblem pb;
  pb.y_rho = ur(rng);
  for (double& v : pb.y_w) v = uw(rng);
  pb.sigma = us(rng);
  return pb;
}

}  // namespace

TEST_CASE("cone projection") {
  const Vec4 p = project_cone_K({-1.0, -1.0, 2.0, 3.0});
  CHECK(p == Vec4{0.0, -1.0, 2.0, 0.0});
  const Vec4 q = project_cone_K({1.0, 1.0, -2.0, -3.0});
  CHECK(q == Vec4{1.0, 0.0, 0.0, -3.0});
}

TEST_CASE("w-shrink scalar equation") {
  CHECK(solve_w_shrink(2.0, 1.0, 1.0, 2.0) == Approx(1.0));
  CHECK(solve_w_shrink(2.0, 1.0, 1.0, 3.0) == Approx(1.0));
  CHECK(solve_w_shrink(0.0, 1.0, 1.0, 3.0) == 0.0);
  CHECK(solve_w_shrink(2.0, 0.0, 1.0, 3.0) == 2.0);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> um(0.0, 5.0), uc(0.01, 50.0), ub(1.2, 4.0);
  for (int trial = 0; trial < 200; ++trial) {
    const double m = um(rng), c = uc(rng), bp = ub(rng), sigma = 0.7;
    const double s = solve_w_shrink(m, c, sigma, bp);
    double lo = 0.0, hi = m;
    for (int it = 0; it < 200; ++it) {
      const double mid = 0.5 * (lo + hi);
      (mid + sigma * c * std::pow(mid, bp - 1.0) < m ? lo : hi) = mid;
    }
    CHECK(s == Approx(0.5 * (lo + hi)).epsilon(1e-12).scale(1.0));
  }
}

TEST_CASE("point resolvent closed-form cases") {
  const CongestionParams params(1.0, 2.0, 0.1);
  const CouplingSpec zero;
  PointResolventProblem pb;
  pb.y_rho = 3.0;
  pb.sigma = 0.5;
  auto sol = solve_point_resolvent(pb, params, zero);
  CHECK(sol.branch == Branch::kPositive);
  CHECK(sol.rho == Approx(3.0).epsilon(1e-12));
  CHECK(sol.w == Vec4{0, 0, 0, 0});

  pb.y_rho = -0.4;
  pb.y_w = {0.0, 0.3, -0.2, 0.0};  // projects to zero
  sol = solve_point_resolvent(pb, params, zero);
  CHECK(sol.branch == Branch::kZero);
  CHECK(sol.rho == 0.0);
  CHECK(sol.w == Vec4{0, 0, 0, 0});

  pb.y_rho = 0.0;
  pb.y_w = {};
  sol = solve_point_resolvent(pb, params, zero);
  CHECK(sol.rho == Approx(0.0).scale(1.0).epsilon(1e-12));

  SUBCASE("terminal role subtracts sigma g / dt") {
    CouplingSpec c;
    c.terminal = two_wells_terminal_cost();
    PointResolventProblem t;
    t.y_rho = 1.0;
    t.sigma = 0.5;
    t.role = SliceRole::kTerminal;
    t.x1 = 0.0;
    t.x2 = 0.25;
    t.dt = 0.1;
    const auto s = solve_point_resolvent(t, params, c);
    CHECK(s.rho == Approx(1.0 - 0.5 * 0.1 / 0.1));
    t.role = SliceRole::kNone;
    CHECK(solve_point_resolvent(t, params, c).rho == Approx(1.0));
  }
  SUBCASE("linear f divides by 1 + sigma s") {
    CouplingSpec c;
    c.f_kind = CouplingKind::kLinear;
    c.f_scale = 2.0;
    PointResolventProblem t;
    t.y_rho = 1.5;
    t.sigma = 0.5;
    CHECK(solve_point_resolvent(t, params, c).rho == Approx(1.5 / 2.0));
  }
}

TEST_CASE("vacuum-adjacent root without congestion offset") {
  // alpha = 1, beta = 2, epsilon = 0: s = m / (1 + sigma) and rho^2 - y rho - C = 0
  // with C = sigma m^2 / (2 (1 + sigma)^2); the root lies far below 1e-14.
  const CongestionParams params(1.0, 2.0, 0.0);
  PointResolventProblem pb;
  pb.y_rho = -0.0068287738819681719;
  pb.y_w = {-1.7107706637344705e-06, 1.7107706637344705e-06, 1.2339364608218717e-08, 2.9805520009550113e-08};
  pb.sigma = 0.5;
  const auto sol = solve_point_resolvent(pb, params, CouplingSpec{});
  const double m = pb.y_w[2];
  const double c = pb.sigma * m * m / (2.0 * (1.0 + pb.sigma) * (1.0 + pb.sigma));
  const double rho = 2.0 * c / (-pb.y_rho + std::sqrt(pb.y_rho * pb.y_rho + 4.0 * c));
  CHECK(rho < 1e-14);
  CHECK(sol.branch == Branch::kPositive);
  CHECK(sol.rho == Approx(rho).epsilon(1e-6));
  CHECK(sol.w[2] == Approx(m / (1.0 + pb.sigma)).epsilon(1e-9));
  CHECK(sol.w[0] == 0.0);
  CHECK(sol.w[3] == 0.0);
}

TEST_CASE("frozen resolvent matches a grid-scan minimizer on a hand example") {
  const CongestionParams params(1.0, 2.0, 0.1);
  PointResolventProblem pb;
  pb.y_rho = 1.0;
  pb.y_w = {1.0, 0.0, 0.0, 0.0};
  pb.sigma = 0.5;
  pb.eta_coupling = EtaCoupling::kFrozen;
  pb.eta = 1.0;
  const auto sol = solve_point_resolvent(pb, params, CouplingSpec{});
  const auto scan = oracle::scan_prox_frozen(pb, 1.0, 2.0, 0.1, CouplingSpec{});
  CHECK(dist(sol.rho, sol.w, scan.rho, scan.w) < 1e-6);
  CHECK(sol.residual <= 1e-10);
}

TEST_CASE("frozen resolvent matches the scan oracle on random nodes") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> ue(0.0, 2.0);
  const std::array<std::array<double, 2>, 3> ab{{{1.0, 2.0}, {0.5, 1.5}, {0.7, 1.3}}};
  CouplingSpec lin;
  lin.f_kind = CouplingKind::kLinear;
  lin.f_scale = 0.5;
  for (int trial = 0; trial < 30; ++trial) {
    const auto [alpha, beta] = ab[trial % 3];
    const CongestionParams params(alpha, beta, 0.1);
    PointResolventProblem pb = random_problem(rng);
    pb.eta_coupling = EtaCoupling::kFrozen;
    pb.eta = ue(rng);
    const CouplingSpec& spec = trial % 2 ? lin : CouplingSpec{};
    const auto sol = solve_point_resolvent(pb, params, spec);
    const auto scan = oracle::scan_prox_frozen(pb, alpha, beta, 0.1, spec);
    CHECK(dist(sol.rho, sol.w, scan.rho, scan.w) < 1e-5);
    const double f_sol = oracle::frozen_objective(pb, sol.rho, sol.w, alpha, beta, 0.1, spec);
    const double f_scan = oracle::frozen_objective(pb, scan.rho, scan.w, alpha, beta, 0.1, spec);
    CHECK(f_sol <= f_scan + 1e-10);
  }
}

TEST_CASE("substituted resolvent is the fixed point of the frozen resolvent") {
  std::mt19937_64 rng(23);
  const CongestionParams params(1.0, 2.0, 0.1);
  int positive = 0;
  for (int trial = 0; trial < 100; ++trial) {
    const PointResolventProblem pb = random_problem(rng);
    const auto sol = solve_point_resolvent(pb, params, CouplingSpec{});
    const auto fp = oracle::eta_fixed_point(pb, params, CouplingSpec{});
    CHECK(dist(sol.rho, sol.w, fp.rho, fp.w) < 1e-6);
    CHECK(sol.residual <= 1e-10);
    CHECK(point_inclusion_residual(pb, sol.rho, sol.w, params, CouplingSpec{}) <= 1e-10);
    if (sol.branch == Branch::kPositive) ++positive;
  }
  CHECK(positive > 20);
}

TEST_CASE("substituted resolvent differs from the fully substituted prox") {
  const CongestionParams params(1.0, 2.0, 0.1);
  PointResolventProblem pb;
  pb.y_rho = 1.0;
  pb.y_w = {1.0, 0.0, 0.0, 0.0};
  pb.sigma = 0.5;
  const auto sol = solve_point_resolvent(pb, params, CouplingSpec{});
  const auto full = oracle::scan_prox_frozen(pb, 1.0, 2.0, 0.1, CouplingSpec{}, true);
  CHECK(dist(sol.rho, sol.w, full.rho, full.w) > 1e-3);
}

TEST_CASE("frozen resolvent is firmly nonexpansive") {
  std::mt19937_64 rng(29);
  const CongestionParams params(1.0, 1.5, 0.1);
  for (int trial = 0; trial < 200; ++trial) {
    PointResolventProblem a = random_problem(rng);
    PointResolventProblem b = random_problem(rng);
    b.sigma = a.sigma;
    a.eta_coupling = b.eta_coupling = EtaCoupling::kFrozen;
    a.eta = b.eta = 0.8;
    const auto xa = solve_point_resolvent(a, params, CouplingSpec{});
    const auto xb = solve_point_resolvent(b, params, CouplingSpec{});
    double lhs = (xa.rho - xb.rho) * (xa.rho - xb.rho);
    double rhs = (xa.rho - xb.rho) * (a.y_rho - b.y_rho);
    for (int c = 0; c < 4; ++c) {
      lhs += (xa.w[c] - xb.w[c]) * (xa.w[c] - xb.w[c]);
      rhs += (xa.w[c] - xb.w[c]) * (a.y_w[c] - b.y_w[c]);
    }
    CHECK(lhs <= rhs + 1e-8);
  }
}

TEST_CASE("density output is monotone in the density input") {
  const CongestionParams params(1.0, 2.0, 0.1);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 50; ++trial) {
    PointResolventProblem pb = random_problem(rng);
    double prev = -1.0;
    for (int s = 0; s < 20; ++s) {
      pb.y_rho = -0.5 + 0.15 * s;
      const double r = solve_point_resolvent(pb, params, CouplingSpec{}).rho;
      CHECK(r >= prev - 1e-12);
      prev = r;
    }
  }
}

TEST_CASE("field-level resolvent") {
  const GridSpec g(6, 4, 1.0, 0.1);
  const CongestionParams params(1.0, 2.0, 0.1);
  CouplingSpec spec;
  spec.terminal = two_wells_terminal_cost();
  const auto rho0 = discretize_initial_density([](double, double) { return 1.0; }, g);
  std::mt19937_64 rng(37);
  DensityField y_rho = make_density(g);
  FluxField y_w = make_flux(g);
  oracle::randomize(y_rho, rng, -0.5, 2.0);
  oracle::randomize(y_w, rng, -1.0, 1.0);

  SUBCASE("slice 0 is pinned and nodes match the pointwise solve") {
    const auto out = apply_resolvent_K(y_rho, y_w, 0.5, g, params, spec, rho0);
    for (std::size_t n = 0; n < g.slice_size(); ++n) CHECK(out.rho.slice(0)[n] == rho0[n]);
    CHECK(out.stats.max_residual <= 1e-10);
    PointResolventProblem pb;
    pb.y_rho = y_rho(4, 1, 2);
    for (int c = 0; c < 4; ++c) pb.y_w[c] = y_w(3, 1, 2, c);
    pb.sigma = 0.5;
    pb.role = SliceRole::kTerminal;
    pb.x1 = g.x1(1);
    pb.x2 = g.x2(2);
    pb.dt = g.dt();
    const auto sol = solve_point_resolvent(pb, params, spec);
    CHECK(out.rho(4, 1, 2) == Approx(sol.rho).epsilon(1e-14));
    for (int c = 0; c < 4; ++c) CHECK(out.w(3, 1, 2, c) == Approx(sol.w[c]).epsilon(1e-14));
  }
  SUBCASE("small sigma approaches the identity on K") {
    DensityField yr = make_density(g);
    FluxField yw = make_flux(g);
    oracle::randomize(yr, rng, 0.5, 2.0);
    for (int k = 0; k < g.n_t(); ++k)
      for (int i = 0; i < g.n_h(); ++i)
        for (int j = 0; j < g.n_h(); ++j) yw(k, i, j, 0) = 0.3, yw(k, i, j, 1) = -0.2;
    const auto out = apply_resolvent_K_tilde(yr, yw, 1e-9, g, params, rho0);
    double worst = 0.0;
    for (int k = 1; k <= g.n_t(); ++k)
      for (int i = 0; i < g.n_h(); ++i)
        for (int j = 0; j < g.n_h(); ++j) worst = std::max(worst, std::abs(out.rho(k, i, j) - yr(k, i, j)));
    for (std::size_t n = 0; n < yw.size(); ++n) worst = std::max(worst, std::abs(out.w.values()[n] - yw.values()[n]));
    CHECK(worst < 1e-7);
  }
  SUBCASE("zero input gives zero output") {
    const auto out = apply_resolvent_K_tilde(make_density(g), make_flux(g), 0.5, g, params, rho0);
    for (int k = 1; k <= g.n_t(); ++k)
      for (int i = 0; i < g.n_h(); ++i)
        for (int j = 0; j < g.n_h(); ++j) CHECK(std::abs(out.rho(k, i, j)) < 1e-12);
    for (double v : out.w.values()) CHECK(v == 0.0);
  }
  SUBCASE("mismatched rho0 is rejected") {
    CHECK_THROWS_AS(ResolventContext(g, params, spec, std::vector<double>(3, 1.0), true), InvalidGrid);
  }
}

TEST_CASE("discrete energy J") {
  const GridSpec g(4, 2);
  const CongestionParams params(1.0, 2.0, 0.1);
  CouplingSpec spec;
  const std::vector<double> rho0(g.slice_size(), 1.0);
  DensityField rho = make_density(g);
  FluxField w = make_flux(g);
  DensityField eta = make_density(g);
  std::fill(rho.values().begin(), rho.values().end(), 1.0);
  CHECK(eval_J(rho, w, eta, g, params, spec, rho0).value() == 0.0);
  // one flux entry: E_h = (eta + eps)^alpha |w|^2 / (2 rho) with beta' = 2
  w(0, 1, 1, 0) = 2.0;
  eta(1, 1, 1) = 0.9;
  CHECK(eval_J(rho, w, eta, g, params, spec, rho0).value() == Approx(1.0 * 4.0 / 2.0));
  spec.f_kind = CouplingKind::kLinear;
  spec.f_scale = 1.0;
  const double with_f = eval_J(rho, w, eta, g, params, spec, rho0).value();
  CHECK(with_f == Approx(2.0 + 0.5 * g.n_t() * g.slice_size()));
  rho(1, 0, 0) = -1.0;
  CHECK(eval_J(rho, w, eta, g, params, spec, rho0).is_infinite());
  rho(1, 0, 0) = 1.0;
  rho(0, 0, 0) = 0.5;
  CHECK(eval_J(rho, w, eta, g, params, spec, rho0).is_infinite());
}

TEST_CASE("field resolvent is firmly nonexpansive") {
  const GridSpec g(5, 3, 1.0, 0.1);
  CouplingSpec spec;
  spec.terminal = two_wells_terminal_cost();
  const std::vector<double> rho0(g.slice_size(), 1.0);
  std::mt19937_64 rng(61);
  for (const auto& params : {CongestionParams(1.0, 2.0, 0.1), CongestionParams(0.5, 1.5, 0.1)}) {
    for (int trial = 0; trial < 10; ++trial) {
      DensityField ra = make_density(g), rb = make_density(g);
      FluxField wa = make_flux(g), wb = make_flux(g);
      oracle::randomize(ra, rng, -0.5, 2.0);
      oracle::randomize(rb, rng, -0.5, 2.0);
      oracle::randomize(wa, rng);
      oracle::randomize(wb, rng);
      const auto xa = apply_resolvent_K(ra, wa, 0.5, g, params, spec, rho0);
      const auto xb = apply_resolvent_K(rb, wb, 0.5, g, params, spec, rho0);
      double lhs = 0.0, rhs = 0.0;
      // slice 0 is the indicator part and is identical on both sides
      for (std::size_t q = g.slice_size(); q < ra.size(); ++q) {
        const double d = xa.rho.values()[q] - xb.rho.values()[q];
        lhs += d * d;
        rhs += d * (ra.values()[q] - rb.values()[q]);
      }
      for (std::size_t q = 0; q < wa.size(); ++q) {
        const double d = xa.w.values()[q] - xb.w.values()[q];
        lhs += d * d;
        rhs += d * (wa.values()[q] - wb.values()[q]);
      }
      CHECK(lhs <= rhs + 1e-8);
    }
  }
}
