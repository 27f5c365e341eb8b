#include <benchmark/benchmark.h>

#include <random>

#include "mfg/experiments.hpp"
#include "mfg/preconditioner.hpp"
#include "mfg/resolvent.hpp"

using namespace mfg;

namespace {

void BM_PointResolvent(benchmark::State& state) {
  const CongestionParams params(1.0, state.range(0) == 0 ? 2.0 : 1.5, 0.1);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> ur(-0.5, 2.0), uw(-1.5, 1.5);
  std::vector<PointResolventProblem> pbs(256);
  for (auto& pb : pbs) {
    pb.y_rho = ur(rng);
    for (double& v : pb.y_w) v = uw(rng);
    pb.sigma = 0.5;
  }
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(solve_point_resolvent(pbs[i++ % pbs.size()], params, CouplingSpec{}));
  }
}
BENCHMARK(BM_PointResolvent)->Arg(0)->Arg(1);

void BM_FieldResolvent(benchmark::State& state) {
  const GridSpec g(static_cast<int>(state.range(0)), 16, 1.0, 0.1);
  const CongestionParams params(1.0, 2.0, 0.1);
  CouplingSpec spec;
  spec.terminal = two_wells_terminal_cost();
  const ResolventContext ctx(g, params, spec, std::vector<double>(g.slice_size(), 1.0), true);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.5, 2.0);
  DensityField yr = make_density(g);
  FluxField yw = make_flux(g);
  for (double& v : yr.values()) v = u(rng);
  for (double& v : yw.values()) v = u(rng) - 0.75;
  DensityField rho = make_density(g);
  FluxField w = make_flux(g);
  for (auto _ : state) {
    apply_resolvent(yr, yw, 0.5, ctx, rho, w);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_FieldResolvent)->Arg(20)->Arg(40)->Unit(benchmark::kMillisecond);

void BM_PreconditionerApply(benchmark::State& state) {
  const GridSpec g(static_cast<int>(state.range(0)), static_cast<int>(state.range(1)), 1.0, 0.1);
  const SpectralPreconditioner pre(g);
  ValueField u = make_value(g);
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n;
  for (double& v : u.values()) v = n(rng);
  ValueField x = make_value(g);
  for (auto _ : state) {
    pre.apply_inverse(u, x);
    benchmark::ClobberMemory();
  }
}
BENCHMARK(BM_PreconditionerApply)->Args({20, 16})->Args({40, 32})->Unit(benchmark::kMicrosecond);

void BM_PdhgIteration(benchmark::State& state) {
  RunConfig c;
  c.n_h = static_cast<int>(state.range(0));
  c.n_t = static_cast<int>(state.range(1));
  c.solver.tol = 1e-300;
  c.solver.max_iter = 10;
  c.solver.check_every = 1000;
  c.solver.throw_on_max_iter = false;
  const Problem pb = make_problem(c);
  for (auto _ : state) {
    benchmark::DoNotOptimize(run(c.solver, pb));
  }
  state.SetItemsProcessed(state.iterations() * c.solver.max_iter);
}
BENCHMARK(BM_PdhgIteration)->Args({20, 16})->Args({40, 32})->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
