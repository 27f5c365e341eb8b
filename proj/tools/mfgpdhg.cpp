#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "mfg/errors.hpp"
#include "mfg/experiments.hpp"

namespace fs = std::filesystem;
using namespace mfg;

namespace {

struct GlobalOptions {
  int threads = 0;
  std::optional<std::uint64_t> seed;
  std::string variant;
  std::string config;
};

RunConfig base_config(const GlobalOptions& g) {
  RunConfig c = g.config.empty() ? RunConfig{} : load_run_config(g.config);
  if (g.seed) c.solver.seed = *g.seed;
  if (!g.variant.empty()) c.solver.variant = parse_variant(g.variant);
  return c;
}

void print_summary(const RunResult& r, const fs::path& dir) {
  const auto& d = r.diagnostics;
  const auto& last = d.records.back();
  std::printf("%s: %d iterations, Err %.3e, HJB %.3e, mass %.3e, %.2f s -> %s\n",
              d.converged ? "converged" : "stopped", r.state.iter, last.err_continuity, last.err_hjb,
              last.mass_error, d.wall_seconds + d.setup_seconds, dir.string().c_str());
}

void print_table1(const std::vector<Table1Cell>& cells, const std::vector<double>& tols) {
  std::printf("%-10s", "grid");
  for (double t : tols) std::printf("  %-20s", ("Err < " + std::to_string(t).substr(0, 7)).c_str());
  std::printf("\n");
  for (std::size_t i = 0; i < cells.size(); i += tols.size()) {
    std::printf("%-10s", ("(" + std::to_string(cells[i].n_h) + "," + std::to_string(cells[i].n_t) + ")").c_str());
    for (std::size_t t = 0; t < tols.size() && i + t < cells.size(); ++t) {
      const auto& c = cells[i + t];
      char buf[64];
      if (c.iterations) {
        std::snprintf(buf, sizeof buf, "%d (%.2f s)", *c.iterations, c.wall_seconds);
      } else {
        std::snprintf(buf, sizeof buf, "-");
      }
      std::printf("  %-20s", buf);
    }
    std::printf("\n");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"PDHG solver for congestion mean-field games on the 2-D torus"};
  app.require_subcommand(1);
  GlobalOptions g;
  app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Seed for the power iteration");
  app.add_option("--variant", g.variant, "basic | preconditioned | split | split_preconditioned");

  auto* solve = app.add_subcommand("solve", "Run one configuration and write its outputs");
  std::string solve_out;
  solve->add_option("--config", g.config, "YAML run configuration")->required()->check(CLI::ExistingFile);
  solve->add_option("--out", solve_out, "Output directory (default: output.dir from the config)");

  auto* table = app.add_subcommand("table1", "Iteration counts across grids and tolerances");
  std::vector<double> tols{1e-3, 1e-4, 1e-5};
  std::string table_out = "runs/table1";
  table->add_option("--config", g.config, "Base YAML configuration")->check(CLI::ExistingFile);
  table->add_option("--tol-list", tols, "Tolerances")->delimiter(',');
  table->add_option("--out", table_out, "Output directory");

  auto* visc = app.add_subcommand("viscosity-sweep", "Runs over nu");
  std::vector<double> nus{0.0, 0.02, 0.1};
  std::string visc_out = "runs/viscosity";
  visc->add_option("--config", g.config, "Base YAML configuration")->check(CLI::ExistingFile);
  visc->add_option("--nu-list", nus, "Viscosities")->delimiter(',');
  visc->add_option("--out", visc_out, "Output directory");

  auto* cong = app.add_subcommand("congestion-sweep", "Runs over epsilon with nu = 0");
  std::vector<double> eps{0.0, 0.02, 0.1, 1.0, 5.0};
  std::string cong_out = "runs/congestion";
  cong->add_option("--config", g.config, "Base YAML configuration")->check(CLI::ExistingFile);
  cong->add_option("--epsilon-list", eps, "Congestion offsets")->delimiter(',');
  cong->add_option("--out", cong_out, "Output directory");

  CLI11_PARSE(app, argc, argv);

#ifdef _OPENMP
  if (g.threads > 0) omp_set_num_threads(g.threads);
#else
  if (g.threads > 1) std::fprintf(stderr, "warning: built without OpenMP, --threads ignored\n");
#endif

  try {
    const RunConfig base = base_config(g);
    if (*solve) {
      const fs::path dir = solve_out.empty() ? fs::path(base.output.dir) : fs::path(solve_out);
      const SolveOutcome o = solve_and_write(base, dir);
      print_summary(o.result, o.dir);
    } else if (*table) {
      const std::vector<std::array<int, 2>> grids{{20, 16}, {32, 20}, {40, 32}};
      const auto cells = run_table1(base, grids, tols, table_out);
      write_table1_csv(fs::path(table_out) / "table1.csv", cells);
      print_table1(cells, tols);
    } else if (*visc) {
      const auto runs = run_viscosity_sweep(base, nus, visc_out);
      write_sweep_csv(fs::path(visc_out) / "sweep.csv", "nu", runs);
      for (const auto& r : runs) print_summary(r.result, r.dir);
    } else if (*cong) {
      const auto runs = run_congestion_sweep(base, eps, cong_out);
      write_sweep_csv(fs::path(cong_out) / "sweep.csv", "epsilon", runs);
      for (const auto& r : runs) print_summary(r.result, r.dir);
    }
  } catch (const MaxIterationsReached& e) {
    std::fprintf(stderr, "error: %s (outputs written)\n", e.what());
    return 3;
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
