#include "mfg/experiments.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>

namespace mfg {

namespace fs = std::filesystem;

namespace {

std::string join(const std::string& prefix, const std::string& key) {
  return prefix.empty() ? key : prefix + "." + key;
}

void require_map(const YAML::Node& node, const std::string& field) {
  if (!node.IsMap()) throw ConfigError(field, "expected a mapping");
}

void check_keys(const YAML::Node& node, const std::string& prefix,
                const std::set<std::string>& allowed) {
  require_map(node, prefix.empty() ? "<root>" : prefix);
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    if (!allowed.count(key)) throw ConfigError(join(prefix, key), "unknown key");
  }
}

template <class T>
void read(const YAML::Node& node, const std::string& prefix, const std::string& key, T& out) {
  const YAML::Node v = node[key];
  if (!v) return;
  try {
    out = v.as<T>();
  } catch (const YAML::Exception&) {
    throw ConfigError(join(prefix, key), "cannot convert '" + YAML::Dump(v) + "'");
  }
}

const char* laplacian_name(LaplacianScale s) {
  return s == LaplacianScale::kPaper ? "paper" : "standard";
}

void validate(const RunConfig& c) {
  if (c.n_h < 2) throw ConfigError("grid.n_h", "must be >= 2");
  if (c.n_t < 1) throw ConfigError("grid.n_t", "must be >= 1");
  if (!(c.horizon > 0.0)) throw ConfigError("grid.T", "must be positive");
  if (!(c.nu >= 0.0)) throw ConfigError("model.nu", "must be >= 0");
  if (!(c.epsilon >= 0.0)) throw ConfigError("model.epsilon", "must be >= 0");
  if (!(c.beta > 1.0)) throw ConfigError("model.beta", "must be > 1");
  if (!(c.alpha > 0.0)) throw ConfigError("model.alpha", "must be positive");
  try {
    CongestionParams(c.alpha, c.beta, c.epsilon, c.force_params);
  } catch (const ParameterOutOfRange& e) {
    throw ConfigError("model", std::string(e.what()) + "; set model.force to run anyway");
  }
  if (c.f_kind != "zero" && c.f_kind != "linear") {
    throw ConfigError("coupling.f_kind", "expected 'zero' or 'linear', got '" + c.f_kind + "'");
  }
  if (!(c.f_scale >= 0.0)) throw ConfigError("coupling.f_scale", "must be >= 0");
  terminal_cost_preset(c.terminal);
  if (c.initial.preset != "four_gaussians" && c.initial.preset != "custom") {
    throw ConfigError("initial.preset", "unknown preset '" + c.initial.preset + "'");
  }
  if (c.initial.centers.empty()) throw ConfigError("initial.centers", "must not be empty");
  if (!(c.initial.sharpness > 0.0)) throw ConfigError("initial.sharpness", "must be positive");
  const SolverConfig& s = c.solver;
  if (!(s.tau > 0.0)) throw ConfigError("solver.tau", "must be positive");
  if (!(s.sigma > 0.0)) throw ConfigError("solver.sigma", "must be positive");
  if (s.max_iter <= 0) throw ConfigError("solver.max_iter", "must be positive");
  if (!(s.tol > 0.0)) throw ConfigError("solver.tol", "must be positive");
  if (s.check_every <= 0) throw ConfigError("solver.check_every", "must be positive");
  if (s.norm_iterations < 10) throw ConfigError("solver.norm_iterations", "must be >= 10");
  for (double t : c.output.snapshot_times) {
    if (!(t >= 0.0 && t <= c.horizon)) {
      throw ConfigError("output.snapshot_times", "time " + std::to_string(t) + " outside [0, T]");
    }
  }
}

std::string format_g17(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

}  // namespace

RunConfig parse_run_config(const std::string& yaml_text) {
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError("<root>", std::string("YAML syntax error: ") + e.what());
  }
  RunConfig c;
  if (root.IsNull()) return c;
  check_keys(root, "", {"grid", "model", "coupling", "initial", "solver", "output"});

  if (const YAML::Node n = root["grid"]) {
    check_keys(n, "grid", {"n_h", "n_t", "T"});
    read(n, "grid", "n_h", c.n_h);
    read(n, "grid", "n_t", c.n_t);
    read(n, "grid", "T", c.horizon);
  }
  if (const YAML::Node n = root["model"]) {
    check_keys(n, "model", {"alpha", "beta", "epsilon", "nu", "laplacian_denominator", "force"});
    read(n, "model", "alpha", c.alpha);
    read(n, "model", "beta", c.beta);
    read(n, "model", "epsilon", c.epsilon);
    read(n, "model", "nu", c.nu);
    read(n, "model", "force", c.force_params);
    std::string lap = laplacian_name(c.laplacian);
    read(n, "model", "laplacian_denominator", lap);
    if (lap == "paper") {
      c.laplacian = LaplacianScale::kPaper;
    } else if (lap == "standard") {
      c.laplacian = LaplacianScale::kStandard;
    } else {
      throw ConfigError("model.laplacian_denominator", "expected 'paper' or 'standard'");
    }
  }
  if (const YAML::Node n = root["coupling"]) {
    check_keys(n, "coupling", {"f_kind", "f_scale", "terminal"});
    read(n, "coupling", "f_kind", c.f_kind);
    read(n, "coupling", "f_scale", c.f_scale);
    read(n, "coupling", "terminal", c.terminal);
  }
  if (const YAML::Node n = root["initial"]) {
    check_keys(n, "initial", {"preset", "centers", "sharpness"});
    read(n, "initial", "preset", c.initial.preset);
    read(n, "initial", "sharpness", c.initial.sharpness);
    if (n["centers"]) {
      if (c.initial.preset != "custom") {
        throw ConfigError("initial.centers", "only allowed with preset 'custom'");
      }
      read(n, "initial", "centers", c.initial.centers);
    } else if (c.initial.preset == "custom") {
      throw ConfigError("initial.centers", "required with preset 'custom'");
    }
  }
  if (const YAML::Node n = root["solver"]) {
    check_keys(n, "solver", {"variant", "tau", "sigma", "max_iter", "tol", "check_every",
                             "step_rule", "norm_iterations", "seed", "record_tolerances"});
    std::string variant = to_string(c.solver.variant);
    read(n, "solver", "variant", variant);
    c.solver.variant = parse_variant(variant);
    read(n, "solver", "tau", c.solver.tau);
    read(n, "solver", "sigma", c.solver.sigma);
    read(n, "solver", "max_iter", c.solver.max_iter);
    read(n, "solver", "tol", c.solver.tol);
    read(n, "solver", "check_every", c.solver.check_every);
    read(n, "solver", "norm_iterations", c.solver.norm_iterations);
    read(n, "solver", "seed", c.solver.seed);
    read(n, "solver", "record_tolerances", c.solver.record_tolerances);
    std::string rule = c.solver.step_rule == StepRule::kAuto ? "auto" : "manual";
    read(n, "solver", "step_rule", rule);
    if (rule == "auto") {
      c.solver.step_rule = StepRule::kAuto;
    } else if (rule == "manual") {
      c.solver.step_rule = StepRule::kManual;
    } else {
      throw ConfigError("solver.step_rule", "expected 'auto' or 'manual'");
    }
  }
  if (const YAML::Node n = root["output"]) {
    check_keys(n, "output", {"dir", "snapshot_times"});
    read(n, "output", "dir", c.output.dir);
    read(n, "output", "snapshot_times", c.output.snapshot_times);
  }
  validate(c);
  return c;
}

RunConfig load_run_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path.string(), "cannot open config file");
  std::stringstream ss;
  ss << in.rdbuf();
  try {
    return parse_run_config(ss.str());
  } catch (const ConfigError& e) {
    throw ConfigError(path.string() + ": " + e.field(), std::string(e.what()).substr(e.field().size() + 2));
  }
}

std::string dump_run_config(const RunConfig& c) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "grid" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "n_h" << YAML::Value << c.n_h;
  out << YAML::Key << "n_t" << YAML::Value << c.n_t;
  out << YAML::Key << "T" << YAML::Value << c.horizon;
  out << YAML::EndMap;

  out << YAML::Key << "model" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "alpha" << YAML::Value << c.alpha;
  out << YAML::Key << "beta" << YAML::Value << c.beta;
  out << YAML::Key << "epsilon" << YAML::Value << c.epsilon;
  out << YAML::Key << "nu" << YAML::Value << c.nu;
  out << YAML::Key << "laplacian_denominator" << YAML::Value << laplacian_name(c.laplacian);
  out << YAML::Key << "force" << YAML::Value << c.force_params;
  out << YAML::EndMap;

  out << YAML::Key << "coupling" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "f_kind" << YAML::Value << c.f_kind;
  out << YAML::Key << "f_scale" << YAML::Value << c.f_scale;
  out << YAML::Key << "terminal" << YAML::Value << c.terminal;
  out << YAML::EndMap;

  out << YAML::Key << "initial" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "preset" << YAML::Value << c.initial.preset;
  if (c.initial.preset == "custom") {
    out << YAML::Key << "centers" << YAML::Value << YAML::BeginSeq;
    for (const auto& p : c.initial.centers) {
      out << YAML::Flow << YAML::BeginSeq << p[0] << p[1] << YAML::EndSeq;
    }
    out << YAML::EndSeq;
  }
  out << YAML::Key << "sharpness" << YAML::Value << c.initial.sharpness;
  out << YAML::EndMap;

  const SolverConfig& s = c.solver;
  out << YAML::Key << "solver" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "variant" << YAML::Value << to_string(s.variant);
  out << YAML::Key << "tau" << YAML::Value << s.tau;
  out << YAML::Key << "sigma" << YAML::Value << s.sigma;
  out << YAML::Key << "max_iter" << YAML::Value << s.max_iter;
  out << YAML::Key << "tol" << YAML::Value << s.tol;
  out << YAML::Key << "check_every" << YAML::Value << s.check_every;
  out << YAML::Key << "step_rule" << YAML::Value
      << (s.step_rule == StepRule::kAuto ? "auto" : "manual");
  out << YAML::Key << "norm_iterations" << YAML::Value << s.norm_iterations;
  out << YAML::Key << "seed" << YAML::Value << s.seed;
  out << YAML::Key << "record_tolerances" << YAML::Value << YAML::Flow << s.record_tolerances;
  out << YAML::EndMap;

  out << YAML::Key << "output" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "dir" << YAML::Value << c.output.dir;
  out << YAML::Key << "snapshot_times" << YAML::Value << YAML::Flow << c.output.snapshot_times;
  out << YAML::EndMap;
  out << YAML::EndMap;
  return std::string(out.c_str()) + "\n";
}

DensityFunction gaussian_mixture(const std::vector<std::array<double, 2>>& centers,
                                 double sharpness) {
  return [centers, sharpness](double x1, double x2) {
    double s = 0.0;
    for (const auto& c : centers) {
      const double d1 = x1 - c[0];
      const double d2 = x2 - c[1];
      s += std::exp(-sharpness * (d1 * d1 + d2 * d2));
    }
    return s;
  };
}

Problem make_problem(const RunConfig& c) {
  validate(c);
  const GridSpec grid(c.n_h, c.n_t, c.horizon, c.nu, c.laplacian);
  CouplingSpec coupling;
  coupling.f_kind = c.f_kind == "linear" ? CouplingKind::kLinear : CouplingKind::kZero;
  coupling.f_scale = c.f_scale;
  coupling.terminal = terminal_cost_preset(c.terminal);
  const InitialSpec defaults;
  const auto& centers = c.initial.preset == "custom" ? c.initial.centers : defaults.centers;
  return Problem{grid, CongestionParams(c.alpha, c.beta, c.epsilon, c.force_params), coupling,
                 discretize_initial_density(gaussian_mixture(centers, c.initial.sharpness), grid)};
}

int nearest_slice(double t, const GridSpec& grid) {
  const int k = static_cast<int>(std::lround(t / grid.dt()));
  return std::clamp(k, 0, grid.n_t());
}

double discrete_entropy(std::span<const double> slice, const GridSpec& grid) {
  double s = 0.0;
  for (double v : slice) {
    if (v > 0.0) s -= v * std::log(v);
  }
  return grid.h() * grid.h() * s;
}

double slice_distance(std::span<const double> a, std::span<const double> b, const GridSpec& grid) {
  double s = 0.0;
  for (std::size_t q = 0; q < a.size(); ++q) s += (a[q] - b[q]) * (a[q] - b[q]);
  return grid.h() * std::sqrt(s);
}

void write_snapshot_csv(const fs::path& path, std::span<const double> slice, int n_h, double t) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write " + path.string());
  out << n_h << "," << n_h << "," << format_g17(t) << "\n";
  for (int i = 0; i < n_h; ++i) {
    for (int j = 0; j < n_h; ++j) {
      if (j) out << ",";
      out << format_g17(slice[static_cast<std::size_t>(i) * n_h + j]);
    }
    out << "\n";
  }
}

Snapshot read_snapshot_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot read " + path.string());
  Snapshot snap;
  std::string line;
  std::getline(in, line);
  int n2 = 0;
  if (std::sscanf(line.c_str(), "%d,%d,%lf", &snap.n_h, &n2, &snap.t) != 3 || snap.n_h != n2) {
    throw Error("bad snapshot header in " + path.string());
  }
  snap.values.reserve(static_cast<std::size_t>(snap.n_h) * snap.n_h);
  while (std::getline(in, line)) {
    std::stringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) snap.values.push_back(std::stod(cell));
  }
  if (snap.values.size() != static_cast<std::size_t>(snap.n_h) * snap.n_h) {
    throw Error("snapshot " + path.string() + " has the wrong number of values");
  }
  return snap;
}

namespace {

void write_outputs(const RunConfig& c, const Problem& p, const RunResult& r, const fs::path& dir) {
  const GridSpec& grid = p.grid;
  {
    std::ofstream out(dir / "diagnostics.csv");
    out << "iter,err_continuity,err_hjb,mass_error,wall_seconds\n";
    for (const auto& rec : r.diagnostics.records) {
      out << rec.iter << "," << format_g17(rec.err_continuity) << "," << format_g17(rec.err_hjb)
          << "," << format_g17(rec.mass_error) << "," << format_g17(rec.wall_seconds) << "\n";
    }
  }
  const std::vector<double> g = sample_terminal_cost(p.coupling, grid);
  for (double t : c.output.snapshot_times) {
    const int k = nearest_slice(t, grid);
    const double tk = grid.t(k);
    write_snapshot_csv(dir / ("rho_t" + std::to_string(k) + ".csv"), r.state.rho.slice(k),
                       grid.n_h(), tk);
    const std::span<const double> phi_k =
        k < grid.n_t() ? r.state.phi.slice(k) : std::span<const double>(g);
    write_snapshot_csv(dir / ("phi_t" + std::to_string(k) + ".csv"), phi_k, grid.n_h(), tk);
  }

  const RunDiagnostics& d = r.diagnostics;
  nlohmann::json j;
  j["variant"] = to_string(c.solver.variant);
  j["converged"] = d.converged;
  j["iterations"] = r.state.iter;
  j["tol"] = c.solver.tol;
  if (!d.records.empty()) {
    const auto& last = d.records.back();
    j["err_continuity"] = last.err_continuity;
    j["err_hjb"] = last.err_hjb;
    j["mass_error"] = last.mass_error;
  }
  j["wall_seconds"] = d.wall_seconds;
  j["setup_seconds"] = d.setup_seconds;
  j["tau"] = d.tau;
  j["sigma"] = d.sigma;
  j["norm_C_squared"] = d.norm_C_squared;
  j["zero_branch_nodes"] = d.zero_branch_nodes;
  j["hjb_vacuum_nodes"] = d.hjb_vacuum_nodes;
  j["err_increases_after_burn_in"] = d.err_increases;
  j["outside_theory"] = p.params.outside_theory();
  j["f_kind"] = c.f_kind;
  j["grid"] = {{"n_h", c.n_h}, {"n_t", c.n_t}, {"T", c.horizon}};
  nlohmann::json hits = nlohmann::json::array();
  for (const auto& [thr, it] : d.first_hits) {
    hits.push_back({{"tol", thr}, {"iterations", it ? nlohmann::json(*it) : nlohmann::json()}});
  }
  j["first_hits"] = hits;
  nlohmann::json snaps = nlohmann::json::array();
  for (double t : c.output.snapshot_times) {
    const int k = nearest_slice(t, grid);
    snaps.push_back({{"requested_t", t}, {"slice", k}, {"t", grid.t(k)}});
  }
  j["snapshots"] = snaps;
  std::ofstream(dir / "summary.json") << std::setw(2) << j << "\n";
}

}  // namespace

SolveOutcome solve_and_write(const RunConfig& config, const fs::path& dir) {
  const Problem problem = make_problem(config);
  fs::create_directories(dir);
  {
    RunConfig resolved = config;
    resolved.output.dir = dir.string();
    std::ofstream(dir / "config.resolved") << dump_run_config(resolved);
  }
  try {
    RunResult r = run(config.solver, problem);
    write_outputs(config, problem, r, dir);
    return {std::move(r), dir};
  } catch (const MaxIterationsReached& e) {
    write_outputs(config, problem, e.result(), dir);
    throw;
  }
}

std::vector<Table1Cell> run_table1(const RunConfig& base,
                                   const std::vector<std::array<int, 2>>& grids,
                                   const std::vector<double>& tolerances,
                                   const fs::path& out_dir) {
  if (tolerances.empty()) throw ConfigError("tol-list", "must not be empty");
  std::vector<Table1Cell> cells;
  for (const auto& [n_h, n_t] : grids) {
    RunConfig c = base;
    c.n_h = n_h;
    c.n_t = n_t;
    c.solver.variant = Variant::kPreconditioned;
    c.solver.tol = *std::min_element(tolerances.begin(), tolerances.end());
    c.solver.record_tolerances = tolerances;
    c.solver.check_every = 1;
    const fs::path dir = out_dir / ("grid_" + std::to_string(n_h) + "x" + std::to_string(n_t));
    SolveOutcome o = solve_and_write(c, dir);
    const RunDiagnostics& d = o.result.diagnostics;
    for (const auto& [thr, hit] : d.first_hits) {
      Table1Cell cell{n_h, n_t, thr, hit, 0.0};
      if (hit) {
        for (const auto& rec : d.records) {
          if (rec.iter == *hit) cell.wall_seconds = rec.wall_seconds + d.setup_seconds;
        }
      }
      cells.push_back(cell);
    }
  }
  return cells;
}

void write_table1_csv(const fs::path& path, const std::vector<Table1Cell>& cells) {
  std::ofstream out(path);
  out << "n_h,n_t,tol,iterations,wall_seconds\n";
  for (const auto& c : cells) {
    out << c.n_h << "," << c.n_t << "," << format_g17(c.tol) << ","
        << (c.iterations ? std::to_string(*c.iterations) : "") << "," << format_g17(c.wall_seconds)
        << "\n";
  }
}

namespace {

std::string param_dir(const std::string& name, double v) {
  std::ostringstream ss;
  ss << name << "_" << v;
  return ss.str();
}

SweepRun sweep_one(const RunConfig& c, double parameter, const fs::path& dir) {
  SolveOutcome o = solve_and_write(c, dir);
  const GridSpec grid(c.n_h, c.n_t, c.horizon, c.nu, c.laplacian);
  SweepRun s{parameter, dir, std::move(o.result), 0.0, 0.0};
  const auto last = s.result.state.rho.slice(grid.n_t());
  s.terminal_entropy = discrete_entropy(last, grid);
  s.terminal_displacement = slice_distance(last, s.result.state.rho.slice(0), grid);
  return s;
}

}  // namespace

std::vector<SweepRun> run_viscosity_sweep(const RunConfig& base, const std::vector<double>& nus,
                                          const fs::path& out_dir) {
  std::vector<SweepRun> runs;
  for (double nu : nus) {
    RunConfig c = base;
    c.nu = nu;
    c.output.snapshot_times = {0.0, 0.5, c.horizon};
    runs.push_back(sweep_one(c, nu, out_dir / param_dir("nu", nu)));
  }
  return runs;
}

std::vector<SweepRun> run_congestion_sweep(const RunConfig& base,
                                           const std::vector<double>& epsilons,
                                           const fs::path& out_dir) {
  std::vector<SweepRun> runs;
  for (double eps : epsilons) {
    RunConfig c = base;
    c.nu = 0.0;
    c.epsilon = eps;
    c.output.snapshot_times = {0.0, 0.5, c.horizon};
    runs.push_back(sweep_one(c, eps, out_dir / param_dir("epsilon", eps)));
  }
  return runs;
}

void write_sweep_csv(const fs::path& path, const std::string& parameter_name,
                     const std::vector<SweepRun>& runs) {
  std::ofstream out(path);
  out << parameter_name << ",dir,iterations,converged,err_continuity,terminal_entropy,"
      << "terminal_displacement\n";
  for (const auto& r : runs) {
    const auto& d = r.result.diagnostics;
    out << format_g17(r.parameter) << "," << r.dir.filename().string() << ","
        << r.result.state.iter << "," << (d.converged ? 1 : 0) << ","
        << format_g17(d.records.empty() ? 0.0 : d.records.back().err_continuity) << ","
        << format_g17(r.terminal_entropy) << "," << format_g17(r.terminal_displacement) << "\n";
  }
}

}  // namespace mfg
