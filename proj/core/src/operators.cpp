#include "mfg/operators.hpp"

#include <cassert>
#include <cmath>
#include <numeric>

#include "mfg/errors.hpp"

namespace mfg {

GridSpec::GridSpec(int n_h, int n_t, double horizon_T, double nu, LaplacianScale laplacian)
    : n_h_(n_h), n_t_(n_t), horizon_(horizon_T), nu_(nu), laplacian_(laplacian) {
  if (n_h < 2) throw InvalidGrid("n_h must be >= 2");
  if (n_t < 1) throw InvalidGrid("n_t must be >= 1");
  if (!(horizon_T > 0.0) || !std::isfinite(horizon_T)) throw InvalidGrid("T must be positive");
  if (!(nu >= 0.0) || !std::isfinite(nu)) throw InvalidGrid("nu must be nonnegative");
}

double GridSpec::laplacian_denominator() const {
  const double hh = h() * h();
  return laplacian_ == LaplacianScale::kPaper ? 4.0 * hh : hh;
}

double dot(std::span<const double> a, std::span<const double> b) {
  assert(a.size() == b.size());
  double s = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) s += a[n] * b[n];
  return s;
}

double norm2(std::span<const double> a) { return std::sqrt(dot(a, a)); }

void apply_Dh(std::span<const double> f, const GridSpec& grid, std::span<double> out) {
  const int n = grid.n_h();
  const double inv_h = 1.0 / grid.h();
  assert(f.size() == grid.slice_size() && out.size() == 4 * grid.slice_size());
  for (int i = 0; i < n; ++i) {
    const int ip = i + 1 == n ? 0 : i + 1;
    const int im = i == 0 ? n - 1 : i - 1;
    for (int j = 0; j < n; ++j) {
      const int jp = j + 1 == n ? 0 : j + 1;
      const int jm = j == 0 ? n - 1 : j - 1;
      const double c = f[i * n + j];
      double* q = &out[4 * (i * n + j)];
      q[0] = (f[ip * n + j] - c) * inv_h;
      q[1] = (c - f[im * n + j]) * inv_h;
      q[2] = (f[i * n + jp] - c) * inv_h;
      q[3] = (c - f[i * n + jm]) * inv_h;
    }
  }
}

std::vector<double> apply_Dh(std::span<const double> slice, const GridSpec& grid) {
  std::vector<double> out(4 * grid.slice_size());
  apply_Dh(slice, grid, out);
  return out;
}

StaggeredGradient staggered_gradient_at(std::span<const double> f, const GridSpec& grid, int i,
                                        int j) {
  const double inv_h = 1.0 / grid.h();
  const double c = f[grid.idx(i, j)];
  return {(f[grid.idx(i + 1, j)] - c) * inv_h, (c - f[grid.idx(i - 1, j)]) * inv_h,
          (f[grid.idx(i, j + 1)] - c) * inv_h, (c - f[grid.idx(i, j - 1)]) * inv_h};
}

void apply_laplacian(std::span<const double> f, const GridSpec& grid, std::span<double> out) {
  const int n = grid.n_h();
  const double inv = 1.0 / grid.laplacian_denominator();
  for (int i = 0; i < n; ++i) {
    const int ip = i + 1 == n ? 0 : i + 1;
    const int im = i == 0 ? n - 1 : i - 1;
    for (int j = 0; j < n; ++j) {
      const int jp = j + 1 == n ? 0 : j + 1;
      const int jm = j == 0 ? n - 1 : j - 1;
      out[i * n + j] = (f[im * n + j] + f[ip * n + j] + f[i * n + jm] + f[i * n + jp] -
                        4.0 * f[i * n + j]) *
                       inv;
    }
  }
}

std::vector<double> apply_laplacian(std::span<const double> slice, const GridSpec& grid) {
  std::vector<double> out(grid.slice_size());
  apply_laplacian(slice, grid, out);
  return out;
}

void apply_A(const DensityField& rho, const GridSpec& grid, ValueField& out) {
  const std::size_t m = grid.slice_size();
  const double inv_dt = 1.0 / grid.dt();
  const double nu = grid.nu();
  std::vector<double> lap(m);
  for (int k = 0; k < grid.n_t(); ++k) {
    auto next = rho.slice(k + 1);
    auto cur = rho.slice(k);
    auto o = out.slice(k);
    apply_laplacian(next, grid, lap);
    for (std::size_t p = 0; p < m; ++p) o[p] = (next[p] - cur[p]) * inv_dt - nu * lap[p];
  }
}

void apply_B(const FluxField& w, const GridSpec& grid, ValueField& out) {
  const int n = grid.n_h();
  const double inv_h = 1.0 / grid.h();
  for (int k = 0; k < grid.n_t(); ++k) {
    auto ws = w.slice(k);
    auto o = out.slice(k);
    for (int i = 0; i < n; ++i) {
      const int ip = i + 1 == n ? 0 : i + 1;
      const int im = i == 0 ? n - 1 : i - 1;
      for (int j = 0; j < n; ++j) {
        const int jp = j + 1 == n ? 0 : j + 1;
        const int jm = j == 0 ? n - 1 : j - 1;
        const double* c = &ws[4 * (i * n + j)];
        // (D1 w1)_{(i-1)j} + (D1 w2)_{ij} + (D2 w3)_{i(j-1)} + (D2 w4)_{ij}
        o[i * n + j] = (c[0] - ws[4 * (im * n + j) + 0] + ws[4 * (ip * n + j) + 1] - c[1] +
                        c[2] - ws[4 * (i * n + jm) + 2] + ws[4 * (i * n + jp) + 3] - c[3]) *
                       inv_h;
      }
    }
  }
}

void apply_A_star(const ValueField& phi, const GridSpec& grid, DensityField& out) {
  const std::size_t m = grid.slice_size();
  const int nt = grid.n_t();
  const double inv_dt = 1.0 / grid.dt();
  const double nu = grid.nu();
  std::vector<double> lap(m);

  auto o0 = out.slice(0);
  auto p0 = phi.slice(0);
  for (std::size_t p = 0; p < m; ++p) o0[p] = -p0[p] * inv_dt;

  for (int k = 1; k <= nt - 1; ++k) {
    auto prev = phi.slice(k - 1);
    auto cur = phi.slice(k);
    auto o = out.slice(k);
    apply_laplacian(prev, grid, lap);
    for (std::size_t p = 0; p < m; ++p) o[p] = -(cur[p] - prev[p]) * inv_dt - nu * lap[p];
  }

  auto last = phi.slice(nt - 1);
  auto on = out.slice(nt);
  apply_laplacian(last, grid, lap);
  for (std::size_t p = 0; p < m; ++p) on[p] = last[p] * inv_dt - nu * lap[p];
}

void apply_B_star(const ValueField& phi, const GridSpec& grid, FluxField& out) {
  for (int k = 0; k < grid.n_t(); ++k) {
    auto o = out.slice(k);
    apply_Dh(phi.slice(k), grid, o);
    for (double& v : o) v = -v;
  }
}

ValueField apply_A(const DensityField& rho, const GridSpec& grid) {
  ValueField out = make_value(grid);
  apply_A(rho, grid, out);
  return out;
}

ValueField apply_B(const FluxField& w, const GridSpec& grid) {
  ValueField out = make_value(grid);
  apply_B(w, grid, out);
  return out;
}

DensityField apply_A_star(const ValueField& phi, const GridSpec& grid) {
  DensityField out = make_density(grid);
  apply_A_star(phi, grid, out);
  return out;
}

FluxField apply_B_star(const ValueField& phi, const GridSpec& grid) {
  FluxField out = make_flux(grid);
  apply_B_star(phi, grid, out);
  return out;
}

ValueField continuity_residual(const DensityField& rho, const FluxField& w, const GridSpec& grid) {
  ValueField r = apply_A(rho, grid);
  ValueField bw = apply_B(w, grid);
  for (std::size_t p = 0; p < r.size(); ++p) r.values()[p] += bw.values()[p];
  return r;
}

std::vector<double> discretize_initial_density(const DensityFunction& rho0, const GridSpec& grid) {
  const int n = grid.n_h();
  const double h = grid.h();
  // Gauss-Legendre nodes on [-h/2, h/2], equal weights.
  const double off = 0.5 * h / std::sqrt(3.0);
  const auto wrap01 = [](double x) { return x - std::floor(x); };

  std::vector<double> cells(grid.slice_size());
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (double a : {-off, off}) {
        for (double b : {-off, off}) {
          const double v = rho0(wrap01(grid.x1(i) + a), wrap01(grid.x2(j) + b));
          if (!(v >= 0.0) || !std::isfinite(v)) {
            throw DegenerateDensity("initial density must be finite and nonnegative");
          }
          s += v;
        }
      }
      cells[i * n + j] = 0.25 * s;
    }
  }
  const double mass = h * h * std::accumulate(cells.begin(), cells.end(), 0.0);
  if (!(mass > 0.0)) throw DegenerateDensity("initial density vanishes at every quadrature node");
  for (double& c : cells) c /= mass;
  return cells;
}

}  // namespace mfg
