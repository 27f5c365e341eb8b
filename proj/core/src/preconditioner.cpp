#include "mfg/preconditioner.hpp"

#include <fftw3.h>

#include <Eigen/Cholesky>
#include <Eigen/Dense>
#include <cmath>
#include <complex>
#include <random>
#include <stdexcept>

#include "mfg/errors.hpp"
#include "mfg/operators.hpp"

namespace mfg {

ValueField forward_CtC(const ValueField& u, const GridSpec& grid) {
  ValueField out = apply_A(apply_A_star(u, grid), grid);
  const ValueField bb = apply_B(apply_B_star(u, grid), grid);
  for (std::size_t q = 0; q < out.size(); ++q) out.values()[q] += bb.values()[q];
  return out;
}

struct SpectralPreconditioner::Impl {
  explicit Impl(const GridSpec& g) : grid(g), n(g.n_h()), nt(g.n_t()), nc(g.n_h() / 2 + 1) {
    real_buf = fftw_alloc_real(static_cast<std::size_t>(n) * n);
    cplx_buf = fftw_alloc_complex(static_cast<std::size_t>(n) * nc);
    forward = fftw_plan_dft_r2c_2d(n, n, real_buf, cplx_buf, FFTW_ESTIMATE | FFTW_UNALIGNED);
    backward = fftw_plan_dft_c2r_2d(n, n, cplx_buf, real_buf, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!forward || !backward) throw FactorizationFailure("FFTW planning failed");
  }
  ~Impl() {
    fftw_destroy_plan(forward);
    fftw_destroy_plan(backward);
    fftw_free(real_buf);
    fftw_free(cplx_buf);
  }
  Impl(const Impl&) = delete;
  Impl& operator=(const Impl&) = delete;

  std::size_t freqs() const { return static_cast<std::size_t>(n) * nc; }

  // Forward transform of every time slice; spectrum layout [k][freq].
  std::vector<std::complex<double>> transform(const ValueField& u) const {
    std::vector<std::complex<double>> spec(static_cast<std::size_t>(nt) * freqs());
    std::vector<double> in(grid.slice_size());
    for (int k = 0; k < nt; ++k) {
      const auto s = u.slice(k);
      std::copy(s.begin(), s.end(), in.begin());
      fftw_execute_dft_r2c(forward, in.data(),
                           reinterpret_cast<fftw_complex*>(spec.data() + k * freqs()));
    }
    return spec;
  }

  GridSpec grid;
  int n;
  int nt;
  int nc;
  double* real_buf = nullptr;
  fftw_complex* cplx_buf = nullptr;
  fftw_plan forward = nullptr;
  fftw_plan backward = nullptr;
  std::vector<Eigen::MatrixXd> blocks;
  std::vector<Eigen::LLT<Eigen::MatrixXd>> factors;
};

SpectralPreconditioner::SpectralPreconditioner(const GridSpec& grid)
    : impl_(std::make_unique<Impl>(grid)) {
  Impl& d = *impl_;
  d.blocks.assign(d.freqs(), Eigen::MatrixXd::Zero(d.nt, d.nt));
  for (int m = 0; m < d.nt; ++m) {
    ValueField delta = make_value(grid);
    delta(m, 0, 0) = 1.0;
    const auto spec = d.transform(forward_CtC(delta, grid));
    for (int k = 0; k < d.nt; ++k) {
      for (std::size_t f = 0; f < d.freqs(); ++f) d.blocks[f](k, m) = spec[k * d.freqs() + f].real();
    }
  }
  d.factors.resize(d.freqs());
  for (std::size_t f = 0; f < d.freqs(); ++f) {
    d.factors[f].compute(d.blocks[f]);
    if (d.factors[f].info() != Eigen::Success) {
      throw FactorizationFailure("frequency block " + std::to_string(f) +
                                 " is not positive definite");
    }
  }
}

SpectralPreconditioner::~SpectralPreconditioner() = default;
SpectralPreconditioner::SpectralPreconditioner(SpectralPreconditioner&&) noexcept = default;
SpectralPreconditioner& SpectralPreconditioner::operator=(SpectralPreconditioner&&) noexcept =
    default;

const GridSpec& SpectralPreconditioner::grid() const { return impl_->grid; }

std::vector<double> SpectralPreconditioner::block(int k1, int k2) const {
  const Impl& d = *impl_;
  if (k1 < 0 || k1 >= d.n || k2 < 0 || k2 >= d.nc) throw std::out_of_range("frequency index");
  const Eigen::MatrixXd& b = d.blocks[static_cast<std::size_t>(k1) * d.nc + k2];
  std::vector<double> out(static_cast<std::size_t>(d.nt) * d.nt);
  for (int r = 0; r < d.nt; ++r) {
    for (int c = 0; c < d.nt; ++c) out[r * d.nt + c] = b(r, c);
  }
  return out;
}

ValueField SpectralPreconditioner::apply_inverse(const ValueField& u) const {
  ValueField x = make_value(impl_->grid);
  apply_inverse(u, x);
  return x;
}

void SpectralPreconditioner::apply_inverse(const ValueField& u, ValueField& x) const {
  const Impl& d = *impl_;
  if (!u.same_shape(make_value(d.grid)) || !x.same_shape(u)) {
    throw InvalidGrid("apply_inverse: field shape does not match the preconditioner grid");
  }
  auto spec = d.transform(u);
  const std::size_t nf = d.freqs();

#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t f = 0; f < static_cast<std::ptrdiff_t>(nf); ++f) {
    Eigen::MatrixXd rhs(d.nt, 2);
    for (int k = 0; k < d.nt; ++k) {
      rhs(k, 0) = spec[k * nf + f].real();
      rhs(k, 1) = spec[k * nf + f].imag();
    }
    const Eigen::MatrixXd sol = d.factors[f].solve(rhs);
    for (int k = 0; k < d.nt; ++k) spec[k * nf + f] = {sol(k, 0), sol(k, 1)};
  }

  const double scale = 1.0 / static_cast<double>(d.grid.slice_size());
  std::vector<std::complex<double>> tmp(nf);
  for (int k = 0; k < d.nt; ++k) {
    // c2r overwrites its input
    std::copy(spec.begin() + k * nf, spec.begin() + (k + 1) * nf, tmp.begin());
    auto out = x.slice(k);
    fftw_execute_dft_c2r(d.backward, reinterpret_cast<fftw_complex*>(tmp.data()), out.data());
    for (double& v : out) v *= scale;
  }
}

SpectralPreconditioner build_preconditioner(const GridSpec& grid) {
  return SpectralPreconditioner(grid);
}

double estimate_norm_C(const GridSpec& grid, int iterations, std::uint64_t seed) {
  if (iterations < 10) throw std::invalid_argument("estimate_norm_C: iterations must be >= 10");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  ValueField x = make_value(grid);
  for (double& v : x.values()) v = normal(rng);
  double nx = norm2(x.values());
  for (double& v : x.values()) v /= nx;

  double lambda = 0.0;
  for (int it = 0; it < iterations; ++it) {
    ValueField y = forward_CtC(x, grid);
    lambda = dot(x.values(), y.values());
    const double ny = norm2(y.values());
    if (ny == 0.0) return 0.0;
    for (std::size_t q = 0; q < y.size(); ++q) x.values()[q] = y.values()[q] / ny;
  }
  return lambda;
}

}  // namespace mfg
