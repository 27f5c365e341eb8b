#pragma once

#include <cstdint>
#include <memory>

#include "mfg/grid.hpp"

namespace mfg {

/// Exact inverse of A A* + B B* on value fields.
///
/// The operator commutes with spatial shifts, so a 2-D DFT per time slice splits it
/// into one real symmetric n_t x n_t block per frequency. The blocks are read off the
/// impulse responses of the real operators and Cholesky-factored once.
class SpectralPreconditioner {
 public:
  explicit SpectralPreconditioner(const GridSpec& grid);
  ~SpectralPreconditioner();
  SpectralPreconditioner(SpectralPreconditioner&&) noexcept;
  SpectralPreconditioner& operator=(SpectralPreconditioner&&) noexcept;

  const GridSpec& grid() const;

  /// x with (A A* + B B*) x = u.
  ValueField apply_inverse(const ValueField& u) const;
  void apply_inverse(const ValueField& u, ValueField& x) const;

  /// Block T(k1, k2), row-major n_t x n_t; k2 ranges over 0..n_h/2 (Hermitian half).
  std::vector<double> block(int k1, int k2) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Throws FactorizationFailure if a block is not positive definite.
SpectralPreconditioner build_preconditioner(const GridSpec& grid);

/// (A A* + B B*) u.
ValueField forward_CtC(const ValueField& u, const GridSpec& grid);

/// Power iteration on C*C; returns an estimate of ||C||^2. Deterministic in `seed`.
double estimate_norm_C(const GridSpec& grid, int iterations = 200, std::uint64_t seed = 1);

}  // namespace mfg
