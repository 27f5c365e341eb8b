#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace mfg {

/// Denominator convention of the 5-point Laplacian.
enum class LaplacianScale {
  kPaper,     ///< (sum of neighbours - 4 f) / (4 h^2)
  kStandard,  ///< (sum of neighbours - 4 f) / h^2
};

/// Uniform periodic grid on the unit torus times [0, T].
class GridSpec {
 public:
  GridSpec(int n_h, int n_t, double horizon_T = 1.0, double nu = 0.0,
           LaplacianScale laplacian = LaplacianScale::kPaper);

  int n_h() const { return n_h_; }
  int n_t() const { return n_t_; }
  double horizon() const { return horizon_; }
  double nu() const { return nu_; }
  LaplacianScale laplacian() const { return laplacian_; }

  double h() const { return 1.0 / n_h_; }
  double dt() const { return horizon_ / n_t_; }
  /// Number of nodes in one time slice.
  std::size_t slice_size() const { return static_cast<std::size_t>(n_h_) * n_h_; }
  double laplacian_denominator() const;

  std::size_t idx(int i, int j) const {
    return static_cast<std::size_t>(wrap(i)) * n_h_ + wrap(j);
  }
  int wrap(int i) const {
    const int r = i % n_h_;
    return r < 0 ? r + n_h_ : r;
  }
  double x1(int i) const { return i * h(); }
  double x2(int j) const { return j * h(); }
  double t(int k) const { return k * dt(); }

  bool operator==(const GridSpec&) const = default;

 private:
  int n_h_;
  int n_t_;
  double horizon_;
  double nu_;
  LaplacianScale laplacian_;
};

/// Time-major array of `slices` spatial slices, each holding `comps` values per node.
template <class Tag>
class GridArray {
 public:
  GridArray() = default;
  GridArray(int slices, int n_h, int comps)
      : slices_(slices), n_h_(n_h), comps_(comps),
        values_(static_cast<std::size_t>(slices) * n_h * n_h * comps, 0.0) {}

  int slices() const { return slices_; }
  int n_h() const { return n_h_; }
  int comps() const { return comps_; }
  std::size_t size() const { return values_.size(); }
  std::size_t slice_stride() const { return static_cast<std::size_t>(n_h_) * n_h_ * comps_; }

  std::span<double> slice(int k) {
    return {values_.data() + k * slice_stride(), slice_stride()};
  }
  std::span<const double> slice(int k) const {
    return {values_.data() + k * slice_stride(), slice_stride()};
  }

  double& operator()(int k, int i, int j, int c = 0) {
    return values_[((static_cast<std::size_t>(k) * n_h_ + i) * n_h_ + j) * comps_ + c];
  }
  double operator()(int k, int i, int j, int c = 0) const {
    return values_[((static_cast<std::size_t>(k) * n_h_ + i) * n_h_ + j) * comps_ + c];
  }

  std::vector<double>& values() { return values_; }
  const std::vector<double>& values() const { return values_; }
  double* data() { return values_.data(); }
  const double* data() const { return values_.data(); }

  bool same_shape(const GridArray& o) const {
    return slices_ == o.slices_ && n_h_ == o.n_h_ && comps_ == o.comps_;
  }

 private:
  int slices_ = 0;
  int n_h_ = 0;
  int comps_ = 0;
  std::vector<double> values_;
};

struct DensityTag {};
struct FluxTag {};
struct ValueTag {};

/// rho^k_{ij}, k = 0..n_t.
using DensityField = GridArray<DensityTag>;
/// w^{k,c}_{ij}, k = 0..n_t-1, c = 0..3.
using FluxField = GridArray<FluxTag>;
/// phi^k_{ij}, k = 0..n_t-1.
using ValueField = GridArray<ValueTag>;

inline DensityField make_density(const GridSpec& g) { return {g.n_t() + 1, g.n_h(), 1}; }
inline FluxField make_flux(const GridSpec& g) { return {g.n_t(), g.n_h(), 4}; }
inline ValueField make_value(const GridSpec& g) { return {g.n_t(), g.n_h(), 1}; }

/// Plain Euclidean inner product of two equally sized arrays.
double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> a);

}  // namespace mfg
