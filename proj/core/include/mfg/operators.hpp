#pragma once

#include <array>
#include <functional>
#include <span>
#include <vector>

#include "mfg/grid.hpp"

namespace mfg {

/// [D_h f]_{ij} = (D1 f_{ij}, D1 f_{(i-1)j}, D2 f_{ij}, D2 f_{i(j-1)}).
using StaggeredGradient = std::array<double, 4>;

// Slice operators. `slice` holds n_h*n_h values; outputs are written to `out`.
void apply_Dh(std::span<const double> slice, const GridSpec& grid, std::span<double> out);
std::vector<double> apply_Dh(std::span<const double> slice, const GridSpec& grid);

/// Staggered gradient at a single node.
StaggeredGradient staggered_gradient_at(std::span<const double> slice, const GridSpec& grid,
                                        int i, int j);

/// 5-point periodic Laplacian with the grid's denominator convention.
void apply_laplacian(std::span<const double> slice, const GridSpec& grid, std::span<double> out);
std::vector<double> apply_laplacian(std::span<const double> slice, const GridSpec& grid);

// Space-time operators A : M -> U, B : W -> U and their Euclidean adjoints.
void apply_A(const DensityField& rho, const GridSpec& grid, ValueField& out);
void apply_B(const FluxField& w, const GridSpec& grid, ValueField& out);
void apply_A_star(const ValueField& phi, const GridSpec& grid, DensityField& out);
void apply_B_star(const ValueField& phi, const GridSpec& grid, FluxField& out);

ValueField apply_A(const DensityField& rho, const GridSpec& grid);
ValueField apply_B(const FluxField& w, const GridSpec& grid);
DensityField apply_A_star(const ValueField& phi, const GridSpec& grid);
FluxField apply_B_star(const ValueField& phi, const GridSpec& grid);

/// A rho + B w, the discrete continuity residual.
ValueField continuity_residual(const DensityField& rho, const FluxField& w, const GridSpec& grid);

/// Pointwise density on the unit torus; arguments are wrapped into [0,1).
using DensityFunction = std::function<double(double x1, double x2)>;

/// Cell averages by 2x2 Gauss-Legendre quadrature, renormalized to h^2 * sum = 1.
/// Throws DegenerateDensity if every quadrature value vanishes.
std::vector<double> discretize_initial_density(const DensityFunction& rho0, const GridSpec& grid);

}  // namespace mfg
