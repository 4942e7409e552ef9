#pragma once

#include <memory>

#include "vpme/grid.hpp"

namespace vpme {

/// Free-space solver for -Δu = s on the truncated cube.
///
/// The kernel is the lattice Green's function of the 7-point Laplacian scaled to
/// spacing h (asymptotically 1/(4π|x|)), zero-padded onto a (2n)^3 periodic
/// grid so that the circular FFT convolution equals the linear one on the box.
/// Consequently the 7-point Laplacian of the result reproduces -s exactly on every
/// interior cell, up to rounding.
class FreeSpacePoisson {
 public:
  explicit FreeSpacePoisson(const GridSpec& grid);
  ~FreeSpacePoisson();
  FreeSpacePoisson(const FreeSpacePoisson&) = delete;
  FreeSpacePoisson& operator=(const FreeSpacePoisson&) = delete;

  const GridSpec& grid() const noexcept { return grid_; }
  int padded_cells() const noexcept { return padded_; }

  /// Kernel value G_h at a cell offset, in length^-1 units.
  double kernel(int di, int dj, int dk) const noexcept;

  /// u_i = sum_j G_h(x_i - x_j) s_j h^3. No validation.
  ScalarField convolve(const ScalarField& source) const;

 private:
  struct Plans;
  GridSpec grid_;
  int padded_;
  std::unique_ptr<Plans> plans_;
};

/// Cached solver for a grid (FFT plans and kernel transform are reused).
std::shared_ptr<const FreeSpacePoisson> poisson_solver(const GridSpec& grid);

/// Fraction of |s| mass in the outer 25% shell of the box (max-norm coordinate > 0.75 L).
double outer_shell_mass_fraction(const ScalarField& s);

/// Ū = G * ρ via FFT convolution. Warns when the support guard is exceeded.
ScalarField solve_free_space_poisson(const ScalarField& rho);

/// Same convolution by direct O(n^6) summation; oracle path, n <= 32 only.
ScalarField solve_free_space_poisson_direct(const ScalarField& rho);

inline constexpr int kDirectSummationMaxCells = 32;
inline constexpr double kSupportGuardFraction = 1e-6;

}  // namespace vpme
