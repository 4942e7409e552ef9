#pragma once

#include <memory>
#include <vector>

namespace vpme {

/// Fundamental solution of the 7-point Laplacian on the unit lattice Z^3:
///   6 G(m) - sum_{nb} G(m + e) = delta_{m,0},
/// so G(m) ~ 1/(4 pi |m|) for large |m| and G(0) equals Watson's constant / 2.
///
/// Values come from G(m) = int_0^inf prod_i e^{-2t} I_{m_i}(2t) dt, integrated
/// with the trapezoid rule in log t (exponentially convergent for this integrand).
class LatticeGreen {
 public:
  /// Table covering offsets with every |m_i| <= max_offset.
  explicit LatticeGreen(int max_offset);

  int max_offset() const noexcept { return max_offset_; }
  double operator()(int a, int b, int c) const noexcept;

 private:
  int max_offset_;
  // Sorted-triple storage: a >= b >= c >= 0.
  std::vector<double> table_;
  static std::size_t slot(int a, int b, int c) noexcept;
};

/// Shared table with at least the requested coverage; computed once and cached.
std::shared_ptr<const LatticeGreen> lattice_green(int max_offset);

/// e^{-x} I_m(x) for m = 0..max_order.
std::vector<double> scaled_bessel_i(double x, int max_order);

}  // namespace vpme
