#include "vpme/lattice_green.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <numbers>

#include "vpme/error.hpp"

namespace vpme {
namespace {

constexpr double kLogStep = 0.05;
constexpr double kLogMin = -38.0;
constexpr double kLogMax = 76.0;

std::vector<double> asymptotic_scaled_bessel(double x, int max_order) {
  std::vector<double> out(max_order + 1);
  const double lead = 1.0 / std::sqrt(2.0 * std::numbers::pi * x);
  for (int m = 0; m <= max_order; ++m) {
    const double mu = 4.0 * m * m;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k <= 30; ++k) {
      const double odd = 2.0 * k - 1.0;
      term *= -(mu - odd * odd) / (8.0 * k * x);
      sum += term;
      if (std::abs(term) < 1e-18 * std::abs(sum)) break;
    }
    out[m] = lead * sum;
  }
  return out;
}

// Miller backward recurrence normalised with e^{-x}(I_0 + 2 sum_k I_k) = 1.
std::vector<double> miller_scaled_bessel(double x, int max_order) {
  std::vector<double> out(max_order + 1, 0.0);
  const int start = max_order + 30 + static_cast<int>(10.0 * std::sqrt(x));
  double next = 0.0, cur = 1e-280, norm = 0.0;
  for (int k = start; k >= 1; --k) {
    const double prev = (2.0 * k / x) * cur + next;
    norm += 2.0 * cur;
    if (k <= max_order) out[k] = cur;
    next = cur;
    cur = prev;
    if (std::abs(cur) > 1e250) {
      constexpr double s = 1e-250;
      cur *= s;
      next *= s;
      norm *= s;
      for (int m = k; m <= max_order; ++m) out[m] *= s;
    }
  }
  out[0] = cur;
  norm += cur;
  for (double& v : out) v /= norm;
  return out;
}

}  // namespace

std::vector<double> scaled_bessel_i(double x, int max_order) {
  require(x >= 0.0 && max_order >= 0, ErrorCode::InvalidParameter, "scaled_bessel_i domain");
  if (x == 0.0) {
    std::vector<double> out(max_order + 1, 0.0);
    out[0] = 1.0;
    return out;
  }
  const double m2 = static_cast<double>(max_order) * max_order;
  if (x > std::max(60.0, 30.0 * m2)) return asymptotic_scaled_bessel(x, max_order);
  return miller_scaled_bessel(x, max_order);
}

std::size_t LatticeGreen::slot(int a, int b, int c) noexcept {
  const auto A = static_cast<std::size_t>(a), B = static_cast<std::size_t>(b);
  return A * (A + 1) * (A + 2) / 6 + B * (B + 1) / 2 + static_cast<std::size_t>(c);
}

LatticeGreen::LatticeGreen(int max_offset) : max_offset_(max_offset) {
  require(max_offset >= 1, ErrorCode::InvalidParameter, "lattice Green table needs max_offset >= 1");
  const int M = max_offset;
  table_.assign(slot(M, M, M) + 1, 0.0);

  const int steps = static_cast<int>(std::ceil((kLogMax - kLogMin) / kLogStep));
  std::vector<double> acc(table_.size(), 0.0);
  for (int s = 0; s <= steps; ++s) {
    const double log_t = kLogMin + s * kLogStep;
    const double t = std::exp(log_t);
    const auto iv = scaled_bessel_i(2.0 * t, M);
    // Nodes where even the m=0 product is negligible add nothing.
    if (t * iv[0] * iv[0] * iv[0] < 1e-300) continue;
    for (int a = 0; a <= M; ++a) {
      const double fa = t * iv[a];
      if (fa == 0.0) continue;
      for (int b = 0; b <= a; ++b) {
        const double fab = fa * iv[b];
        if (fab == 0.0) continue;
        double* row = &acc[slot(a, b, 0)];
        for (int c = 0; c <= b; ++c) row[c] += fab * iv[c];
      }
    }
  }
  for (std::size_t i = 0; i < acc.size(); ++i) table_[i] = acc[i] * kLogStep;
}

double LatticeGreen::operator()(int a, int b, int c) const noexcept {
  a = std::abs(a);
  b = std::abs(b);
  c = std::abs(c);
  if (a < b) std::swap(a, b);
  if (b < c) std::swap(b, c);
  if (a < b) std::swap(a, b);
  return table_[slot(a, b, c)];
}

std::shared_ptr<const LatticeGreen> lattice_green(int max_offset) {
  static std::mutex mutex;
  static std::shared_ptr<const LatticeGreen> cached;
  std::lock_guard lock(mutex);
  if (!cached || cached->max_offset() < max_offset) {
    cached = std::make_shared<const LatticeGreen>(max_offset);
  }
  return cached;
}

}  // namespace vpme
