#include "vpme/field_ops.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

namespace vpme {

VectorField negative_gradient(const ScalarField& u) {
  require_finite(u, "potential");
  const GridSpec& g = u.grid();
  const int n = g.cells();
  const double inv2h = 1.0 / (2.0 * g.spacing());
  VectorField e(g);
  auto d = [&](int axis, int i, int j, int k) {
    int idx[3] = {i, j, k};
    auto val = [&](int shift) {
      int p[3] = {idx[0], idx[1], idx[2]};
      p[axis] += shift;
      return u.at(p[0], p[1], p[2]);
    };
    const int c = idx[axis];
    if (c == 0) return (-3.0 * val(0) + 4.0 * val(1) - val(2)) * inv2h;
    if (c == n - 1) return (3.0 * val(0) - 4.0 * val(-1) + val(-2)) * inv2h;
    return (val(1) - val(-1)) * inv2h;
  };
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const std::size_t id = g.index(i, j, k);
        for (int a = 0; a < 3; ++a) e.component(a)[id] = -d(a, i, j, k);
      }
  return e;
}

bool is_interior(const GridSpec& grid, int i, int j, int k) noexcept {
  const int n = grid.cells();
  return i > 0 && j > 0 && k > 0 && i < n - 1 && j < n - 1 && k < n - 1;
}

ScalarField laplacian_7pt(const ScalarField& u) {
  const GridSpec& g = u.grid();
  const int n = g.cells();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  ScalarField out(g);
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        out.at(i, j, k) = (u.at(i + 1, j, k) + u.at(i - 1, j, k) + u.at(i, j + 1, k) +
                           u.at(i, j - 1, k) + u.at(i, j, k + 1) + u.at(i, j, k - 1) -
                           6.0 * u.at(i, j, k)) *
                          inv_h2;
      }
  return out;
}

namespace {

double lp_of_magnitudes(const std::vector<double>& mags, double cell_volume, double p) {
  require(p >= 1.0, ErrorCode::InvalidParameter, "L^p norm requires p >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (double v : mags) m = std::max(m, v);
    return m;
  }
  double s = 0.0;
  for (double v : mags) s += std::pow(v, p);
  return std::pow(s * cell_volume, 1.0 / p);
}

double weak_of_magnitudes(std::vector<double> mags, double cell_volume, double p) {
  require(p > 0.0, ErrorCode::InvalidParameter, "weak L^p quasi-norm requires p > 0");
  std::sort(mags.begin(), mags.end(), std::greater<>());
  double best = 0.0;
  const std::size_t n = mags.size();
  for (std::size_t k = 0; k < n; ++k) {
    const double t = mags[k];
    if (t <= 0.0) break;
    // Only evaluate at the last entry of a tie group: that is where the count of {|u| >= t} is full.
    if (k + 1 < n && mags[k + 1] == t) continue;
    best = std::max(best, t * std::pow(static_cast<double>(k + 1) * cell_volume, 1.0 / p));
  }
  return best;
}

std::vector<double> abs_values(const ScalarField& u) {
  std::vector<double> m(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) m[i] = std::abs(u[i]);
  return m;
}

std::vector<double> magnitudes(const VectorField& e) {
  std::vector<double> m(e.size());
  for (std::size_t i = 0; i < e.size(); ++i) m[i] = e.magnitude(i);
  return m;
}

}  // namespace

double lp_norm(const ScalarField& u, double p) {
  return lp_of_magnitudes(abs_values(u), u.grid().cell_volume(), p);
}

double lp_norm(const VectorField& e, double p) {
  return lp_of_magnitudes(magnitudes(e), e.grid().cell_volume(), p);
}

double weak_lp_quasinorm(const ScalarField& u, double p) {
  return weak_of_magnitudes(abs_values(u), u.grid().cell_volume(), p);
}

double weak_lp_quasinorm(const VectorField& e, double p) {
  return weak_of_magnitudes(magnitudes(e), e.grid().cell_volume(), p);
}

NormReport norm_report(const ScalarField& u) {
  NormReport r;
  r.l1 = lp_norm(u, 1.0);
  r.l53 = lp_norm(u, 5.0 / 3.0);
  r.l2 = lp_norm(u, 2.0);
  r.linf = lp_norm(u, kInfinity);
  r.weak_l3 = weak_lp_quasinorm(u, 3.0);
  r.weak_l32 = weak_lp_quasinorm(u, 1.5);
  return r;
}

double holder_quotient(const VectorField& e, double alpha, int reach) {
  require(alpha > 0.0 && alpha <= 1.0 && reach >= 1, ErrorCode::InvalidParameter,
          "holder quotient needs alpha in (0,1] and reach >= 1");
  const GridSpec& g = e.grid();
  const int n = g.cells();
  const double h = g.spacing();
  double best = 0.0;
  for (int dk = 0; dk <= reach; ++dk)
    for (int dj = -reach; dj <= reach; ++dj)
      for (int di = -reach; di <= reach; ++di) {
        // Half of the offset cube; the other half gives the same pairs.
        if (dk == 0 && (dj < 0 || (dj == 0 && di <= 0))) continue;
        const double dist = h * std::sqrt(double(di * di + dj * dj + dk * dk));
        const double denom = std::pow(dist, alpha);
        for (int k = 0; k + dk < n; ++k)
          for (int j = std::max(0, -dj); j < n && j + dj < n; ++j)
            for (int i = std::max(0, -di); i < n && i + di < n; ++i) {
              const std::size_t a = g.index(i, j, k), b = g.index(i + di, j + dj, k + dk);
              double s = 0.0;
              for (int c = 0; c < 3; ++c) {
                const double diff = e.component(c)[a] - e.component(c)[b];
                s += diff * diff;
              }
              best = std::max(best, std::sqrt(s) / denom);
            }
      }
  return best;
}

double dirichlet_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  const GridSpec& g = a.grid();
  const int n = g.cells();
  double s = 0.0;
  for (int k = 0; k < n; ++k)
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double ac = a.at(i, j, k), bc = b.at(i, j, k);
        if (i + 1 < n) s += (a.at(i + 1, j, k) - ac) * (b.at(i + 1, j, k) - bc);
        if (j + 1 < n) s += (a.at(i, j + 1, k) - ac) * (b.at(i, j + 1, k) - bc);
        if (k + 1 < n) s += (a.at(i, j, k + 1) - ac) * (b.at(i, j, k + 1) - bc);
      }
  return s * g.spacing();
}

double dirichlet_energy(const ScalarField& u) { return dirichlet_product(u, u); }

double inner_product(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s * a.grid().cell_volume();
}

}  // namespace vpme
