#include "vpme/transport.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace vpme {

Assignment solve_assignment(const std::vector<double>& cost, std::size_t n) {
  require(cost.size() == n * n, ErrorCode::SizeMismatch, "cost matrix is not n×n");
  constexpr double inf = std::numeric_limits<double>::infinity();
  // Potentials and matching are 1-based; column 0 is the virtual source of each augmentation.
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
  std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
  std::vector<char> used(n + 1);
  for (std::size_t i = 1; i <= n; ++i) {
    p[0] = i;
    std::size_t j0 = 0;
    std::fill(minv.begin(), minv.end(), inf);
    std::fill(used.begin(), used.end(), 0);
    do {
      used[j0] = 1;
      const std::size_t i0 = p[j0];
      const double* row = cost.data() + (i0 - 1) * n;
      double delta = inf;
      std::size_t j1 = 0;
      for (std::size_t j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = row[j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (std::size_t j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const std::size_t j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  Assignment out;
  out.target.assign(n, 0);
  for (std::size_t j = 1; j <= n; ++j)
    if (p[j] != 0) out.target[p[j] - 1] = j - 1;
  for (std::size_t i = 0; i < n; ++i) out.total_cost += cost[i * n + out.target[i]];
  return out;
}

std::vector<double> squared_cost_matrix(const ParticleEnsemble& a, const ParticleEnsemble& b,
                                        Marginal marginal) {
  require(a.size() == b.size(), ErrorCode::SizeMismatch, "ensembles differ in particle count");
  const std::size_t n = a.size();
  std::vector<double> c(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double s = 0.0;
      for (int d = 0; d < 3; ++d) {
        const double dx = a.x[i][d] - b.x[j][d];
        s += dx * dx;
      }
      if (marginal == Marginal::PhaseSpace)
        for (int d = 0; d < 3; ++d) {
          const double dv = a.v[i][d] - b.v[j][d];
          s += dv * dv;
        }
      c[i * n + j] = s;
    }
  return c;
}

ExactTransport w2_exact_plan(const ParticleEnsemble& a, const ParticleEnsemble& b, Marginal marginal,
                             std::size_t cap) {
  require(a.size() == b.size(), ErrorCode::SizeMismatch, "ensembles differ in particle count");
  require(a.size() > 0, ErrorCode::SizeMismatch, "ensembles are empty");
  if (a.size() > cap) {
    std::ostringstream msg;
    msg << "N = " << a.size() << " exceeds the exact solver cap " << cap << "; use w2_entropic";
    throw Error(ErrorCode::CapExceeded, msg.str());
  }
  const auto cost = squared_cost_matrix(a, b, marginal);
  const Assignment asg = solve_assignment(cost, a.size());
  ExactTransport out;
  out.w2_squared = asg.total_cost * a.weight();
  out.w2 = std::sqrt(out.w2_squared);
  out.plan = asg.target;
  return out;
}

double w2_exact(const ParticleEnsemble& a, const ParticleEnsemble& b, Marginal marginal,
                std::size_t cap) {
  return w2_exact_plan(a, b, marginal, cap).w2;
}

namespace {

// f_i = -ε log N - ε log Σ_j exp((g_j - C_ij)/ε); returns the L1 violation of the old marginal.
double update_potential(const std::vector<double>& cost, std::size_t n, bool rows, double eps,
                        const std::vector<double>& other, std::vector<double>& pot) {
  const double log_n = std::log(static_cast<double>(n));
  std::vector<double> z(n);
  double err = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double zmax = -std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) {
      const double c = rows ? cost[i * n + j] : cost[j * n + i];
      z[j] = (other[j] - c) / eps;
      zmax = std::max(zmax, z[j]);
    }
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += std::exp(z[j] - zmax);
    const double next = -eps * (log_n + zmax + std::log(s));
    err += std::abs(std::expm1((pot[i] - next) / eps));
    pot[i] = next;
  }
  return err / static_cast<double>(n);
}

}  // namespace

EntropicResult w2_entropic(const ParticleEnsemble& a, const ParticleEnsemble& b,
                           const EntropicSettings& settings, Marginal marginal) {
  require(settings.epsilon > 0.0, ErrorCode::InvalidParameter, "epsilon must be positive");
  require(settings.iterations > 0, ErrorCode::InvalidParameter, "iterations must be positive");
  require(a.size() == b.size() && a.size() > 0, ErrorCode::SizeMismatch,
          "ensembles differ in particle count");
  const std::size_t n = a.size();
  const auto cost = squared_cost_matrix(a, b, marginal);
  double mean = 0.0;
  for (double c : cost) mean += c;
  mean /= static_cast<double>(cost.size());

  EntropicResult r;
  std::vector<double> f(n, 0.0), g(n, 0.0);
  if (mean == 0.0) {
    r.epsilon = 0.0;
    return r;
  }
  const double eps_final = settings.epsilon * mean;
  double eps = mean;
  int used = 0;
  double err = std::numeric_limits<double>::infinity();
  for (;;) {
    const bool last = eps <= eps_final;
    if (last) eps = eps_final;
    const double tol = last ? settings.tolerance : 1e-3;
    const int budget = last ? settings.iterations - used : std::min(500, settings.iterations - used);
    for (int it = 0; it < budget; ++it) {
      err = update_potential(cost, n, true, eps, g, f);
      update_potential(cost, n, false, eps, f, g);
      ++used;
      if (err < tol) break;
    }
    if (last || used >= settings.iterations) break;
    eps = std::max(eps * 0.5, eps_final);
  }
  r.iterations = used;
  r.epsilon = eps;
  r.marginal_error = err;
  if (!(err < settings.tolerance)) {
    std::ostringstream msg;
    msg << "Sinkhorn did not reach marginal tolerance " << settings.tolerance << " (last error "
        << err << ")";
    throw ConvergenceError(msg.str(), err, used);
  }

  // Round the plan onto the transport polytope so its cost is an upper bound.
  const double w = 1.0 / static_cast<double>(n);
  std::vector<double> P(n * n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) P[i * n + j] = std::exp((f[i] + g[j] - cost[i * n + j]) / eps);
  std::vector<double> rsum(n, 0.0), csum(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) rsum[i] += P[i * n + j];
    const double x = rsum[i] > w ? w / rsum[i] : 1.0;
    for (std::size_t j = 0; j < n; ++j) P[i * n + j] *= x;
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) csum[j] += P[i * n + j];
  for (std::size_t j = 0; j < n; ++j) {
    const double y = csum[j] > w ? w / csum[j] : 1.0;
    for (std::size_t i = 0; i < n; ++i) P[i * n + j] *= y;
  }
  std::fill(rsum.begin(), rsum.end(), 0.0);
  std::fill(csum.begin(), csum.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      rsum[i] += P[i * n + j];
      csum[j] += P[i * n + j];
    }
  double deficit = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    rsum[i] = std::max(0.0, w - rsum[i]);
    deficit += rsum[i];
  }
  for (std::size_t j = 0; j < n; ++j) csum[j] = std::max(0.0, w - csum[j]);
  double primal = 0.0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      double pij = P[i * n + j];
      if (deficit > 0.0) pij += rsum[i] * csum[j] / deficit;
      primal += pij * cost[i * n + j];
    }

  // c-transform of g gives a feasible dual pair and hence a lower bound.
  double dual = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t j = 0; j < n; ++j) m = std::min(m, cost[i * n + j] - g[j]);
    dual += m;
  }
  for (std::size_t j = 0; j < n; ++j) dual += g[j];
  dual *= w;

  r.upper_bound = std::sqrt(std::max(primal, 0.0));
  r.value = std::min(std::sqrt(std::max(dual, 0.0)), r.upper_bound);
  r.gap = r.upper_bound - r.value;
  return r;
}

}  // namespace vpme
