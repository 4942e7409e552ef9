#include "vpme/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace vpme {

EnergyReport energy(const PotentialSplit& split, const ScalarField& g, const ParticleEnsemble& ens,
                    double t) {
  require_same_grid(split.u_bar.grid(), g.grid());
  EnergyReport r;
  r.t = t;
  const double w = ens.weight();
  double kin = 0.0;
  for (const auto& v : ens.v) kin += v[0] * v[0] + v[1] * v[1] + v[2] * v[2];
  r.kinetic = w * kin;

  const double dv = g.grid().cell_volume();
  double field = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double m = split.e_total.magnitude(i);
    field += m * m;
  }
  r.field = field * dv;

  r.electron_mass = split.electron_mass;
  const double log_m = std::log(split.electron_mass);
  double ev = 0.0, ef = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) {
    if (g[i] == 0.0) continue;
    const double u = split.u_bar[i] + split.u_hat[i];
    const double phi = u - log_m;
    ev += (u - 1.0) * g[i] * std::exp(u);
    ef += phi * g[i] * std::exp(phi);
  }
  r.electron_V = 2.0 * ev * dv;
  r.electron_F = 2.0 * ef * dv;
  r.total_V = r.kinetic + r.field + r.electron_V;
  r.total_F = r.kinetic + r.field + r.electron_F;
  return r;
}

EnergyReport energy(const SimulationState& state) {
  require(!state.stale && state.split.has_value() && state.g != nullptr, ErrorCode::StaleState,
          "field does not match the current particle positions");
  return energy(*state.split, *state.g, state.ensemble, state.t);
}

std::vector<double> moment_values(const ParticleEnsemble& ens, const std::vector<double>& orders) {
  std::vector<double> out(orders.size(), 0.0);
  for (double k : orders) require(k >= 0.0, ErrorCode::InvalidParameter, "moment orders must be >= 0");
  const double w = ens.weight();
  for (const auto& v : ens.v) {
    const double s = std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]);
    for (std::size_t j = 0; j < orders.size(); ++j) out[j] += orders[j] == 0.0 ? 1.0 : std::pow(s, orders[j]);
  }
  for (double& m : out) m *= w;
  return out;
}

void MomentReport::append(double t, const ParticleEnsemble& ens) {
  auto row = moment_values(ens, orders);
  auto sup = row;
  if (!sup_values.empty())
    for (std::size_t j = 0; j < sup.size(); ++j) sup[j] = std::max(sup[j], sup_values.back()[j]);
  times.push_back(t);
  values.push_back(std::move(row));
  sup_values.push_back(std::move(sup));
}

std::vector<double> MomentReport::series(std::size_t order_index) const {
  std::vector<double> s;
  s.reserve(values.size());
  for (const auto& row : values) s.push_back(row.at(order_index));
  return s;
}

MomentReport moments(const ParticleEnsemble& ens, const std::vector<double>& orders, double t) {
  MomentReport r;
  r.orders = orders;
  r.append(t, ens);
  return r;
}

double interpolation_constant(double k, double f_inf_bound) {
  require(k > 0.0, ErrorCode::InvalidParameter, "interpolation order must be positive");
  require(f_inf_bound > 0.0, ErrorCode::InvalidParameter, "‖f‖_∞ bound must be positive");
  // ρ <= b R³ + R^{-k} ∫|v|^k f dv with b = (4π/3)‖f‖_∞, minimised at R^{k+3} = k m / (3b).
  const double b = 4.0 * std::numbers::pi / 3.0 * f_inf_bound;
  return (1.0 + 3.0 / k) * std::pow(b, k / (k + 3.0)) * std::pow(k / 3.0, 3.0 / (k + 3.0));
}

InterpolationVerdict interpolation_check(const ScalarField& rho, const ParticleEnsemble& ens, double k,
                                         double f_inf_bound, double tolerance) {
  require(k > 0.0, ErrorCode::InvalidParameter, "interpolation order must be positive");
  InterpolationVerdict v;
  v.k = k;
  v.lhs = lp_norm(rho, (k + 3.0) / 3.0);
  v.moment = moment_values(ens, {k})[0];
  if (v.moment == 0.0) {
    v.constant = std::isfinite(f_inf_bound) ? interpolation_constant(k, f_inf_bound) : f_inf_bound;
    v.rhs = 0.0;
  } else {
    v.constant = interpolation_constant(k, f_inf_bound);
    v.rhs = v.constant * std::pow(v.moment, 3.0 / (k + 3.0));
  }
  v.margin = v.lhs > 0.0 ? v.rhs / v.lhs : std::numeric_limits<double>::infinity();
  v.holds = v.lhs <= v.rhs + tolerance;
  return v;
}

double moment_envelope(double C, double m0, double t) {
  return std::exp(C * (1.0 + std::log1p(m0)) * std::exp(C * t));
}

double fit_moment_envelope(const std::vector<double>& times, const std::vector<double>& values) {
  require(!times.empty() && times.size() == values.size(), ErrorCode::EmptyHistory,
          "moment history is empty");
  const double m0 = values.front();
  // The envelope grows with C, so feasibility is monotone and the bracket shrinks geometrically.
  auto feasible = [&](double C) {
    for (std::size_t i = 0; i < times.size(); ++i)
      if (values[i] > moment_envelope(C, m0, times[i] - times.front())) return false;
    return true;
  };
  if (feasible(kEnvelopeSearchLow)) return kEnvelopeSearchLow;
  if (!feasible(kEnvelopeSearchHigh)) return std::numeric_limits<double>::infinity();
  const double phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double lo = kEnvelopeSearchLow, hi = kEnvelopeSearchHigh;
  while (hi - lo > 1e-12 * hi) {
    const double mid = hi - phi * (hi - lo);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

MomentEnvelopeVerdict moment_envelope_check(const MomentReport& history, double battery_C) {
  require(!history.times.empty(), ErrorCode::EmptyHistory, "moment history is empty");
  MomentEnvelopeVerdict v;
  v.battery_C = battery_C;
  for (std::size_t j = 0; j < history.orders.size(); ++j) {
    EnvelopeFit fit;
    fit.order = history.orders[j];
    fit.fitted_C = fit_moment_envelope(history.times, history.series(j));
    fit.feasible = std::isfinite(fit.fitted_C);
    v.fitted_C = std::max(v.fitted_C, fit.fitted_C);
    v.fits.push_back(fit);
  }
  v.holds = v.fitted_C <= battery_C;
  return v;
}

}  // namespace vpme
