#include "vpme/stability.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "vpme/field_ops.hpp"

namespace vpme {

Coupling Coupling::explicit_pairing(std::vector<std::size_t> partner) {
  Coupling c;
  c.partner = std::move(partner);
  return c;
}

void Coupling::validate(const ParticleEnsemble& a, const ParticleEnsemble& b) const {
  require(a.size() == b.size(), ErrorCode::IdMismatch, "coupled ensembles differ in particle count");
  a.validate();
  b.validate();
  if (is_identity()) return;
  require(partner.size() == a.size(), ErrorCode::IdMismatch, "coupling does not cover every id");
  std::vector<char> seen(partner.size(), 0);
  for (std::size_t p : partner) {
    require(p < partner.size() && !seen[p], ErrorCode::IdMismatch, "coupling is not a bijection");
    seen[p] = 1;
  }
}

namespace {

struct Pairs {
  std::vector<std::size_t> a, b;
};

Pairs paired_indices(const ParticleEnsemble& a, const ParticleEnsemble& b, const Coupling& c) {
  c.validate(a, b);
  const auto ia = a.index_by_id();
  const auto ib = b.index_by_id();
  Pairs p;
  p.a.resize(a.size());
  p.b.resize(a.size());
  for (std::size_t id = 0; id < a.size(); ++id) {
    p.a[id] = ia[id];
    p.b[id] = ib[c.is_identity() ? id : c.partner[id]];
  }
  return p;
}

}  // namespace

double coupled_distance(const ParticleEnsemble& a, const ParticleEnsemble& b, const Coupling& coupling) {
  const Pairs p = paired_indices(a, b, coupling);
  double s = 0.0;
  for (std::size_t k = 0; k < p.a.size(); ++k) {
    const auto& xa = a.x[p.a[k]];
    const auto& xb = b.x[p.b[k]];
    const auto& va = a.v[p.a[k]];
    const auto& vb = b.v[p.b[k]];
    for (int d = 0; d < 3; ++d) s += (xa[d] - xb[d]) * (xa[d] - xb[d]) + (va[d] - vb[d]) * (va[d] - vb[d]);
  }
  return s * a.weight();
}

double h_modulus(double s) {
  require(s >= 0.0, ErrorCode::InvalidParameter, "H is defined for s >= 0");
  if (s == 0.0) return 0.0;
  if (s <= std::exp(-2.0)) {
    const double l = std::log(s);
    return s * l * l;
  }
  return 4.0 * std::exp(-2.0);
}

double gronwall_switch_time(double w2_0, double C) {
  require(w2_0 > 0.0, ErrorCode::InvalidParameter, "switch time needs W₂(0) > 0");
  require(C > 0.0, ErrorCode::InvalidParameter, "switch time needs C > 0");
  if (w2_0 >= 0.5) return 0.0;
  return std::log(std::log(w2_0) / std::log(0.5)) / C;
}

double gronwall_envelope(double w2_0, double C, double t) {
  require(w2_0 >= 0.0, ErrorCode::InvalidParameter, "W₂(0) must be non-negative");
  require(C >= 0.0, ErrorCode::InvalidParameter, "C must be non-negative");
  require(t >= 0.0, ErrorCode::InvalidParameter, "t must be non-negative");
  if (w2_0 == 0.0) return 0.0;
  if (w2_0 >= 0.5) return w2_0 * std::exp(C * t);
  if (C == 0.0) return w2_0;
  const double t0 = gronwall_switch_time(w2_0, C);
  if (t <= t0) return std::exp(std::log(w2_0) * std::exp(-C * t));
  return 0.5 * std::exp(C * (t - t0));
}

double fit_gronwall_constant(const std::vector<double>& times, const std::vector<double>& w2,
                             double relative_tolerance) {
  require(!times.empty() && times.size() == w2.size(), ErrorCode::EmptyHistory,
          "stability history is empty");
  const double w0 = w2.front();
  auto feasible = [&](double C) {
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double env = gronwall_envelope(w0, C, times[i] - times.front());
      if (w2[i] > env * (1.0 + relative_tolerance) + 1e-300) return false;
    }
    return true;
  };
  if (feasible(0.0)) return 0.0;
  constexpr double high = 1e3;
  if (w0 == 0.0 || !feasible(high)) return std::numeric_limits<double>::infinity();
  double lo = 0.0, hi = high;
  for (int it = 0; it < 200 && hi - lo > 1e-13 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return hi;
}

FieldTerms field_terms(const RunFrame& a, const RunFrame& b, const Coupling& coupling) {
  require(a.split.has_value() && b.split.has_value(), ErrorCode::StaleState,
          "field terms need both runs' fields");
  const Pairs p = paired_indices(a.ensemble, b.ensemble, coupling);
  std::vector<Vec3> x1(p.a.size()), x2(p.a.size());
  for (std::size_t k = 0; k < p.a.size(); ++k) {
    x1[k] = a.ensemble.x[p.a[k]];
    x2[k] = b.ensemble.x[p.b[k]];
  }
  const auto bar1_x1 = interpolate_acceleration(a.split->e_bar, x1);
  const auto bar1_x2 = interpolate_acceleration(a.split->e_bar, x2);
  const auto bar2_x2 = interpolate_acceleration(b.split->e_bar, x2);
  const auto hat1_x1 = interpolate_acceleration(a.split->e_hat, x1);
  const auto hat1_x2 = interpolate_acceleration(a.split->e_hat, x2);
  const auto hat2_x2 = interpolate_acceleration(b.split->e_hat, x2);
  auto sq = [](const Vec3& u, const Vec3& v) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) s += (u[d] - v[d]) * (u[d] - v[d]);
    return s;
  };
  FieldTerms t;
  for (std::size_t k = 0; k < x1.size(); ++k) {
    t.I1 += sq(bar1_x1[k], bar1_x2[k]);
    t.I2 += sq(bar1_x2[k], bar2_x2[k]);
    t.I3 += sq(hat1_x1[k], hat1_x2[k]);
    t.I4 += sq(hat1_x2[k], hat2_x2[k]);
  }
  const double w = a.ensemble.weight();
  t.I1 *= w;
  t.I2 *= w;
  t.I3 *= w;
  t.I4 *= w;
  t.D = coupled_distance(a.ensemble, b.ensemble, coupling);
  t.H_of_D = h_modulus(t.D);
  return t;
}

namespace {

void check_synchronized(const std::vector<RunFrame>& a, const std::vector<RunFrame>& b) {
  require(!a.empty(), ErrorCode::EmptyHistory, "runs have no snapshots");
  if (a.size() != b.size()) {
    std::ostringstream msg;
    msg << "runs have " << a.size() << " and " << b.size() << " snapshots";
    throw Error(ErrorCode::Unsynchronized, msg.str());
  }
  for (std::size_t i = 0; i < a.size(); ++i)
    if (std::abs(a[i].t - b[i].t) > 1e-9 * std::max(1.0, std::abs(a[i].t))) {
      std::ostringstream msg;
      msg << "snapshot " << i << " is at t=" << a[i].t << " in one run and t=" << b[i].t << " in the other";
      throw Error(ErrorCode::Unsynchronized, msg.str());
    }
}

}  // namespace

StabilityReport verify_stability(const std::vector<RunFrame>& run_a, const std::vector<RunFrame>& run_b,
                                 const Coupling& coupling, const StabilityOptions& options) {
  check_synchronized(run_a, run_b);
  StabilityReport rep;
  rep.battery_C = options.battery_C;
  std::vector<double> times, w2;
  for (std::size_t i = 0; i < run_a.size(); ++i) {
    const auto& a = run_a[i];
    const auto& b = run_b[i];
    StabilitySample s;
    s.t = a.t;
    s.D = coupled_distance(a.ensemble, b.ensemble, coupling);
    if (a.ensemble.size() <= options.exact_cap) {
      s.w2 = w2_exact(a.ensemble, b.ensemble, Marginal::PhaseSpace, options.exact_cap);
    } else {
      const auto e = w2_entropic(a.ensemble, b.ensemble, options.entropic);
      s.w2 = e.value;
      s.exact = false;
      s.w2_gap = e.gap;
    }
    s.d_controls_w2 = s.w2 * s.w2 <= s.D * (1.0 + 1e-12) + 1e-300;
    if (options.field_terms && a.split && b.split) s.terms = field_terms(a, b, coupling);
    rep.d_controls_w2 = rep.d_controls_w2 && s.d_controls_w2;
    times.push_back(s.t);
    w2.push_back(s.w2);
    rep.samples.push_back(std::move(s));
  }
  rep.fitted_C = fit_gronwall_constant(times, w2);
  rep.envelope_holds = rep.fitted_C <= options.battery_C;
  const double C = std::isfinite(rep.fitted_C) ? rep.fitted_C : options.battery_C;
  const double w0 = w2.front();
  rep.switch_time = w0 > 0.0 && C > 0.0 ? gronwall_switch_time(w0, C) : 0.0;
  for (auto& s : rep.samples) {
    s.envelope = gronwall_envelope(w0, C, s.t - times.front());
    const double ratio = s.envelope > 0.0 ? s.w2 / s.envelope : (s.w2 > 0.0 ? std::numeric_limits<double>::infinity() : 0.0);
    double& slot = s.t - times.front() <= rep.switch_time ? rep.residual_early : rep.residual_late;
    slot = std::max(slot, ratio);
  }
  return rep;
}

FieldStabilitySample field_stability_sample(const RunFrame& a, const RunFrame& b, std::size_t exact_cap) {
  require(a.split.has_value() && b.split.has_value(), ErrorCode::StaleState,
          "field stability needs both runs' fields");
  FieldStabilitySample s;
  s.t = a.t;
  const GridSpec& grid = a.split->u_bar.grid();
  const ScalarField rho1 = deposit_density(a.ensemble, grid);
  const ScalarField rho2 = deposit_density(b.ensemble, grid);
  s.rho_inf = std::max(rho1.max_value(), rho2.max_value());
  s.w2_rho = a.ensemble.size() <= exact_cap
                 ? w2_exact(a.ensemble, b.ensemble, Marginal::Position, exact_cap)
                 : w2_entropic(a.ensemble, b.ensemble, {}, Marginal::Position).value;
  VectorField dbar = a.split->e_bar;
  dbar -= b.split->e_bar;
  VectorField dhat = a.split->e_hat;
  dhat -= b.split->e_hat;
  s.bar_difference = lp_norm(dbar, 2.0);
  s.hat_difference = lp_norm(dhat, 2.0);
  s.loeper_scale = std::sqrt(s.rho_inf) * s.w2_rho;
  return s;
}

FieldStabilityVerdict field_stability_check(std::vector<FieldStabilitySample> samples, double battery_C) {
  require(!samples.empty(), ErrorCode::EmptyHistory, "no field pairs to check");
  FieldStabilityVerdict v;
  v.battery_C = battery_C;
  v.bar_holds = true;
  for (const auto& s : samples) {
    if (s.loeper_scale > 0.0) {
      v.bar_ratio_max = std::max(v.bar_ratio_max, s.bar_difference / s.loeper_scale);
      v.fitted_hat_C = std::max(v.fitted_hat_C, s.hat_difference / s.loeper_scale);
    } else if (s.bar_difference > 0.0 || s.hat_difference > 0.0) {
      v.bar_ratio_max = std::numeric_limits<double>::infinity();
      v.fitted_hat_C = std::numeric_limits<double>::infinity();
    }
  }
  v.bar_holds = v.bar_ratio_max <= kLoeperSlack;
  v.hat_holds = v.fitted_hat_C <= battery_C;
  v.samples = std::move(samples);
  return v;
}

}  // namespace vpme
