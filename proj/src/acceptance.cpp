#include "vpme/acceptance.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "vpme/diagnostics.hpp"
#include "vpme/field_ops.hpp"
#include "vpme/log.hpp"
#include "vpme/poisson.hpp"
#include "vpme/stability.hpp"
#include "vpme/transport.hpp"

namespace vpme {

namespace {

struct Outcome {
  bool passed = false;
  std::string detail;
};

std::string fmt(double x, int precision = 3) {
  std::ostringstream s;
  s << std::setprecision(precision) << x;
  return s.str();
}

ScalarField random_smooth_source(const GridSpec& grid, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  const double L = grid.half_width();
  std::uniform_real_distribution<double> centre(-0.3 * L, 0.3 * L), width(0.1 * L, 0.2 * L),
      amp(-1.0, 1.0);
  ScalarField s(grid);
  for (int b = 0; b < 4; ++b) {
    const Vec3 c{centre(rng), centre(rng), centre(rng)};
    const double w = width(rng), a = amp(rng);
    for (std::size_t i = 0; i < s.size(); ++i) {
      const auto x = grid.position(i);
      double r2 = 0.0;
      for (int d = 0; d < 3; ++d) r2 += (x[d] - c[d]) * (x[d] - c[d]);
      s[i] += a * std::exp(-0.5 * r2 / (w * w));
    }
  }
  return s;
}

double relative_l2(const ScalarField& a, const ScalarField& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num += (a[i] - b[i]) * (a[i] - b[i]);
    den += b[i] * b[i];
  }
  return std::sqrt(num / den);
}

Outcome poisson_oracle() {
  double worst = 0.0;
  for (int n : {16, 32})
    for (std::uint64_t seed : {1, 2}) {
      const GridSpec grid(2.0, n);
      const ScalarField s = random_smooth_source(grid, seed + 100 * n);
      worst = std::max(worst, relative_l2(solve_free_space_poisson(s), solve_free_space_poisson_direct(s)));
    }
  return {worst < 1e-6, "max relative L2 " + fmt(worst)};
}

Outcome neutral_equilibrium() {
  const GridSpec grid(4.0, 48);
  SolverSettings settings;
  settings.tolerance = 1e-11;
  double worst_field = 0.0, worst_hat = 0.0;
  for (const auto& profile : {SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.4),
                              SpatialProfile::two_bump({-0.5, 0.0, 0.0}, 0.3, {0.5, 0.2, 0.0}, 0.4, 0.6)}) {
    const ScalarField g = discretize(profile, grid);
    for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
      const PotentialSplit sp = solve_split_field(g, g, mode, settings);
      worst_field = std::max(worst_field, lp_norm(sp.e_total, kInfinity) / lp_norm(sp.e_bar, kInfinity));
      ScalarField sum = sp.u_hat + sp.u_bar;
      worst_hat = std::max(worst_hat, lp_norm(sum, 2.0) / lp_norm(sp.u_bar, 2.0));
    }
  }
  return {worst_field < 1e-6 && worst_hat < 1e-6,
          "max |E|/|Ebar| " + fmt(worst_field) + ", max |Uhat+Ubar|/|Ubar| " + fmt(worst_hat)};
}

struct FieldScenario {
  SpatialProfile rho;
  SpatialProfile g;
};

std::vector<FieldScenario> field_battery() {
  return {
      {SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5), SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5)},
      {SpatialProfile::ball({0.0, 0.0, 0.0}, 1.0), SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5)},
      {SpatialProfile::two_bump({-0.6, 0.0, 0.0}, 0.35, {0.6, 0.0, 0.0}, 0.35),
       SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5)},
      {SpatialProfile::gaussian({0.3, -0.2, 0.1}, 0.25), SpatialProfile::ball({0.0, 0.0, 0.0}, 1.2)},
      {SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.55), SpatialProfile::gaussian({0.8, 0.0, 0.0}, 0.4)},
      {SpatialProfile::ball({0.0, 0.5, 0.0}, 0.6),
       SpatialProfile::two_bump({0.0, -0.5, 0.0}, 0.4, {0.0, 0.7, 0.0}, 0.45, 0.3)},
  };
}

Outcome sign_and_mass() {
  const GridSpec grid(4.0, 48);
  SolverSettings settings;
  const double guard = std::exp(-(settings.K - 1));
  double max_hat = -kInfinity, worst_mass = 0.0, min_m = kInfinity;
  for (const auto& sc : field_battery()) {
    const ScalarField rho = discretize(sc.rho, grid);
    const ScalarField g = discretize(sc.g, grid);
    for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
      const PotentialSplit sp = solve_split_field(rho, g, mode, settings);
      max_hat = std::max(max_hat, sp.u_hat.max_value());
      if (mode == ChargeMode::FixedCharge) {
        worst_mass = std::max(worst_mass, std::abs(laplacian_mass(sp.u_hat) - 1.0));
        min_m = std::min(min_m, sp.electron_mass);
      }
    }
  }
  return {max_hat <= 1e-12 && worst_mass < 1e-6 && min_m > guard,
          "max Uhat " + fmt(max_hat) + ", max |int lap Uhat - 1| " + fmt(worst_mass) + ", min m " + fmt(min_m)};
}

ScalarField interior_bump(const GridSpec& grid, std::mt19937_64& rng) {
  const double L = grid.half_width();
  std::uniform_real_distribution<double> centre(-0.5 * L, 0.5 * L), width(0.2, 0.8), amp(1e-3, 1e-1),
      sign(-1.0, 1.0);
  const Vec3 c{centre(rng), centre(rng), centre(rng)};
  const double w = width(rng);
  const double a = amp(rng) * (sign(rng) < 0.0 ? -1.0 : 1.0);
  ScalarField d(grid);
  const int n = grid.cells();
  for (int k = 2; k < n - 2; ++k)
    for (int j = 2; j < n - 2; ++j)
      for (int i = 2; i < n - 2; ++i) {
        const double dx = grid.center(i) - c[0], dy = grid.center(j) - c[1], dz = grid.center(k) - c[2];
        d.at(i, j, k) = a * std::exp(-0.5 * (dx * dx + dy * dy + dz * dz) / (w * w));
      }
  return d;
}

Outcome variational_optimality() {
  const GridSpec grid(4.0, 32);
  SolverSettings settings;
  settings.tolerance = 1e-11;
  std::mt19937_64 rng(2024);
  int violations = 0, trials = 0;
  double worst_gateaux = 0.0, min_gain = kInfinity;
  for (const auto& sc : field_battery()) {
    const ScalarField rho = discretize(sc.rho, grid);
    const ScalarField g = discretize(sc.g, grid);
    const PotentialSplit sp = solve_split_field(rho, g, ChargeMode::VariableCharge, settings);
    const double j0 = evaluate_JV(sp.u_hat, sp.u_bar, g);
    for (int p = 0; p < 20; ++p) {
      const ScalarField delta = interior_bump(grid, rng);
      const double gain = evaluate_JV(sp.u_hat + delta, sp.u_bar, g) - j0;
      min_gain = std::min(min_gain, gain);
      violations += gain < 0.0;
      ++trials;

      // Directional derivative away from the minimiser, where it is not zero.
      const ScalarField h = sp.u_hat + delta;
      const double eps = 1e-2;
      auto J = [&](double s) { return evaluate_JV(h + s * delta, sp.u_bar, g); };
      const double fd = (8.0 * (J(eps) - J(-eps)) - (J(2.0 * eps) - J(-2.0 * eps))) / (12.0 * eps);
      const double weak = jv_weak_residual(h, sp.u_bar, g, delta);
      worst_gateaux = std::max(worst_gateaux, std::abs(fd - weak) / std::abs(weak));
    }
  }
  return {violations == 0 && worst_gateaux < 1e-6,
          std::to_string(violations) + "/" + std::to_string(trials) + " perturbations lowered J_V (min gain " +
              fmt(min_gain) + "), max derivative mismatch " + fmt(worst_gateaux)};
}

InitialDataSpec two_bump_maxwellian() {
  InitialDataSpec spec;
  spec.spatial = SpatialProfile::two_bump({-0.6, 0.0, 0.0}, 0.35, {0.6, 0.0, 0.0}, 0.35);
  spec.velocity = VelocityProfile::maxwellian(0.5);
  return spec;
}

Outcome energy_conservation() {
  const GridSpec grid(4.0, 48);
  const ScalarField g = discretize(SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.8), grid);
  const ParticleEnsemble ens = sample_initial(two_bump_maxwellian(), 200000, 7);
  double drift_V = 0.0, drift_F = 0.0;
  for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
    SimulationState st = make_state(ens, grid, g, mode, SolverSettings{});
    double e0V = 0.0, e0F = 0.0;
    double& dV = mode == ChargeMode::VariableCharge ? drift_V : drift_F;
    run(st, RunSettings{1e-2, 1.0, 1}, [&](const SimulationState& s) {
      const EnergyReport e = energy(s);
      if (s.step_count == 0) {
        e0V = e.total_V;
        e0F = e.total_F;
      }
      const double d = mode == ChargeMode::VariableCharge ? std::abs(e.total_V - e0V) / std::abs(e0V)
                                                          : std::abs(e.total_F - e0F) / std::abs(e0F);
      dV = std::max(dV, d);
    });
  }
  return {drift_V < 0.01 && drift_F < 0.01,
          "max relative drift E_V " + fmt(drift_V) + " (variable), E_F " + fmt(drift_F) + " (fixed)"};
}

Outcome moment_propagation() {
  const GridSpec grid(4.0, 48);
  const std::vector<double> orders{2.0, 4.0, 6.0};
  struct Scenario {
    InitialDataSpec spec;
    ChargeMode mode;
  };
  InitialDataSpec power;
  power.spatial = SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5);
  power.velocity = VelocityProfile::power_law(12.0);
  const std::vector<Scenario> battery{{two_bump_maxwellian(), ChargeMode::VariableCharge},
                                      {power, ChargeMode::FixedCharge}};
  const ScalarField g = discretize(SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.8), grid);
  double fitted = 0.0, min_margin = kInfinity;
  for (const auto& sc : battery) {
    SimulationState st = make_state(sample_initial(sc.spec, 100000, 3), grid, g, sc.mode, SolverSettings{});
    MomentReport history;
    history.orders = orders;
    const double f_inf = sc.spec.f_inf_bound();
    run(st, RunSettings{1e-2, 2.0, 10}, [&](const SimulationState& s) {
      history.append(s.t, s.ensemble);
      const ScalarField rho = deposit_density(s.ensemble, grid);
      for (double k : orders) min_margin = std::min(min_margin, interpolation_check(rho, s.ensemble, k, f_inf).margin);
    });
    fitted = std::max(fitted, moment_envelope_check(history, 10.0).fitted_C);
  }
  return {fitted <= 10.0 && min_margin >= 1.0,
          "fitted C " + fmt(fitted) + " (battery 10), min interpolation margin " + fmt(min_margin)};
}

ParticleEnsemble random_ensemble(std::size_t n, std::mt19937_64& rng, double spread = 1.0) {
  std::normal_distribution<double> normal(0.0, spread);
  ParticleEnsemble e;
  for (std::size_t i = 0; i < n; ++i) {
    e.ids.push_back(i);
    e.x.push_back({normal(rng), normal(rng), normal(rng)});
    e.v.push_back({normal(rng), normal(rng), normal(rng)});
  }
  return e;
}

Outcome w2_correctness() {
  std::mt19937_64 rng(99);
  double worst_exact = 0.0;
  for (int trial = 0; trial < 10; ++trial) {
    const ParticleEnsemble a = random_ensemble(8, rng), b = random_ensemble(8, rng);
    const auto cost = squared_cost_matrix(a, b, Marginal::PhaseSpace);
    std::vector<std::size_t> perm(8);
    std::iota(perm.begin(), perm.end(), 0);
    double best = kInfinity;
    do {
      double c = 0.0;
      for (std::size_t i = 0; i < 8; ++i) c += cost[i * 8 + perm[i]];
      best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    const double brute = std::sqrt(best / 8.0);
    worst_exact = std::max(worst_exact, std::abs(w2_exact(a, b) - brute));
  }
  double worst_entropic = 0.0;
  for (int trial = 0; trial < 2; ++trial) {
    const ParticleEnsemble a = random_ensemble(512, rng);
    ParticleEnsemble b = random_ensemble(512, rng);
    if (trial == 1)
      for (auto& x : b.x) x[0] += 0.5;
    const double exact = w2_exact(a, b);
    const EntropicResult ent = w2_entropic(a, b);
    worst_entropic = std::max(worst_entropic, std::abs(ent.value - exact) / exact);
  }
  return {worst_exact <= 1e-12 && worst_entropic < 0.02,
          "exact vs brute force " + fmt(worst_exact) + ", entropic relative error " + fmt(worst_entropic)};
}

struct PairedRuns {
  std::map<ChargeMode, std::vector<RunFrame>> base;
  std::map<std::pair<ChargeMode, double>, std::vector<RunFrame>> perturbed;
};

std::vector<RunFrame> paired_run(ChargeMode mode, double delta) {
  const GridSpec grid(4.0, 48);
  InitialDataSpec spec = two_bump_maxwellian();
  spec.shift = {delta, 0.0, 0.0};
  const ScalarField g = discretize(SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.8), grid);
  SimulationState st = make_state(sample_initial(spec, 1024, 11), grid, g, mode, SolverSettings{});
  std::vector<RunFrame> frames;
  run(st, RunSettings{1e-2, 1.0, 10},
      [&](const SimulationState& s) { frames.push_back({s.t, s.ensemble, s.split}); });
  return frames;
}

constexpr double kDeltas[] = {1e-3, 1e-4};
constexpr ChargeMode kModes[] = {ChargeMode::VariableCharge, ChargeMode::FixedCharge};

const PairedRuns& paired_runs() {
  static const PairedRuns runs = [] {
    PairedRuns r;
    for (ChargeMode mode : kModes) {
      r.base[mode] = paired_run(mode, 0.0);
      for (double d : kDeltas) r.perturbed[{mode, d}] = paired_run(mode, d);
    }
    return r;
  }();
  return runs;
}

Outcome stability_envelope() {
  const PairedRuns& runs = paired_runs();
  constexpr double battery_C = 10.0;
  bool d_controls = true, monotone = true;
  double fitted = 0.0;
  std::ostringstream finals;
  for (ChargeMode mode : kModes) {
    double final_w2[2];
    for (int i = 0; i < 2; ++i) {
      StabilityOptions opts;
      opts.battery_C = battery_C;
      const StabilityReport rep = verify_stability(runs.base.at(mode), runs.perturbed.at({mode, kDeltas[i]}),
                                                   Coupling::identity(), opts);
      d_controls = d_controls && rep.d_controls_w2;
      fitted = std::max(fitted, rep.fitted_C);
      final_w2[i] = rep.samples.back().w2;
    }
    monotone = monotone && final_w2[1] < final_w2[0];
    finals << ' ' << to_string(mode) << ' ' << fmt(final_w2[0]) << '>' << fmt(final_w2[1]);
  }
  return {d_controls && fitted <= battery_C && monotone,
          std::string("W2^2<=D ") + (d_controls ? "everywhere" : "violated") + ", fitted C " + fmt(fitted) +
              ", final W2" + finals.str()};
}

Outcome field_stability() {
  const PairedRuns& runs = paired_runs();
  std::vector<FieldStabilitySample> samples;
  for (ChargeMode mode : kModes)
    for (double d : kDeltas) {
      const auto& a = runs.base.at(mode);
      const auto& b = runs.perturbed.at({mode, d});
      for (std::size_t i = 0; i < a.size(); ++i) samples.push_back(field_stability_sample(a[i], b[i]));
    }
  const FieldStabilityVerdict v = field_stability_check(std::move(samples), 10.0);
  return {v.passed(), "max bar ratio " + fmt(v.bar_ratio_max) + " (limit " + fmt(kLoeperSlack) +
                          "), fitted hat C " + fmt(v.fitted_hat_C)};
}

Outcome modulus_functions() {
  const double e2 = std::exp(-2.0);
  const double l = std::log(e2);
  const double left = e2 * l * l;
  const double right = h_modulus(std::nextafter(e2, 1.0));
  const bool branch_exact = left == h_modulus(e2) && right == 4.0 * e2 && h_modulus(e2) == right;

  bool shape = true;
  const int points = 1000;
  const double top = 2.0 * e2;
  std::vector<double> H(points + 1);
  for (int i = 0; i <= points; ++i) H[i] = h_modulus(top * i / points);
  for (int i = 1; i <= points; ++i) shape = shape && H[i] >= H[i - 1];
  for (int i = 1; i < points; ++i) shape = shape && H[i + 1] - 2.0 * H[i] + H[i - 1] <= 1e-15;

  double worst = 0.0;
  for (double C : {0.5, 1.0, 3.0, 10.0})
    for (double t : {0.0, 0.1, 0.5, 1.0, 2.0}) {
      const double below = gronwall_envelope(std::nextafter(0.5, 0.0), C, t);
      const double at = gronwall_envelope(0.5, C, t);
      worst = std::max(worst, std::abs(below - at) / at);
    }
  for (double w0 : {1e-6, 1e-3, 0.1, 0.4})
    for (double C : {0.5, 1.0, 3.0, 10.0}) {
      const double t0 = gronwall_switch_time(w0, C);
      const double below = gronwall_envelope(w0, C, std::nextafter(t0, 0.0));
      const double above = gronwall_envelope(w0, C, std::nextafter(t0, kInfinity));
      worst = std::max(worst, std::abs(below - above) / above);
    }
  return {branch_exact && shape && worst <= 1e-12,
          std::string("H branch ") + (branch_exact ? "exact" : "mismatch") + ", shape " + (shape ? "ok" : "violated") +
              ", envelope jump " + fmt(worst)};
}

}  // namespace

std::string criterion_title(int id) {
  static const char* titles[] = {"Poisson oracle equivalence",  "Neutral-equilibrium identity",
                                 "Sign and mass certificates",  "Variational optimality",
                                 "Energy conservation",         "Moment propagation envelope",
                                 "W2 solver correctness",       "Stability envelope",
                                 "Field stability inequalities", "H-modulus and envelope functions"};
  require(id >= 1 && id <= kCriterionCount, ErrorCode::InvalidParameter, "no criterion " + std::to_string(id));
  return titles[id - 1];
}

double criterion_budget(int id) {
  static const double budgets[] = {30.0, 10.0, 120.0, 60.0, 600.0, 900.0, 120.0, 1200.0, 300.0, 1.0};
  require(id >= 1 && id <= kCriterionCount, ErrorCode::InvalidParameter, "no criterion " + std::to_string(id));
  return budgets[id - 1];
}

CriterionResult run_criterion(int id) {
  CriterionResult r;
  r.id = id;
  r.title = criterion_title(id);
  r.budget_seconds = criterion_budget(id);
  const auto t0 = std::chrono::steady_clock::now();
  Outcome o;
  try {
    switch (id) {
      case 1: o = poisson_oracle(); break;
      case 2: o = neutral_equilibrium(); break;
      case 3: o = sign_and_mass(); break;
      case 4: o = variational_optimality(); break;
      case 5: o = energy_conservation(); break;
      case 6: o = moment_propagation(); break;
      case 7: o = w2_correctness(); break;
      case 8: o = stability_envelope(); break;
      case 9: o = field_stability(); break;
      case 10: o = modulus_functions(); break;
    }
  } catch (const std::exception& e) {
    o = {false, std::string("error: ") + e.what()};
  }
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  r.detail = o.detail;
  r.passed = o.passed && r.seconds <= r.budget_seconds;
  if (o.passed && !r.passed) r.detail += "; exceeded time budget";
  return r;
}

std::vector<CriterionResult> run_acceptance(const std::vector<int>& ids, std::ostream& out) {
  std::vector<int> selected = ids;
  if (selected.empty()) {
    selected.resize(kCriterionCount);
    std::iota(selected.begin(), selected.end(), 1);
  }
  std::vector<CriterionResult> results;
  for (int id : selected) {
    results.push_back(run_criterion(id));
    const auto& r = results.back();
    out << (r.passed ? "PASS" : "FAIL") << " [" << std::setw(2) << r.id << "] " << r.title << ": " << r.detail
        << " (" << std::fixed << std::setprecision(1) << r.seconds << " s of " << r.budget_seconds << " s)"
        << std::defaultfloat << std::endl;
  }
  return results;
}

}  // namespace vpme
