#include "vpme/electrostatics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "vpme/poisson.hpp"

namespace vpme {

std::string_view to_string(ChargeMode mode) {
  return mode == ChargeMode::VariableCharge ? "variable" : "fixed";
}

ChargeMode parse_charge_mode(std::string_view text) {
  if (text == "variable") return ChargeMode::VariableCharge;
  if (text == "fixed") return ChargeMode::FixedCharge;
  throw Error(ErrorCode::InvalidParameter, "unknown charge mode '" + std::string(text) + "'");
}

void SolverSettings::validate() const {
  require(tolerance > 0.0, ErrorCode::InvalidParameter, "solver tolerance must be positive");
  require(max_iterations > 0, ErrorCode::InvalidParameter, "max_iterations must be positive");
  require(damping > 0.0 && damping <= 1.0, ErrorCode::InvalidParameter, "damping must lie in (0,1]");
  require(min_damping > 0.0 && min_damping <= damping, ErrorCode::InvalidParameter,
          "damping floor must lie in (0, damping]");
  require(K >= 2, ErrorCode::InvalidParameter, "K must be at least 2");
}

double relative_residual(const ScalarField& u, const ScalarField& source) {
  require_same_grid(u.grid(), source.grid());
  const GridSpec& g = u.grid();
  const int n = g.cells();
  const double inv_h2 = 1.0 / (g.spacing() * g.spacing());
  double num = 0.0, den = 0.0;
  for (int k = 1; k < n - 1; ++k)
    for (int j = 1; j < n - 1; ++j)
      for (int i = 1; i < n - 1; ++i) {
        const double lap = (u.at(i + 1, j, k) + u.at(i - 1, j, k) + u.at(i, j + 1, k) +
                            u.at(i, j - 1, k) + u.at(i, j, k + 1) + u.at(i, j, k - 1) -
                            6.0 * u.at(i, j, k)) *
                           inv_h2;
        const double s = source.at(i, j, k);
        num += (lap - s) * (lap - s);
        den += s * s;
      }
  return den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
}

namespace {

struct ElectronSource {
  ScalarField density;  // g e^{Ū+U}, divided by m when normalised
  double mass;          // ∫ g e^{Ū+U}
};

ElectronSource electron_source(const ScalarField& u_bar, const ScalarField& g, const ScalarField& u,
                               bool normalised) {
  ScalarField s(g.grid());
  for (std::size_t i = 0; i < s.size(); ++i) s[i] = g[i] * std::exp(u_bar[i] + u[i]);
  const double mass = s.integral();
  if (normalised && mass > 0.0) s *= 1.0 / mass;
  return {std::move(s), mass};
}

void check_inputs(const ScalarField& u_bar, const ScalarField& g) {
  require_same_grid(u_bar.grid(), g.grid());
  require_finite(g, "g");
  require_finite(u_bar, "u_bar");
  require(g.min_value() >= 0.0, ErrorCode::InvalidField, "g must be non-negative");
  const double scale = std::max(1.0, std::abs(u_bar.max_value()));
  require(u_bar.min_value() >= -1e-12 * scale, ErrorCode::InvalidField, "u_bar must be non-negative");
}

HatSolution picard(const ScalarField& u_bar, const ScalarField& g_in, const SolverSettings& settings,
                   const ScalarField* initial, bool fixed) {
  settings.validate();
  check_inputs(u_bar, g_in);
  ScalarField g = g_in;
  if (fixed) {
    const double total = g.integral();
    if (std::abs(total - 1.0) > 1e-3) {
      if (!settings.normalize_g || total <= 0.0) {
        std::ostringstream msg;
        msg << "fixed-charge mode needs ∫g = 1, got " << total;
        throw Error(ErrorCode::InvalidNormalization, msg.str());
      }
    }
    if (settings.normalize_g && total > 0.0) g *= 1.0 / total;
  }

  auto solver = poisson_solver(g.grid());
  HatSolution out{initial ? *initial : ScalarField(g.grid()), 0.0, 0.0, 0, settings.damping, {}};
  if (initial) {
    require_same_grid(initial->grid(), g.grid());
    require(initial->max_value() <= 1e-12, ErrorCode::InvalidField, "initial Û must be non-positive");
  }

  ElectronSource src = electron_source(u_bar, g, out.u_hat, fixed);
  double res = relative_residual(out.u_hat, src.density);
  out.residual_history.push_back(res);
  double theta = settings.damping;

  while (res >= settings.tolerance) {
    if (out.iterations >= settings.max_iterations) {
      std::ostringstream msg;
      msg << "screening solve did not converge in " << settings.max_iterations
          << " iterations (residual " << res << ")";
      throw ConvergenceError(msg.str(), res, out.iterations);
    }
    const ScalarField pulled = solver->convolve(src.density);
    for (;;) {
      ScalarField candidate(g.grid());
      for (std::size_t i = 0; i < candidate.size(); ++i)
        candidate[i] = (1.0 - theta) * out.u_hat[i] - theta * pulled[i];
      ElectronSource cand_src = electron_source(u_bar, g, candidate, fixed);
      const double cand_res = relative_residual(candidate, cand_src.density);
      if (cand_res <= res) {
        out.u_hat = std::move(candidate);
        src = std::move(cand_src);
        res = cand_res;
        break;
      }
      theta *= 0.5;
      if (theta < settings.min_damping) {
        std::ostringstream msg;
        msg << "backtracking exhausted (damping below " << settings.min_damping << ", residual "
            << res << ")";
        throw ConvergenceError(msg.str(), res, out.iterations);
      }
    }
    ++out.iterations;
    out.residual_history.push_back(res);
  }
  out.residual = res;
  out.electron_mass = src.mass;
  out.final_damping = theta;

  if (fixed) {
    const double guard = std::exp(-(settings.K - 1));
    if (!(out.electron_mass > guard)) {
      double lower = 0.0;
      for (std::size_t i = 0; i < g.size(); ++i) lower += g[i] * std::exp(-std::abs(out.u_hat[i]));
      lower *= g.grid().cell_volume();
      std::ostringstream msg;
      msg << "electron mass " << out.electron_mass << " fell below e^{-(K-1)} = " << guard
          << " (∫ g e^{-|Û|} = " << lower << ")";
      throw GuardError(msg.str(), out.electron_mass, lower);
    }
  }
  return out;
}

}  // namespace

HatSolution solve_hat_variable(const ScalarField& u_bar, const ScalarField& g,
                               const SolverSettings& settings, const ScalarField* initial) {
  return picard(u_bar, g, settings, initial, false);
}

HatSolution solve_hat_fixed(const ScalarField& u_bar, const ScalarField& g,
                            const SolverSettings& settings, const ScalarField* initial) {
  return picard(u_bar, g, settings, initial, true);
}

double evaluate_JV(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g,
                   double dirichlet_weight) {
  require_same_grid(h.grid(), u_bar.grid());
  require_same_grid(h.grid(), g.grid());
  double potential = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) potential += g[i] * std::exp(h[i] + u_bar[i]);
  return dirichlet_weight * dirichlet_energy(h) + potential * h.grid().cell_volume();
}

double jv_weak_residual(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g,
                        const ScalarField& delta, double dirichlet_weight) {
  require_same_grid(h.grid(), delta.grid());
  double reaction = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) reaction += g[i] * std::exp(h[i] + u_bar[i]) * delta[i];
  return 2.0 * dirichlet_weight * dirichlet_product(h, delta) + reaction * h.grid().cell_volume();
}

double L_K(double x, int K) {
  require(K >= 2, ErrorCode::InvalidParameter, "L_K needs K >= 2");
  const double floor = std::exp(-static_cast<double>(K));
  return x > floor ? std::log(x) : -static_cast<double>(K);
}

double L_K_derivative(double x, int K) {
  require(K >= 2, ErrorCode::InvalidParameter, "L_K needs K >= 2");
  return x > std::exp(-static_cast<double>(K)) ? 1.0 / x : 0.0;
}

double M_K(double x, int K) { return x * L_K_derivative(x, K); }

double evaluate_JK(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g, int K,
                   double dirichlet_weight) {
  require(K >= 2, ErrorCode::InvalidParameter, "J_K needs K >= 2");
  require_same_grid(h.grid(), u_bar.grid());
  require_same_grid(h.grid(), g.grid());
  double mass = 0.0;
  for (std::size_t i = 0; i < h.size(); ++i) mass += g[i] * std::exp(h[i] + u_bar[i]);
  mass *= h.grid().cell_volume();
  return dirichlet_weight * dirichlet_energy(h) + L_K(mass, K);
}

BouchutCertificate bouchut_certificate(const ScalarField& g, const ScalarField& u, double constant) {
  require_same_grid(g.grid(), u.grid());
  require_finite(g, "g");
  require_finite(u, "u");
  BouchutCertificate c;
  double s = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * std::exp(-std::abs(u[i]));
  c.measured = s * g.grid().cell_volume();
  c.u_weak_l3 = weak_lp_quasinorm(u, 3.0);
  c.g_linf = lp_norm(g, kInfinity);
  c.constant = constant;
  c.lower_bound = std::exp(-constant * c.u_weak_l3 * std::cbrt(c.g_linf));
  c.holds = c.measured >= c.lower_bound;
  return c;
}

double fit_bouchut_constant(
    const std::vector<std::pair<const ScalarField*, const ScalarField*>>& battery) {
  double c = 0.0;
  for (const auto& [g, u] : battery) {
    const auto cert = bouchut_certificate(*g, *u, 0.0);
    const double scale = cert.u_weak_l3 * std::cbrt(cert.g_linf);
    if (scale <= 0.0 || cert.measured <= 0.0) continue;
    c = std::max(c, -std::log(cert.measured) / scale);
  }
  return c;
}

PotentialSplit solve_split_field(const ScalarField& rho, const ScalarField& g, ChargeMode mode,
                                 const SolverSettings& settings, const ScalarField* warm_start) {
  require_same_grid(rho.grid(), g.grid());
  require_finite(rho, "rho");
  require(rho.min_value() >= 0.0, ErrorCode::InvalidField, "rho must be non-negative");
  ScalarField u_bar = solve_free_space_poisson(rho);
  HatSolution hat = mode == ChargeMode::VariableCharge
                        ? solve_hat_variable(u_bar, g, settings, warm_start)
                        : solve_hat_fixed(u_bar, g, settings, warm_start);
  VectorField e_bar = negative_gradient(u_bar);
  VectorField e_hat = negative_gradient(hat.u_hat);
  VectorField e_total = e_bar;
  e_total += e_hat;
  PotentialSplit split{std::move(u_bar), std::move(hat.u_hat), std::move(e_bar), std::move(e_hat),
                       std::move(e_total), mode, hat.electron_mass, hat.residual, hat.iterations,
                       lp_norm(rho, 1.0), lp_norm(rho, 5.0 / 3.0)};
  return split;
}

double laplacian_mass(const ScalarField& u_hat) {
  return laplacian_7pt(u_hat).integral();
}

RegularityReport regularity_report(const PotentialSplit& split, const ScalarField& g) {
  RegularityReport r;
  r.u_hat_weak_l3 = weak_lp_quasinorm(split.u_hat, 3.0);
  r.e_hat_weak_l32 = weak_lp_quasinorm(split.e_hat, 1.5);
  r.u_hat_linf = lp_norm(split.u_hat, kInfinity);
  r.e_hat_linf = lp_norm(split.e_hat, kInfinity);
  r.e_hat_holder_half = holder_quotient(split.e_hat, 0.5);
  r.u_bar_weak_l3 = weak_lp_quasinorm(split.u_bar, 3.0);
  r.rho_l1 = split.source_l1;
  r.rho_l53 = split.source_l53;
  r.exponent_scale = std::pow(r.rho_l1, 1.0 / 6.0) * std::pow(r.rho_l53, 5.0 / 6.0);
  r.g_l1 = lp_norm(g, 1.0);
  r.g_linf = lp_norm(g, kInfinity);
  r.laplacian_mass = laplacian_mass(split.u_hat);
  return r;
}

double required_growth_constant(double value, double prefactor, double scale) {
  if (value <= 0.0) return 0.0;
  require(prefactor > 0.0 && scale >= 0.0, ErrorCode::InvalidParameter,
          "growth constant fit needs a positive prefactor");
  auto f = [&](double C) { return C * prefactor * std::exp(C * scale); };
  double lo = 0.0, hi = 1.0;
  while (f(hi) < value) hi *= 2.0;
  for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    (f(mid) < value ? lo : hi) = mid;
  }
  return hi;
}

double fit_regularity_constant(const std::vector<RegularityReport>& battery) {
  double C = 0.0;
  for (const auto& r : battery) {
    C = std::max(C, required_growth_constant(r.u_hat_weak_l3, r.g_l1, r.exponent_scale));
    C = std::max(C, required_growth_constant(r.e_hat_weak_l32, r.g_l1, r.exponent_scale));
    C = std::max(C, required_growth_constant(r.e_hat_holder_half, r.g_linf, r.exponent_scale));
  }
  return C;
}

}  // namespace vpme
