#pragma once

#include <cmath>
#include <string_view>
#include <utility>
#include <vector>

#include "vpme/field_ops.hpp"
#include "vpme/grid.hpp"

namespace vpme {

enum class ChargeMode { VariableCharge, FixedCharge };

std::string_view to_string(ChargeMode mode);
ChargeMode parse_charge_mode(std::string_view text);

struct SolverSettings {
  double tolerance = 1e-8;
  int max_iterations = 500;
  double damping = 1.0;
  double min_damping = 1.0 / 64.0;
  int K = 30;
  bool normalize_g = false;

  void validate() const;
};

/// Outcome of a screening solve for Û.
struct HatSolution {
  ScalarField u_hat;
  /// ∫ g e^{Ū+Û}; in fixed-charge mode this is the normalisation m.
  double electron_mass = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double final_damping = 1.0;
  std::vector<double> residual_history;
};

/// Relative residual ‖Δ_7 u - s‖_2 / ‖s‖_2 over interior cells.
double relative_residual(const ScalarField& u, const ScalarField& source);

/// ΔÛ = g e^{Ū+Û} by damped Picard iteration on Û = -G*(g e^{Ū+Û}).
/// `initial` defaults to Û_0 = 0; any supplied start must be <= 0.
HatSolution solve_hat_variable(const ScalarField& u_bar, const ScalarField& g,
                               const SolverSettings& settings,
                               const ScalarField* initial = nullptr);

/// ΔÛ = g e^{Ū+Û} / m with m = ∫ g e^{Ū+Û} refreshed each sweep.
HatSolution solve_hat_fixed(const ScalarField& u_bar, const ScalarField& g,
                            const SolverSettings& settings, const ScalarField* initial = nullptr);

/// Weight on the Dirichlet term of J_V and J_K. With 1/2 the Euler-Lagrange
/// equation is exactly ΔÛ = g e^{Ū+Û}; weight 1 is the literal ∫|∇h|^2 form.
inline constexpr double kEulerLagrangeDirichletWeight = 0.5;

/// J_V[h] = w ∫|∇h|^2 + ∫ g e^{h+Ū}.
double evaluate_JV(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g,
                   double dirichlet_weight = kEulerLagrangeDirichletWeight);

/// Weak-form residual of J_V at h tested against delta: 2w ∫∇h·∇δ + ∫ g e^{h+Ū} δ.
double jv_weak_residual(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g,
                        const ScalarField& delta,
                        double dirichlet_weight = kEulerLagrangeDirichletWeight);

/// Truncated logarithm: log x above e^{-K}, -K below. Non-decreasing with x L_K'(x) in [0,1].
double L_K(double x, int K);
double L_K_derivative(double x, int K);
double M_K(double x, int K);

/// J_K[h] = w ∫|∇h|^2 + L_K(∫ g e^{Ū+h}).
double evaluate_JK(const ScalarField& h, const ScalarField& u_bar, const ScalarField& g, int K,
                   double dirichlet_weight = kEulerLagrangeDirichletWeight);

struct BouchutCertificate {
  /// exp(-c ‖u‖_{L^{3,∞}} ‖g‖_∞^{1/3}).
  double lower_bound = 0.0;
  /// ∫ g e^{-|u|}.
  double measured = 0.0;
  double u_weak_l3 = 0.0;
  double g_linf = 0.0;
  double constant = 0.0;
  bool holds = false;
};

BouchutCertificate bouchut_certificate(const ScalarField& g, const ScalarField& u, double constant);

/// Smallest c for which every (g, u) pair's certificate holds.
double fit_bouchut_constant(const std::vector<std::pair<const ScalarField*, const ScalarField*>>& battery);

struct PotentialSplit {
  ScalarField u_bar;
  ScalarField u_hat;
  VectorField e_bar;
  VectorField e_hat;
  VectorField e_total;
  ChargeMode mode = ChargeMode::VariableCharge;
  /// ∫ g e^{Ū+Û}; the normalisation m in fixed-charge mode.
  double electron_mass = 0.0;
  double residual = 0.0;
  int iterations = 0;
  double source_l1 = 0.0;
  double source_l53 = 0.0;

  ScalarField potential() const { return u_bar + u_hat; }
};

/// Ū = G*ρ, the mode's Û solve, and E = Ē + Ê = -∇(Ū+Û).
PotentialSplit solve_split_field(const ScalarField& rho, const ScalarField& g, ChargeMode mode,
                                 const SolverSettings& settings,
                                 const ScalarField* warm_start = nullptr);

/// ∫ Δ_7 Û over interior cells.
double laplacian_mass(const ScalarField& u_hat);

struct RegularityReport {
  double u_hat_weak_l3 = 0.0;
  double e_hat_weak_l32 = 0.0;
  double u_hat_linf = 0.0;
  double e_hat_linf = 0.0;
  double e_hat_holder_half = 0.0;
  double u_bar_weak_l3 = 0.0;
  double rho_l1 = 0.0;
  double rho_l53 = 0.0;
  /// ‖ρ‖_1^{1/6} ‖ρ‖_{5/3}^{5/6}, the exponent scale of the bounds.
  double exponent_scale = 0.0;
  double g_l1 = 0.0;
  double g_linf = 0.0;
  double laplacian_mass = 0.0;
};

RegularityReport regularity_report(const PotentialSplit& split, const ScalarField& g);

/// Smallest C with value <= C * prefactor * exp(C * scale), found by bisection.
double required_growth_constant(double value, double prefactor, double scale);

/// Single C making ‖Û‖_{L^{3,∞}}, ‖Ê‖_{L^{3/2,∞}} and the Hölder quotient of Ê
/// all obey C ‖g‖ exp(C ‖ρ‖_1^{1/6} ‖ρ‖_{5/3}^{5/6}) across the battery.
double fit_regularity_constant(const std::vector<RegularityReport>& battery);

/// Right-hand side C ‖g‖ exp(C s) of the regularity bounds.
inline double regularity_bound(double C, double g_norm, double scale) {
  return C * g_norm * std::exp(C * scale);
}

}  // namespace vpme
