#include <gtest/gtest.h>

#include <random>

#include "oracles.hpp"
#include "vpme/electrostatics.hpp"
#include "vpme/log.hpp"
#include "vpme/poisson.hpp"
#include "vpme/profiles.hpp"

using namespace vpme;

namespace {

const GridSpec kGrid(4.0, 48);

ScalarField gaussian(double sigma, Vec3 c = {0, 0, 0}, const GridSpec& grid = kGrid) {
  return discretize(SpatialProfile::gaussian(c, sigma), grid);
}

/// Average of the eight cells around the origin, all at radius h√3/2.
double central_value(const ScalarField& u) {
  const int m = u.grid().cells() / 2;
  double s = 0.0;
  for (int k = m - 1; k <= m; ++k)
    for (int j = m - 1; j <= m; ++j)
      for (int i = m - 1; i <= m; ++i) s += u.at(i, j, k);
  return s / 8.0;
}

ScalarField interior_bump(const GridSpec& grid, Vec3 c, double w, double a) {
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

}  // namespace

TEST(SolverSettings, Validation) {
  SolverSettings s;
  EXPECT_NO_THROW(s.validate());
  s.tolerance = 0.0;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.damping = 1.5;
  EXPECT_THROW(s.validate(), Error);
  s = {};
  s.damping = 0.0;
  EXPECT_THROW(s.validate(), Error);
}

TEST(HatVariable, ZeroWeightGivesZeroPotential) {
  const ScalarField zero(kGrid);
  const HatSolution s = solve_hat_variable(zero, zero, SolverSettings{});
  EXPECT_EQ(lp_norm(s.u_hat, kInfinity), 0.0);
}

TEST(HatVariable, NeutralEquilibriumCancelsBarPotential) {
  const ScalarField g = gaussian(0.4);
  const ScalarField u_bar = solve_free_space_poisson(g);
  SolverSettings s;
  s.tolerance = 1e-11;
  const HatSolution h = solve_hat_variable(u_bar, g, s);
  ScalarField sum = h.u_hat + u_bar;
  EXPECT_LT(lp_norm(sum, kInfinity), 1e-8 * lp_norm(u_bar, kInfinity));
}

TEST(HatVariable, MatchesRadialShootingOracle) {
  const ScalarField g = gaussian(0.4);
  const HatSolution h = solve_hat_variable(ScalarField(kGrid), g, SolverSettings{});
  EXPECT_LT(h.residual, 1e-8);
  const oracle::RadialScreening radial([](double r) { return oracle::gaussian_density(r, 0.4); }, 1.0);
  // Compare at the radius of the cells adjacent to the origin.
  const double rc = kGrid.spacing() * std::sqrt(3.0) / 2.0;
  EXPECT_NEAR(central_value(h.u_hat) / radial.value(rc), 1.0, 0.01);
  EXPECT_LE(h.u_hat.max_value(), 1e-12);
}

TEST(HatVariable, ResidualHistoryIsNonIncreasing) {
  const ScalarField g = gaussian(0.3);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.5, {0.5, 0, 0}));
  for (double damping : {1.0, 0.7}) {
    SolverSettings s;
    s.damping = damping;
    const HatSolution h = solve_hat_variable(u_bar, g, s);
    ASSERT_GE(h.residual_history.size(), 2u);
    for (std::size_t i = 1; i < h.residual_history.size(); ++i)
      EXPECT_LE(h.residual_history[i], h.residual_history[i - 1]);
  }
}

TEST(HatVariable, ReportsConvergenceFailureWithResidual) {
  SolverSettings s;
  s.max_iterations = 1;
  s.tolerance = 1e-14;
  try {
    solve_hat_variable(ScalarField(kGrid), gaussian(0.4), s);
    FAIL();
  } catch (const ConvergenceError& e) {
    EXPECT_GT(e.residual(), 1e-14);
    EXPECT_EQ(e.iterations(), 1);
  }
}

TEST(HatVariable, RejectsPositiveInitialGuess) {
  const ScalarField bad(kGrid, 0.1);
  EXPECT_THROW(solve_hat_variable(ScalarField(kGrid), gaussian(0.4), SolverSettings{}, &bad), Error);
}

TEST(HatVariable, WarmStartReachesSameSolutionFaster) {
  const ScalarField g = gaussian(0.4);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.5));
  SolverSettings s;
  s.tolerance = 1e-10;
  const HatSolution cold = solve_hat_variable(u_bar, g, s);
  const HatSolution warm = solve_hat_variable(u_bar, g, s, &cold.u_hat);
  EXPECT_LE(warm.iterations, cold.iterations);
  ScalarField d = warm.u_hat - cold.u_hat;
  EXPECT_LT(lp_norm(d, kInfinity), 1e-8);
}

TEST(HatFixed, NeutralEquilibriumHasUnitMass) {
  const ScalarField g = gaussian(0.4);
  const ScalarField u_bar = solve_free_space_poisson(g);
  SolverSettings s;
  s.tolerance = 1e-11;
  const HatSolution h = solve_hat_fixed(u_bar, g, s);
  EXPECT_NEAR(h.electron_mass, 1.0, 1e-8);
  ScalarField sum = h.u_hat + u_bar;
  EXPECT_LT(lp_norm(sum, kInfinity), 1e-8 * lp_norm(u_bar, kInfinity));
}

TEST(HatFixed, MatchesRadialOracleMassAndLaplacianMass) {
  const ScalarField g = gaussian(0.4);
  const HatSolution h = solve_hat_fixed(ScalarField(kGrid), g, SolverSettings{});
  EXPECT_NEAR(laplacian_mass(h.u_hat), 1.0, 1e-6);
  const double m = oracle::fixed_charge_mass([](double r) { return oracle::gaussian_density(r, 0.4); });
  EXPECT_NEAR(h.electron_mass / m, 1.0, 0.01);
}

TEST(HatFixed, SeparatedSupportsRespectMassBounds) {
  const ScalarField g = gaussian(0.3, {-1.5, 0, 0});
  const ScalarField rho = gaussian(0.3, {1.5, 0, 0});
  const PotentialSplit sp = solve_split_field(rho, g, ChargeMode::FixedCharge, SolverSettings{});
  EXPECT_LE(sp.u_hat.max_value(), 1e-12);
  const BouchutCertificate cert = bouchut_certificate(g, sp.potential(), 1.0);
  // m sits between the Bouchut-type lower quantity and ‖g‖₁ e^{‖Ū‖∞}.
  EXPECT_GT(sp.electron_mass, cert.measured);
  EXPECT_LT(sp.electron_mass, g.integral() * std::exp(lp_norm(sp.u_bar, kInfinity)));
  EXPECT_GT(sp.electron_mass, std::exp(-(SolverSettings{}.K - 1)));
}

TEST(HatFixed, RejectsUnnormalisedWeightUnlessAsked) {
  const ScalarField g = discretize(SpatialProfile::gaussian({0, 0, 0}, 0.4), kGrid, 1.5);
  try {
    solve_hat_fixed(ScalarField(kGrid), g, SolverSettings{});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidNormalization);
  }
  SolverSettings s;
  s.normalize_g = true;
  const HatSolution h = solve_hat_fixed(ScalarField(kGrid), g, s);
  EXPECT_NEAR(laplacian_mass(h.u_hat), 1.0, 1e-6);
}

TEST(HatFixed, GuardRaisedWhenMassFallsBelowCutoff) {
  // A very concentrated g makes Û deep enough on its support that m drops below e^{-1}.
  const GridSpec grid(0.5, 32);
  const ScalarField g = gaussian(0.02, {0, 0, 0}, grid);
  SolverSettings s;
  s.K = 2;
  try {
    solve_hat_fixed(ScalarField(grid), g, s);
    FAIL();
  } catch (const GuardError& e) {
    EXPECT_LT(e.electron_mass(), std::exp(-(s.K - 1)));
    EXPECT_GT(e.bouchut_bound(), 0.0);
  }
  s.K = 30;
  EXPECT_NO_THROW(solve_hat_fixed(ScalarField(grid), g, s));
}

TEST(JV, ZeroPotentialGivesWeightMass) {
  const ScalarField g = gaussian(0.4);
  const ScalarField zero(kGrid);
  EXPECT_NEAR(evaluate_JV(zero, zero, g), 1.0, 1e-12);
}

TEST(JV, AtMinusBarPotential) {
  const ScalarField g = gaussian(0.4);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.6));
  const double expected = dirichlet_energy(u_bar) + g.integral();
  EXPECT_NEAR(evaluate_JV(-1.0 * u_bar, u_bar, g, 1.0), expected, 1e-12 * expected);
}

TEST(JV, MinimisedBySolutionAgainstRandomBumps) {
  const GridSpec grid(4.0, 32);
  const ScalarField g = gaussian(0.5, {0, 0, 0}, grid);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.4, {0.3, 0, 0}, grid));
  SolverSettings s;
  s.tolerance = 1e-11;
  const HatSolution h = solve_hat_variable(u_bar, g, s);
  const double j0 = evaluate_JV(h.u_hat, u_bar, g);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> c(-1.5, 1.5), w(0.3, 0.8), sign(-1, 1);
  for (int p = 0; p < 20; ++p) {
    const ScalarField d = interior_bump(grid, {c(rng), c(rng), c(rng)}, w(rng), sign(rng) < 0 ? -0.1 : 0.1);
    EXPECT_LE(j0, evaluate_JV(h.u_hat + d, u_bar, g));
  }
}

TEST(JV, GateauxDerivativeMatchesWeakResidual) {
  const GridSpec grid(4.0, 32);
  const ScalarField g = gaussian(0.5, {0, 0, 0}, grid);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.4, {0.3, 0, 0}, grid));
  SolverSettings s;
  s.tolerance = 1e-11;
  const HatSolution h = solve_hat_variable(u_bar, g, s);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> c(-1.5, 1.5), w(0.3, 0.8);
  for (int p = 0; p < 10; ++p) {
    const ScalarField d = interior_bump(grid, {c(rng), c(rng), c(rng)}, w(rng), 0.05);
    const ScalarField base = h.u_hat + interior_bump(grid, {c(rng), c(rng), c(rng)}, w(rng), 0.2);
    auto J = [&](double e) { return evaluate_JV(base + e * d, u_bar, g); };
    const double eps = 1e-2;
    const double fd = (8.0 * (J(eps) - J(-eps)) - (J(2 * eps) - J(-2 * eps))) / (12.0 * eps);
    const double weak = jv_weak_residual(base, u_bar, g, d);
    EXPECT_NEAR(fd / weak, 1.0, 1e-6);
  }
  // At the minimiser the weak residual is at the level of the solver tolerance.
  const ScalarField d = interior_bump(grid, {0.2, 0.1, 0}, 0.5, 0.1);
  EXPECT_LT(std::abs(jv_weak_residual(h.u_hat, u_bar, g, d)), 1e-8);
}

TEST(TruncatedLog, Values) {
  for (int K : {2, 10, 30}) {
    EXPECT_EQ(L_K(1.0, K), 0.0);
    EXPECT_DOUBLE_EQ(L_K(std::exp(-K), K), -K);
    EXPECT_EQ(L_K(0.0, K), -K);
  }
}

TEST(TruncatedLog, HelperBounds) {
  for (int K : {2, 10, 30}) {
    double prev = -kInfinity;
    for (int i = 0; i <= 4000; ++i) {
      const double x = std::exp(-K - 5.0 + (K + 10.0) * i / 4000.0);
      EXPECT_LE(std::abs(M_K(x, K)), 1.0);
      EXPECT_GE(x * L_K_derivative(x, K), 0.0);
      EXPECT_LE(x * L_K_derivative(x, K), 1.0);
      EXPECT_GE(L_K(x, K), prev);
      prev = L_K(x, K);
    }
  }
}

TEST(JK, EqualsDirichletPlusTruncatedLogOfMass) {
  const ScalarField g = gaussian(0.4);
  const ScalarField zero(kGrid);
  EXPECT_NEAR(evaluate_JK(zero, zero, g, 30), 0.0, 1e-12);
  const ScalarField u_bar = solve_free_space_poisson(gaussian(0.6));
  const HatSolution h = solve_hat_fixed(u_bar, g, SolverSettings{});
  const double jk = evaluate_JK(h.u_hat, u_bar, g, 30);
  EXPECT_NEAR(jk, 0.5 * dirichlet_energy(h.u_hat) + std::log(h.electron_mass), 1e-10);
  // The fixed-charge solution minimises J_K as well.
  const ScalarField d = interior_bump(kGrid, {0.3, -0.2, 0.1}, 0.5, 0.05);
  EXPECT_LE(jk, evaluate_JK(h.u_hat + d, u_bar, g, 30));
  EXPECT_LE(jk, evaluate_JK(h.u_hat - d, u_bar, g, 30));
}

TEST(Bouchut, ZeroPotentialMeasuresMass) {
  const ScalarField g = gaussian(0.4);
  const BouchutCertificate c = bouchut_certificate(g, ScalarField(kGrid), 1.0);
  EXPECT_NEAR(c.measured, 1.0, 1e-12);
  EXPECT_TRUE(c.holds);
}

TEST(Bouchut, GreenPotentialAndScaling) {
  const ScalarField g = gaussian(0.4);
  ScalarField u(kGrid);
  for (std::size_t i = 0; i < u.size(); ++i) u[i] = 1.0 / (4.0 * std::numbers::pi * oracle::radius(kGrid, i));
  const BouchutCertificate c = bouchut_certificate(g, u, 1.0);
  EXPECT_GT(c.measured, 0.0);
  EXPECT_LT(c.measured, 1.0);
  EXPECT_LT(bouchut_certificate(g, 2.0 * u, 1.0).measured, c.measured);

  std::vector<ScalarField> pots{u, solve_free_space_poisson(gaussian(0.3)), solve_free_space_poisson(gaussian(0.6))};
  std::vector<std::pair<const ScalarField*, const ScalarField*>> battery;
  for (const auto& p : pots) battery.emplace_back(&g, &p);
  const double fitted = fit_bouchut_constant(battery);
  for (const auto& p : pots) EXPECT_TRUE(bouchut_certificate(g, p, fitted).holds);
}

TEST(SplitField, NeutralEquilibriumFieldVanishes) {
  const ScalarField g = gaussian(0.4);
  SolverSettings s;
  for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
    const PotentialSplit sp = solve_split_field(g, g, mode, s);
    EXPECT_LT(lp_norm(sp.e_total, kInfinity), 10.0 * s.tolerance);
    const RegularityReport r = regularity_report(sp, g);
    EXPECT_NEAR(r.u_hat_weak_l3 / r.u_bar_weak_l3, 1.0, 1e-6);
  }
}

TEST(SplitField, TotalFieldIsExactSumOfParts) {
  const ScalarField rho = discretize(SpatialProfile::ball({0, 0, 0}, 1.0), kGrid);
  const PotentialSplit sp = solve_split_field(rho, gaussian(0.5), ChargeMode::VariableCharge, SolverSettings{});
  for (int a = 0; a < 3; ++a)
    for (std::size_t i = 0; i < sp.e_total.size(); ++i)
      ASSERT_EQ(sp.e_total.component(a)[i], sp.e_bar.component(a)[i] + sp.e_hat.component(a)[i]);
}

TEST(SplitField, FixedChargeTwoBumpHasUnitLaplacianMass) {
  const ScalarField rho = discretize(SpatialProfile::two_bump({-0.6, 0, 0}, 0.35, {0.6, 0, 0}, 0.35), kGrid);
  const PotentialSplit sp = solve_split_field(rho, gaussian(0.5), ChargeMode::FixedCharge, SolverSettings{});
  EXPECT_NEAR(laplacian_mass(sp.u_hat), 1.0, 1e-6);
  EXPECT_NEAR(regularity_report(sp, gaussian(0.5)).laplacian_mass, 1.0, 1e-6);
}

TEST(SplitField, SignComparisonAndPositivityInvariants) {
  const std::vector<std::pair<SpatialProfile, SpatialProfile>> battery{
      {SpatialProfile::gaussian({0, 0, 0}, 0.5), SpatialProfile::gaussian({0, 0, 0}, 0.5)},
      {SpatialProfile::ball({0.3, 0, 0}, 0.8), SpatialProfile::gaussian({-0.3, 0, 0}, 0.4)},
      {SpatialProfile::two_bump({-0.6, 0, 0}, 0.3, {0.6, 0, 0}, 0.3), SpatialProfile::ball({0, 0, 0}, 1.0)}};
  SolverSettings s;
  for (const auto& [r, w] : battery) {
    const ScalarField rho = discretize(r, kGrid), g = discretize(w, kGrid);
    for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
      const PotentialSplit sp = solve_split_field(rho, g, mode, s);
      EXPECT_LE(sp.u_hat.max_value(), 1e-12);
      EXPECT_GE(sp.u_bar.min_value(), 0.0);
      EXPECT_LT(sp.residual, s.tolerance);
      for (std::size_t i = 0; i < g.size(); ++i)
        ASSERT_LE(g[i] * std::exp(sp.u_bar[i] + sp.u_hat[i]), g[i] * std::exp(sp.u_bar[i]));
      if (mode == ChargeMode::FixedCharge) {
        EXPECT_LT(std::abs(laplacian_mass(sp.u_hat) - 1.0), 10.0 * s.tolerance);
        EXPECT_GT(sp.electron_mass, std::exp(-(s.K - 1)));
      }
    }
  }
}

TEST(Regularity, SingleConstantCoversVariableBattery) {
  std::vector<RegularityReport> reports;
  const ScalarField g = gaussian(0.5);
  for (const auto& r : {SpatialProfile::gaussian({0, 0, 0}, 0.4), SpatialProfile::gaussian({0, 0, 0}, 0.25),
                        SpatialProfile::ball({0, 0, 0}, 0.8),
                        SpatialProfile::two_bump({-0.6, 0, 0}, 0.3, {0.6, 0, 0}, 0.3),
                        SpatialProfile::gaussian({0.5, 0.2, 0}, 0.35)}) {
    const PotentialSplit sp = solve_split_field(discretize(r, kGrid), g, ChargeMode::VariableCharge, {});
    reports.push_back(regularity_report(sp, g));
  }
  const double C = fit_regularity_constant(reports);
  ASSERT_TRUE(std::isfinite(C));
  for (const auto& r : reports) {
    EXPECT_LE(r.u_hat_weak_l3, regularity_bound(C, r.g_l1, r.exponent_scale) * (1 + 1e-9));
    EXPECT_LE(r.e_hat_weak_l32, regularity_bound(C, r.g_l1, r.exponent_scale) * (1 + 1e-9));
    EXPECT_LE(r.e_hat_holder_half, regularity_bound(C, r.g_linf, r.exponent_scale) * (1 + 1e-9));
  }
}

TEST(ChargeModeText, RoundTrip) {
  EXPECT_EQ(parse_charge_mode("variable"), ChargeMode::VariableCharge);
  EXPECT_EQ(parse_charge_mode(to_string(ChargeMode::FixedCharge)), ChargeMode::FixedCharge);
  EXPECT_THROW(parse_charge_mode("neutral"), Error);
}
