#include <gtest/gtest.h>

#include <boost/math/special_functions/beta.hpp>
#include <filesystem>
#include <fstream>
#include <random>

#include "oracles.hpp"
#include "vpme/diagnostics.hpp"
#include "vpme/kinetics.hpp"
#include "vpme/log.hpp"
#include "vpme/transport.hpp"

using namespace vpme;

namespace {

InitialDataSpec maxwellian_spec(double sigma_x = 0.4, double sigma_v = 0.5) {
  InitialDataSpec s;
  s.spatial = SpatialProfile::gaussian({0, 0, 0}, sigma_x);
  s.velocity = VelocityProfile::maxwellian(sigma_v);
  return s;
}

ParticleEnsemble single(Vec3 x, Vec3 v) {
  ParticleEnsemble e;
  e.ids = {0};
  e.x = {x};
  e.v = {v};
  return e;
}

SimulationState frozen_state(ParticleEnsemble ens, AccelerationField field) {
  SimulationState st;
  st.ensemble = std::move(ens);
  st.grid = GridSpec(4.0, 64);
  st.frozen_field = std::move(field);
  return st;
}

double speed(const Vec3& v) { return std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]); }

}  // namespace

TEST(Sampling, PointColdSpecGivesOneParticle) {
  InitialDataSpec s;
  s.spatial = SpatialProfile::point({0.3, -0.2, 0.1});
  s.velocity = VelocityProfile::cold({1.0, 2.0, -0.5});
  const ParticleEnsemble e = sample_initial(s, 1, 42);
  ASSERT_EQ(e.size(), 1u);
  EXPECT_EQ(e.weight(), 1.0);
  EXPECT_EQ(e.x[0], (Vec3{0.3, -0.2, 0.1}));
  EXPECT_EQ(e.v[0], (Vec3{1.0, 2.0, -0.5}));
  EXPECT_EQ(e.ids[0], 0u);
}

TEST(Sampling, MaxwellianSecondMomentMatchesClosedForm) {
  const double sigma = 0.7;
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.4, sigma), 100000, 3);
  const double m2 = moment_values(e, {2.0})[0];
  EXPECT_NEAR(m2 / (3.0 * sigma * sigma), 1.0, 0.01);
}

TEST(Sampling, PowerLawMomentsMatchBetaFunctionRatio) {
  const double r = 12.0;
  InitialDataSpec s;
  s.spatial = SpatialProfile::gaussian({0, 0, 0}, 0.4);
  s.velocity = VelocityProfile::power_law(r);
  const ParticleEnsemble e = sample_initial(s, 200000, 9);
  for (double k : {2.0, 4.0}) {
    // E|v|^k for density ∝ (1+|v|)^{-r}: B(3+k, r-3-k) / B(3, r-3).
    const double exact = boost::math::beta(3.0 + k, r - 3.0 - k) / boost::math::beta(3.0, r - 3.0);
    EXPECT_NEAR(s.velocity.central_moment(k) / exact, 1.0, 1e-12);
    EXPECT_NEAR(moment_values(e, {k})[0] / exact, 1.0, 0.03);
  }
}

TEST(Sampling, SameSeedIsBitIdentical) {
  const ParticleEnsemble a = sample_initial(maxwellian_spec(), 5000, 11);
  const ParticleEnsemble b = sample_initial(maxwellian_spec(), 5000, 11);
  const ParticleEnsemble c = sample_initial(maxwellian_spec(), 5000, 12);
  EXPECT_EQ(a.x, b.x);
  EXPECT_EQ(a.v, b.v);
  EXPECT_EQ(a.ids, b.ids);
  EXPECT_NE(a.x, c.x);
}

TEST(Sampling, IdsArePermutationAndMassIsOne) {
  const ParticleEnsemble e = sample_initial(maxwellian_spec(), 1000, 1);
  EXPECT_NO_THROW(e.validate());
  EXPECT_DOUBLE_EQ(e.weight() * e.size(), 1.0);
  ParticleEnsemble bad = e;
  bad.ids[3] = bad.ids[4];
  EXPECT_THROW(bad.validate(), Error);
}

TEST(Sampling, ShiftTranslatesEveryPosition) {
  InitialDataSpec s = maxwellian_spec();
  const ParticleEnsemble a = sample_initial(s, 100, 5);
  s.shift = {1e-3, 0, 0};
  const ParticleEnsemble b = sample_initial(s, 100, 5);
  for (std::size_t p = 0; p < a.size(); ++p) EXPECT_NEAR(b.x[p][0] - a.x[p][0], 1e-3, 1e-15);
  EXPECT_EQ(a.v, b.v);
}

TEST(Sampling, RejectsHeavyTailedPowerLaw) {
  InitialDataSpec s;
  s.velocity = VelocityProfile::power_law(3.0);
  try {
    s.validate();
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::InvalidSpec);
  }
}

TEST(Deposit, ParticleAtCellCentre) {
  const GridSpec grid(1.0, 8);
  const ScalarField rho = deposit_density(single({grid.center(3), grid.center(4), grid.center(5)}, {0, 0, 0}), grid);
  EXPECT_DOUBLE_EQ(rho.at(3, 4, 5), 1.0 / grid.cell_volume());
  EXPECT_DOUBLE_EQ(rho.integral(), 1.0);
}

TEST(Deposit, ParticleAtCellCornerSplitsEvenly) {
  const GridSpec grid(1.0, 8);
  const double c = 0.5 * (grid.center(3) + grid.center(4));
  const ScalarField rho = deposit_density(single({c, c, c}, {0, 0, 0}), grid);
  for (int k = 3; k <= 4; ++k)
    for (int j = 3; j <= 4; ++j)
      for (int i = 3; i <= 4; ++i) EXPECT_NEAR(rho.at(i, j, k) * grid.cell_volume(), 0.125, 1e-15);
}

TEST(Deposit, GaussianEnsembleMatchesAnalyticDensity) {
  const GridSpec grid(4.0, 48);
  const double sigma = 0.5;
  const ParticleEnsemble e = sample_initial(maxwellian_spec(sigma), 1000000, 21);
  const ScalarField rho = deposit_density(e, grid);
  double l1 = 0.0;
  for (std::size_t i = 0; i < rho.size(); ++i)
    l1 += std::abs(rho[i] - oracle::gaussian_density(oracle::radius(grid, i), sigma)) * grid.cell_volume();
  EXPECT_LT(l1, 0.02);
}

TEST(Deposit, TruncationWhenTooMuchMassLeavesBox) {
  const GridSpec grid(1.0, 8);
  ParticleEnsemble e = sample_initial(maxwellian_spec(0.2), 1000, 1);
  for (std::size_t p = 0; p < 50; ++p) e.x[p] = {5.0, 0.0, 0.0};
  try {
    deposit_density(e, grid);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::Truncation);
  }
  const Deposit d = deposit_density_report(e, grid, 0.1);
  EXPECT_EQ(d.out_of_box, 50u);
  EXPECT_NEAR(d.in_box_mass, 0.95, 1e-12);
}

TEST(Gather, UniformFieldGivesUniformAcceleration) {
  const GridSpec grid(1.0, 8);
  VectorField E(grid);
  for (auto& v : E.component(0)) v = 1.0;
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.15), 200, 2);
  std::size_t out = 0;
  const auto acc = interpolate_acceleration(E, e.x, &out);
  for (std::size_t p = 0; p < e.size(); ++p) {
    if (!in_box(grid, e.x[p])) continue;
    EXPECT_DOUBLE_EQ(acc[p][0], 1.0);
    EXPECT_EQ(acc[p][1], 0.0);
  }
}

TEST(Gather, ParticleAtCellCentreReadsGridValue) {
  const GridSpec grid(1.0, 8);
  ScalarField u(grid);
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> U(-1, 1);
  for (auto& v : u.values()) v = U(rng);
  const std::vector<Vec3> x{{grid.center(2), grid.center(5), grid.center(6)}};
  EXPECT_EQ(interpolate_scalar(u, x)[0], u.at(2, 5, 6));
}

TEST(Gather, OutOfBoxParticlesGetZeroAndAreCounted) {
  const GridSpec grid(1.0, 8);
  VectorField E(grid);
  for (auto& v : E.component(2)) v = 3.0;
  std::size_t out = 0;
  const auto acc = interpolate_acceleration(E, {{2.0, 0.0, 0.0}, {0.0, 0.0, 0.0}}, &out);
  EXPECT_EQ(out, 1u);
  EXPECT_EQ(acc[0], (Vec3{0, 0, 0}));
  EXPECT_DOUBLE_EQ(acc[1][2], 3.0);
}

TEST(Gather, IsAdjointOfDeposit) {
  const GridSpec grid(2.0, 16);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.4), 20000, 4);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> U(-1, 1);
  for (int trial = 0; trial < 3; ++trial) {
    ScalarField u(grid);
    for (auto& v : u.values()) v = U(rng);
    const double lhs = inner_product(deposit_density(e, grid), u);
    double rhs = 0.0;
    for (double g : interpolate_scalar(u, e.x)) rhs += e.weight() * g;
    EXPECT_NEAR(lhs, rhs, 1e-13 * (std::abs(lhs) + 1.0));
  }
}

TEST(Step, ZeroFieldAdvancesBallistically) {
  const GridSpec grid(4.0, 32);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.5, 0.3), 5000, 6);
  SimulationState st = make_state(e, grid, deposit_density(e, grid), ChargeMode::VariableCharge, {});
  const double dt = 1e-2;
  step(st, dt);
  for (std::size_t p = 0; p < e.size(); ++p)
    for (int a = 0; a < 3; ++a)
      ASSERT_NEAR(st.ensemble.x[p][a], e.x[p][a] + dt * e.v[p][a], 1e-12 * std::max(1.0, speed(e.v[p])));
}

TEST(Step, SelfConvergesAtSecondOrder) {
  const GridSpec grid(4.0, 32);
  InitialDataSpec s = maxwellian_spec(0.5, 0.3);
  const ParticleEnsemble e = sample_initial(s, 2000, 8);
  const ScalarField g = discretize(SpatialProfile::gaussian({0.3, 0, 0}, 0.5), grid);
  auto final_positions = [&](double dt) {
    SimulationState st = make_state(e, grid, g, ChargeMode::VariableCharge, {});
    run(st, RunSettings{dt, 0.5, 1000}, nullptr);
    return st.ensemble.x;
  };
  const auto x1 = final_positions(0.04), x2 = final_positions(0.02), x3 = final_positions(0.01);
  auto dist = [](const std::vector<Vec3>& a, const std::vector<Vec3>& b) {
    double s = 0.0;
    for (std::size_t p = 0; p < a.size(); ++p)
      for (int d = 0; d < 3; ++d) s += (a[p][d] - b[p][d]) * (a[p][d] - b[p][d]);
    return std::sqrt(s);
  };
  EXPECT_NEAR(dist(x1, x2) / dist(x2, x3), 4.0, 0.8);
}

TEST(Step, HarmonicOscillatorPeriodAndEnergy) {
  SimulationState st = frozen_state(single({1.0, 0, 0}, {0, 0, 0}), [](const Vec3& x) {
    return Vec3{-x[0], -x[1], -x[2]};
  });
  const double dt = 1e-3;
  double prev_v = 0.0, e_max = 0.0, e_min = kInfinity;
  std::vector<double> crossings;
  for (int k = 0; k < 20000; ++k) {
    step(st, dt);
    const double v = st.ensemble.v[0][0], x = st.ensemble.x[0][0];
    const double e = v * v + x * x;
    e_max = std::max(e_max, e);
    e_min = std::min(e_min, e);
    // Velocity changes sign from + to - once per period, at the right turning point.
    if (prev_v > 0.0 && v <= 0.0) crossings.push_back(st.t - dt * v / (v - prev_v));
    prev_v = v;
  }
  ASSERT_GE(crossings.size(), 2u);
  const double period = (crossings.back() - crossings.front()) / (crossings.size() - 1);
  EXPECT_NEAR(period / (2.0 * std::numbers::pi), 1.0, 0.01);
  EXPECT_LT(e_max - e_min, 1e-6);
}

TEST(Step, FrozenFlowPreservesPhaseSpaceVolume) {
  auto field = [](const Vec3& x) {
    const double r2 = x[0] * x[0] + x[1] * x[1] + x[2] * x[2];
    const double f = -1.0 / std::pow(1.0 + r2, 1.5);
    return Vec3{f * x[0] + 0.3 * x[1] * x[1], f * x[1], f * x[2] + 0.1};
  };
  const double eps = 1e-6;
  std::array<double, 6> base{0.4, -0.3, 0.2, 0.5, 0.1, -0.4};
  auto flow = [&](std::array<double, 6> z) {
    SimulationState st = frozen_state(single({z[0], z[1], z[2]}, {z[3], z[4], z[5]}), field);
    for (int k = 0; k < 100; ++k) step(st, 1e-2);
    const auto& x = st.ensemble.x[0];
    const auto& v = st.ensemble.v[0];
    return std::array<double, 6>{x[0], x[1], x[2], v[0], v[1], v[2]};
  };
  double J[6][6];
  for (int j = 0; j < 6; ++j) {
    auto zp = base, zm = base;
    zp[j] += eps;
    zm[j] -= eps;
    const auto fp = flow(zp), fm = flow(zm);
    for (int i = 0; i < 6; ++i) J[i][j] = (fp[i] - fm[i]) / (2 * eps);
  }
  // Determinant by Gaussian elimination with partial pivoting.
  double det = 1.0;
  for (int c = 0; c < 6; ++c) {
    int piv = c;
    for (int r = c + 1; r < 6; ++r)
      if (std::abs(J[r][c]) > std::abs(J[piv][c])) piv = r;
    if (piv != c) {
      std::swap(J[piv], J[c]);
      det = -det;
    }
    det *= J[c][c];
    for (int r = c + 1; r < 6; ++r) {
      const double f = J[r][c] / J[c][c];
      for (int k = c; k < 6; ++k) J[r][k] -= f * J[c][k];
    }
  }
  EXPECT_NEAR(det, 1.0, 1e-3);
}

TEST(Step, VelocitySupportGrowthBoundedByField) {
  const GridSpec grid(4.0, 32);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.4, 0.3), 4000, 10);
  const ScalarField g = discretize(SpatialProfile::gaussian({0.6, 0, 0}, 0.5), grid);
  SimulationState st = make_state(e, grid, g, ChargeMode::FixedCharge, {});
  double vmax0 = 0.0, vmax = 0.0, emax = 0.0, t_end = 0.0;
  run(st, RunSettings{1e-2, 0.5, 1}, [&](const SimulationState& s) {
    double v = 0.0;
    for (const auto& u : s.ensemble.v) v = std::max(v, speed(u));
    if (s.step_count == 0) vmax0 = v;
    vmax = v;
    emax = std::max(emax, lp_norm(s.split->e_total, kInfinity));
    t_end = s.t;
  });
  EXPECT_LE(vmax - vmax0, t_end * emax + 1e-12);
}

TEST(Step, InBoxMassNeverIncreases) {
  const GridSpec grid(1.0, 16);
  InitialDataSpec s = maxwellian_spec(0.2, 1.0);
  const ParticleEnsemble e = sample_initial(s, 3000, 12);
  SimulationState st = make_state(e, grid, deposit_density(e, grid), ChargeMode::VariableCharge, {});
  double prev = 1.0;
  bool any_exit = false;
  for (int k = 0; k < 40; ++k) {
    step(st, 5e-3);
    const Deposit d = deposit_density_report(st.ensemble, grid, 1.0);
    EXPECT_LE(d.in_box_mass, prev + 1e-15);
    if (d.in_box_mass == prev) EXPECT_EQ(d.out_of_box, static_cast<std::size_t>(std::llround((1.0 - prev) * 3000)));
    any_exit = any_exit || d.out_of_box > 0;
    prev = d.in_box_mass;
  }
  EXPECT_TRUE(any_exit);
}

TEST(Step, CflHalvingAndFailureLeaveStateIntact) {
  SimulationState st = frozen_state(single({0, 0, 0}, {10.0, 0, 0}), [](const Vec3&) { return Vec3{0, 0, 0}; });
  // h = 0.125, so h/(4|V|) = 3.125e-3 and dt = 1e-2 needs two halvings.
  step(st, 1e-2);
  EXPECT_EQ(st.cfl_halvings, 2u);
  EXPECT_NEAR(st.ensemble.x[0][0], 0.1, 1e-14);

  const SimulationState before = st;
  try {
    step(st, 10.0);
    FAIL();
  } catch (const StepError& e) {
    EXPECT_EQ(e.code(), ErrorCode::Cfl);
    EXPECT_DOUBLE_EQ(e.time(), before.t);
  }
  EXPECT_EQ(st.ensemble.x, before.ensemble.x);
  EXPECT_EQ(st.t, before.t);
  EXPECT_EQ(st.step_count, before.step_count);
}

TEST(Run, ZeroDurationGivesOnlyInitialSnapshot) {
  const GridSpec grid(2.0, 16);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.3), 500, 1);
  SimulationState st = make_state(e, grid, deposit_density(e, grid), ChargeMode::VariableCharge, {});
  int calls = 0;
  run(st, RunSettings{1e-2, 0.0, 1}, [&](const SimulationState& s) {
    ++calls;
    EXPECT_EQ(s.ensemble.x, e.x);
  });
  EXPECT_EQ(calls, 1);
  EXPECT_EQ(st.step_count, 0u);
}

TEST(Run, SnapshotCadenceEndsExactlyAtT) {
  const GridSpec grid(2.0, 16);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.3), 500, 1);
  SimulationState st = make_state(e, grid, deposit_density(e, grid), ChargeMode::VariableCharge, {});
  std::vector<double> times;
  run(st, RunSettings{0.03, 0.1, 2}, [&](const SimulationState& s) { times.push_back(s.t); });
  EXPECT_EQ(times, (std::vector<double>{0.0, 0.06, 0.1}));
}

TEST(Run, ColdNeutralEquilibriumIsStationary) {
  const GridSpec grid(4.0, 32);
  InitialDataSpec s;
  s.spatial = SpatialProfile::gaussian({0, 0, 0}, 0.5);
  s.velocity = VelocityProfile::cold({0, 0, 0});
  const ParticleEnsemble e = sample_initial(s, 1000, 2);
  for (ChargeMode mode : {ChargeMode::VariableCharge, ChargeMode::FixedCharge}) {
    SimulationState st = make_state(e, grid, deposit_density(e, grid), mode, {});
    run(st, RunSettings{1e-2, 1.0, 100}, nullptr);
    EXPECT_LT(w2_exact(st.ensemble, e), 0.01);
  }
}

TEST(Run, StaleStateIsRefusedByEnergy) {
  const GridSpec grid(2.0, 16);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(0.3), 200, 1);
  SimulationState st = make_state(e, grid, deposit_density(e, grid), ChargeMode::VariableCharge, {});
  try {
    energy(st);
    FAIL();
  } catch (const Error& err) {
    EXPECT_EQ(err.code(), ErrorCode::StaleState);
  }
  refresh_field(st);
  EXPECT_NO_THROW(energy(st));
}

TEST(Snapshot, RoundTripIsBitExact) {
  const auto dir = std::filesystem::temp_directory_path() / "vpme_snap";
  std::filesystem::create_directories(dir);
  const ParticleEnsemble e = sample_initial(maxwellian_spec(), 300, 5);
  write_snapshot(dir / "s.vpmep", e, 0.25);
  const Snapshot back = read_snapshot(dir / "s.vpmep");
  EXPECT_EQ(back.t, 0.25);
  EXPECT_EQ(back.ensemble.ids, e.ids);
  EXPECT_EQ(back.ensemble.x, e.x);
  EXPECT_EQ(back.ensemble.v, e.v);
  std::ofstream(dir / "bad.vpmep") << "VPMEF1garbage";
  EXPECT_THROW(read_snapshot(dir / "bad.vpmep"), Error);
  EXPECT_THROW(read_snapshot(dir / "missing.vpmep"), Error);
}
