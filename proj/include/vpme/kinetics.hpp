#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <memory>
#include <optional>
#include <string_view>
#include <vector>

#include "vpme/electrostatics.hpp"
#include "vpme/grid.hpp"
#include "vpme/profiles.hpp"

namespace vpme {

struct ParticleEnsemble {
  std::vector<std::uint64_t> ids;
  std::vector<Vec3> x;
  std::vector<Vec3> v;

  std::size_t size() const { return x.size(); }
  double weight() const { return x.empty() ? 0.0 : 1.0 / static_cast<double>(x.size()); }
  /// Throws unless the arrays agree in length and ids are a permutation of 0..N-1.
  void validate() const;
  /// Index of each id (inverse permutation).
  std::vector<std::size_t> index_by_id() const;
};

struct VelocityProfile {
  enum class Kind { Maxwellian, PowerLaw, Cold };

  Kind kind = Kind::Maxwellian;
  /// Per-axis standard deviation for Maxwellian velocities.
  double thermal_speed = 1.0;
  /// Decay exponent r of c/(1+|v|)^r.
  double decay = 6.0;
  Vec3 drift{0.0, 0.0, 0.0};

  static VelocityProfile maxwellian(double sigma, Vec3 drift = {0.0, 0.0, 0.0});
  static VelocityProfile power_law(double r);
  static VelocityProfile cold(Vec3 v0);

  void validate() const;
  /// Sup of the velocity density (infinite for Cold).
  double peak_density() const;
  /// E|v - drift|^k when finite, infinity otherwise.
  double central_moment(double k) const;
};

struct InitialDataSpec {
  SpatialProfile spatial;
  VelocityProfile velocity;
  int moment_order = 8;
  /// Rigid translation applied to every sampled position.
  Vec3 shift{0.0, 0.0, 0.0};

  void validate() const;
  /// ‖f₀‖_∞ bound: product of the spatial and velocity peaks.
  double f_inf_bound() const;
};

/// Low-discrepancy (scrambled Halton) sample of f₀, deterministic in seed.
ParticleEnsemble sample_initial(const InitialDataSpec& spec, std::size_t N, std::uint64_t seed);

/// A particle is inside the box when its trilinear stencil lies on the grid.
bool in_box(const GridSpec& grid, const Vec3& x);

struct Deposit {
  ScalarField rho;
  double in_box_mass = 0.0;
  std::size_t out_of_box = 0;
};

/// Cloud-in-cell deposition; throws Truncation if more than `max_lost` of the mass is outside.
Deposit deposit_density_report(const ParticleEnsemble& ens, const GridSpec& grid,
                               double max_lost = 0.01);
ScalarField deposit_density(const ParticleEnsemble& ens, const GridSpec& grid);

/// Trilinear gather of E at each position; out-of-box positions get zero and are counted.
std::vector<Vec3> interpolate_acceleration(const VectorField& E, const std::vector<Vec3>& positions,
                                           std::size_t* out_of_box = nullptr);
/// Same weights applied to a scalar field.
std::vector<double> interpolate_scalar(const ScalarField& u, const std::vector<Vec3>& positions);

using AccelerationField = std::function<Vec3(const Vec3&)>;

struct SimulationState {
  double t = 0.0;
  std::uint64_t step_count = 0;
  ParticleEnsemble ensemble;
  GridSpec grid{1.0, 8};
  ChargeMode mode = ChargeMode::VariableCharge;
  SolverSettings settings;
  std::shared_ptr<const ScalarField> g;
  /// Field of the current deposit; empty or stale until refresh_field runs.
  std::optional<PotentialSplit> split;
  bool stale = true;
  /// When set, particles are pushed through this field and no Poisson solve happens.
  AccelerationField frozen_field;
  std::uint64_t cfl_halvings = 0;
};

SimulationState make_state(ParticleEnsemble ens, const GridSpec& grid, ScalarField g, ChargeMode mode,
                           const SolverSettings& settings);

/// Deposit and solve for the current positions, warm-starting Û from any previous split.
void refresh_field(SimulationState& state);

inline constexpr int kMaxCflHalvings = 8;

/// Kick-drift-kick leapfrog over dt, split into 2^j substeps when dt exceeds h/(4 max|V|).
/// On failure the state is left unchanged and a StepError carrying the time is thrown.
void step(SimulationState& state, double dt);

struct RunSettings {
  double dt = 1e-2;
  double T = 1.0;
  int snapshot_every = 10;
};

/// Advances to T, calling `observer` on the initial state, every `snapshot_every` steps, and at T.
void run(SimulationState& state, const RunSettings& settings,
         const std::function<void(const SimulationState&)>& observer);

inline constexpr std::string_view kSnapshotMagic = "VPMEP1";

struct Snapshot {
  double t = 0.0;
  ParticleEnsemble ensemble;
};

void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& ens, double t);
Snapshot read_snapshot(const std::filesystem::path& path);

}  // namespace vpme
