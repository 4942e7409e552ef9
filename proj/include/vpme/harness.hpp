#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "vpme/diagnostics.hpp"
#include "vpme/electrostatics.hpp"
#include "vpme/kinetics.hpp"
#include "vpme/stability.hpp"

namespace vpme {

inline constexpr std::string_view kArtifactVersion = "1.0.0";

struct ConfinementSpec {
  /// `matched` makes g the deposit of the unshifted initial sample, so ρ = g at t = 0.
  bool matched = false;
  SpatialProfile profile = SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.8);
  double mass = 1.0;
};

struct ScenarioConfig {
  /// Exact bytes the config was parsed from; the manifest hash covers these.
  std::string text;
  GridSpec grid{4.0, 48};
  std::size_t particles = 10000;
  std::uint64_t seed = 1;
  ChargeMode mode = ChargeMode::VariableCharge;
  double dt = 1e-2;
  double T = 1.0;
  int snapshot_every = 10;
  ConfinementSpec g;
  InitialDataSpec f0;
  SolverSettings solver;
  std::vector<double> orders{2.0, 4.0, 6.0};
};

/// Parses the flat `key = value` format; errors carry `origin:line`.
ScenarioConfig parse_config(std::string_view text, std::string_view origin = "<config>");
ScenarioConfig load_config(const std::filesystem::path& path);

std::uint64_t fnv1a64(std::string_view bytes);
std::string hex64(std::uint64_t value);
std::uint64_t file_hash(const std::filesystem::path& path);

ScalarField build_confinement(const ScenarioConfig& config);
SimulationState initial_state(const ScenarioConfig& config);

struct SnapshotEntry {
  std::uint64_t step = 0;
  double t = 0.0;
  std::string file;
  std::string hash;
};

struct RunManifest {
  std::string config_hash;
  std::string version{kArtifactVersion};
  std::vector<SnapshotEntry> snapshots;
  std::vector<std::string> diagnostic_files;
  std::string started_utc;
  double wall_seconds = 0.0;

  std::string to_json() const;
  static RunManifest from_json(std::string_view text);
  static RunManifest load(const std::filesystem::path& run_dir);
};

/// Runs the scenario into `out_dir`: config.txt, snapshots/, diagnostics.csv, manifest.json.
RunManifest cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir);

struct SolveFieldOutcome {
  PotentialSplit split;
  RegularityReport regularity;
  std::string certificate_json;
};

SolveFieldOutcome cmd_solve_field(const std::filesystem::path& rho_path,
                                  const std::filesystem::path& g_path, ChargeMode mode,
                                  double tolerance, const std::filesystem::path& out_dir,
                                  bool normalize_g = false);

/// Snapshots of a run directory together with their re-solved fields.
std::vector<RunFrame> load_run_frames(const std::filesystem::path& run_dir, ScenarioConfig* config = nullptr);

struct DiagnoseOutcome {
  std::vector<EnergyReport> energies;
  MomentReport moments;
  std::vector<std::vector<InterpolationVerdict>> interpolation;
  MomentEnvelopeVerdict envelope;
  bool passed = false;
};

DiagnoseOutcome cmd_diagnose(const std::filesystem::path& run_dir, const std::vector<double>& orders,
                             const std::filesystem::path& csv_path, double battery_C = 10.0);

struct StabilityOutcome {
  StabilityReport report;
  FieldStabilityVerdict fields;
  bool passed = false;
};

StabilityOutcome cmd_stability(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                               std::size_t exact_cap, const std::filesystem::path& csv_path,
                               double battery_C = 10.0);

struct BenchRow {
  std::string kind;
  std::size_t size = 0;
  int repeat = 0;
  double seconds = 0.0;
};

/// Times Poisson solves at each grid size and particle pushes at each ensemble size. Each row
/// holds seconds per call, averaged over a batch of at least 50 ms.
std::vector<BenchRow> cmd_bench(const std::vector<int>& grid_sizes,
                                const std::vector<std::size_t>& particle_counts, int repeats,
                                const std::filesystem::path& csv_path);

}  // namespace vpme
