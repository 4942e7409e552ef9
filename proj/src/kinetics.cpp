#include "vpme/kinetics.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <numbers>
#include <numeric>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>
#include <boost/math/special_functions/erf.hpp>

#include "vpme/parallel.hpp"

namespace vpme {

void ParticleEnsemble::validate() const {
  require(x.size() == v.size() && x.size() == ids.size(), ErrorCode::SizeMismatch,
          "ensemble arrays differ in length");
  std::vector<char> seen(ids.size(), 0);
  for (auto id : ids) {
    require(id < ids.size() && !seen[id], ErrorCode::IdMismatch,
            "particle ids are not a permutation of 0..N-1");
    seen[id] = 1;
  }
}

std::vector<std::size_t> ParticleEnsemble::index_by_id() const {
  std::vector<std::size_t> out(ids.size());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    require(ids[i] < ids.size(), ErrorCode::IdMismatch, "particle id out of range");
    out[ids[i]] = i;
  }
  return out;
}

VelocityProfile VelocityProfile::maxwellian(double sigma, Vec3 drift) {
  VelocityProfile p;
  p.kind = Kind::Maxwellian;
  p.thermal_speed = sigma;
  p.drift = drift;
  return p;
}

VelocityProfile VelocityProfile::power_law(double r) {
  VelocityProfile p;
  p.kind = Kind::PowerLaw;
  p.decay = r;
  return p;
}

VelocityProfile VelocityProfile::cold(Vec3 v0) {
  VelocityProfile p;
  p.kind = Kind::Cold;
  p.drift = v0;
  return p;
}

void VelocityProfile::validate() const {
  switch (kind) {
    case Kind::Maxwellian:
      require(thermal_speed > 0.0, ErrorCode::InvalidSpec, "thermal speed must be positive");
      break;
    case Kind::PowerLaw:
      require(decay > 3.0, ErrorCode::InvalidSpec,
              "velocity decay exponent must exceed 3 for a normalisable tail");
      break;
    case Kind::Cold:
      break;
  }
}

double VelocityProfile::peak_density() const {
  switch (kind) {
    case Kind::Maxwellian:
      return std::pow(2.0 * std::numbers::pi * thermal_speed * thermal_speed, -1.5);
    case Kind::PowerLaw:
      // c/(1+|v|)^r normalised: ∫ 4π s² (1+s)^{-r} ds = 8π / ((r-1)(r-2)(r-3)).
      return (decay - 1.0) * (decay - 2.0) * (decay - 3.0) / (8.0 * std::numbers::pi);
    case Kind::Cold:
      return std::numeric_limits<double>::infinity();
  }
  return 0.0;
}

double VelocityProfile::central_moment(double k) const {
  switch (kind) {
    case Kind::Maxwellian:
      // |v| is chi-distributed with 3 degrees of freedom.
      return std::pow(std::sqrt(2.0) * thermal_speed, k) * std::tgamma((3.0 + k) / 2.0) /
             std::tgamma(1.5);
    case Kind::PowerLaw:
      // |v| follows a beta-prime(3, r-3) law.
      if (k >= decay - 3.0) return std::numeric_limits<double>::infinity();
      return boost::math::beta(3.0 + k, decay - 3.0 - k) / boost::math::beta(3.0, decay - 3.0);
    case Kind::Cold:
      return k == 0.0 ? 1.0 : 0.0;
  }
  return 0.0;
}

void InitialDataSpec::validate() const {
  spatial.validate();
  velocity.validate();
  require(moment_order >= 0, ErrorCode::InvalidSpec, "moment order must be non-negative");
}

double InitialDataSpec::f_inf_bound() const {
  return spatial.peak_density() * velocity.peak_density();
}

namespace {

constexpr int kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17};
constexpr int kHaltonDims = 7;

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

double open_unit(double u) {
  constexpr double eps = 1e-15;
  return std::clamp(u, eps, 1.0 - eps);
}

double normal_quantile(double u) {
  return std::numbers::sqrt2 * boost::math::erf_inv(2.0 * u - 1.0);
}

Vec3 direction(double u1, double u2) {
  const double z = 2.0 * u1 - 1.0;
  const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
  const double phi = 2.0 * std::numbers::pi * u2;
  return {s * std::cos(phi), s * std::sin(phi), z};
}

Vec3 gaussian_point(const Vec3& c, double sigma, const double* u) {
  return {c[0] + sigma * normal_quantile(u[0]), c[1] + sigma * normal_quantile(u[1]),
          c[2] + sigma * normal_quantile(u[2])};
}

Vec3 sample_position(const SpatialProfile& p, const double* u, double selector) {
  switch (p.kind) {
    case SpatialProfile::Kind::Gaussian:
      return gaussian_point(p.center, p.sigma, u);
    case SpatialProfile::Kind::Ball: {
      const double r = p.radius * std::cbrt(u[0]);
      const Vec3 d = direction(u[1], u[2]);
      return {p.center[0] + r * d[0], p.center[1] + r * d[1], p.center[2] + r * d[2]};
    }
    case SpatialProfile::Kind::TwoBump:
      return selector < p.weight ? gaussian_point(p.center, p.sigma, u)
                                 : gaussian_point(p.center2, p.sigma2, u);
    case SpatialProfile::Kind::Point:
      return p.center;
  }
  return p.center;
}

Vec3 sample_velocity(const VelocityProfile& p, const double* u) {
  switch (p.kind) {
    case VelocityProfile::Kind::Maxwellian:
      return gaussian_point(p.drift, p.thermal_speed, u);
    case VelocityProfile::Kind::PowerLaw: {
      const double b = boost::math::ibeta_inv(3.0, p.decay - 3.0, u[0]);
      const double s = b / (1.0 - b);
      const Vec3 d = direction(u[1], u[2]);
      return {p.drift[0] + s * d[0], p.drift[1] + s * d[1], p.drift[2] + s * d[2]};
    }
    case VelocityProfile::Kind::Cold:
      return p.drift;
  }
  return p.drift;
}

struct Stencil {
  std::size_t base;
  int i, j, k;
  double w[3][2];
};

bool stencil(const GridSpec& g, const Vec3& x, Stencil& s) {
  const int n = g.cells();
  const double h = g.spacing();
  int idx[3];
  for (int a = 0; a < 3; ++a) {
    const double q = (x[a] + g.half_width()) / h - 0.5;
    if (!(q >= 0.0 && q <= n - 1)) return false;
    int i0 = static_cast<int>(std::floor(q));
    if (i0 > n - 2) i0 = n - 2;
    const double f = q - i0;
    idx[a] = i0;
    s.w[a][0] = 1.0 - f;
    s.w[a][1] = f;
  }
  s.i = idx[0];
  s.j = idx[1];
  s.k = idx[2];
  s.base = g.index(idx[0], idx[1], idx[2]);
  return true;
}

}  // namespace

ParticleEnsemble sample_initial(const InitialDataSpec& spec, std::size_t N, std::uint64_t seed) {
  spec.validate();
  require(N >= 1, ErrorCode::InvalidParameter, "need at least one particle");
  std::mt19937_64 rng(seed);
  double shift[kHaltonDims];
  for (double& s : shift) s = static_cast<double>(rng() >> 11) * 0x1.0p-53;

  ParticleEnsemble ens;
  ens.ids.resize(N);
  ens.x.resize(N);
  ens.v.resize(N);
  std::iota(ens.ids.begin(), ens.ids.end(), std::uint64_t{0});
  for (std::size_t p = 0; p < N; ++p) {
    double u[kHaltonDims];
    for (int d = 0; d < kHaltonDims; ++d) {
      double q = radical_inverse(p + 1, kHaltonPrimes[d]) + shift[d];
      if (q >= 1.0) q -= 1.0;
      u[d] = open_unit(q);
    }
    Vec3 x = sample_position(spec.spatial, u, u[6]);
    for (int a = 0; a < 3; ++a) x[a] += spec.shift[a];
    ens.x[p] = x;
    ens.v[p] = sample_velocity(spec.velocity, u + 3);
  }
  return ens;
}

bool in_box(const GridSpec& grid, const Vec3& x) {
  Stencil s;
  return stencil(grid, x, s);
}

Deposit deposit_density_report(const ParticleEnsemble& ens, const GridSpec& grid, double max_lost) {
  const std::size_t N = ens.size();
  require(ens.v.size() == N, ErrorCode::SizeMismatch, "ensemble arrays differ in length");
  const std::size_t cells = grid.size();
  const int n = grid.cells();
  const std::size_t sj = static_cast<std::size_t>(n);
  const std::size_t sk = sj * sj;
  std::vector<std::vector<double>> partial(kReductionChunks);
  std::vector<std::size_t> lost(kReductionChunks, 0);
  parallel_chunks(kReductionChunks, [&](std::size_t c) {
    auto [b, e] = chunk_range(N, kReductionChunks, c);
    if (b == e) return;
    auto& buf = partial[c];
    buf.assign(cells, 0.0);
    for (std::size_t p = b; p < e; ++p) {
      Stencil s;
      if (!stencil(grid, ens.x[p], s)) {
        ++lost[c];
        continue;
      }
      for (int dk = 0; dk < 2; ++dk)
        for (int dj = 0; dj < 2; ++dj) {
          const double wjk = s.w[1][dj] * s.w[2][dk];
          const std::size_t row = s.base + dj * sj + dk * sk;
          buf[row] += s.w[0][0] * wjk;
          buf[row + 1] += s.w[0][1] * wjk;
        }
    }
  });
  Deposit out{ScalarField(grid), 0.0, 0};
  for (std::size_t c = 0; c < kReductionChunks; ++c) {
    out.out_of_box += lost[c];
    if (partial[c].empty()) continue;
    for (std::size_t i = 0; i < cells; ++i) out.rho[i] += partial[c][i];
  }
  const double w = ens.weight();
  out.rho *= w / grid.cell_volume();
  out.in_box_mass = w * static_cast<double>(N - out.out_of_box);
  const double lost_mass = w * static_cast<double>(out.out_of_box);
  if (lost_mass > max_lost) {
    std::ostringstream msg;
    msg << out.out_of_box << " particles (mass " << lost_mass << ") lie outside the box";
    throw Error(ErrorCode::Truncation, msg.str());
  }
  return out;
}

ScalarField deposit_density(const ParticleEnsemble& ens, const GridSpec& grid) {
  return deposit_density_report(ens, grid).rho;
}

std::vector<Vec3> interpolate_acceleration(const VectorField& E, const std::vector<Vec3>& positions,
                                           std::size_t* out_of_box) {
  const GridSpec& g = E.grid();
  const std::size_t sj = static_cast<std::size_t>(g.cells());
  const std::size_t sk = sj * sj;
  std::vector<Vec3> acc(positions.size(), Vec3{0.0, 0.0, 0.0});
  std::vector<std::size_t> lost(kReductionChunks, 0);
  parallel_chunks(kReductionChunks, [&](std::size_t c) {
    auto [b, e] = chunk_range(positions.size(), kReductionChunks, c);
    for (std::size_t p = b; p < e; ++p) {
      Stencil s;
      if (!stencil(g, positions[p], s)) {
        ++lost[c];
        continue;
      }
      for (int a = 0; a < 3; ++a) {
        const auto comp = E.component(a);
        double sum = 0.0;
        for (int dk = 0; dk < 2; ++dk)
          for (int dj = 0; dj < 2; ++dj) {
            const std::size_t row = s.base + dj * sj + dk * sk;
            sum += s.w[1][dj] * s.w[2][dk] * (s.w[0][0] * comp[row] + s.w[0][1] * comp[row + 1]);
          }
        acc[p][a] = sum;
      }
    }
  });
  if (out_of_box) *out_of_box = std::accumulate(lost.begin(), lost.end(), std::size_t{0});
  return acc;
}

std::vector<double> interpolate_scalar(const ScalarField& u, const std::vector<Vec3>& positions) {
  const GridSpec& g = u.grid();
  const std::size_t sj = static_cast<std::size_t>(g.cells());
  const std::size_t sk = sj * sj;
  std::vector<double> out(positions.size(), 0.0);
  for (std::size_t p = 0; p < positions.size(); ++p) {
    Stencil s;
    if (!stencil(g, positions[p], s)) continue;
    double sum = 0.0;
    for (int dk = 0; dk < 2; ++dk)
      for (int dj = 0; dj < 2; ++dj) {
        const std::size_t row = s.base + dj * sj + dk * sk;
        sum += s.w[1][dj] * s.w[2][dk] * (s.w[0][0] * u[row] + s.w[0][1] * u[row + 1]);
      }
    out[p] = sum;
  }
  return out;
}

SimulationState make_state(ParticleEnsemble ens, const GridSpec& grid, ScalarField g, ChargeMode mode,
                           const SolverSettings& settings) {
  ens.validate();
  require_same_grid(grid, g.grid());
  settings.validate();
  SimulationState s;
  s.ensemble = std::move(ens);
  s.grid = grid;
  s.mode = mode;
  s.settings = settings;
  s.g = std::make_shared<const ScalarField>(std::move(g));
  return s;
}

void refresh_field(SimulationState& state) {
  require(state.g != nullptr, ErrorCode::InvalidParameter, "simulation state has no g");
  const Deposit dep = deposit_density_report(state.ensemble, state.grid);
  const ScalarField* warm = state.split ? &state.split->u_hat : nullptr;
  PotentialSplit split = solve_split_field(dep.rho, *state.g, state.mode, state.settings, warm);
  state.split = std::move(split);
  state.stale = false;
}

namespace {

std::vector<Vec3> accelerations(const SimulationState& s) {
  if (s.frozen_field) {
    std::vector<Vec3> acc(s.ensemble.size());
    for (std::size_t p = 0; p < acc.size(); ++p) acc[p] = s.frozen_field(s.ensemble.x[p]);
    return acc;
  }
  return interpolate_acceleration(s.split->e_total, s.ensemble.x);
}

void kick(ParticleEnsemble& ens, const std::vector<Vec3>& acc, double tau) {
  for (std::size_t p = 0; p < ens.size(); ++p)
    for (int a = 0; a < 3; ++a) ens.v[p][a] += tau * acc[p][a];
}

void drift(ParticleEnsemble& ens, double tau) {
  for (std::size_t p = 0; p < ens.size(); ++p)
    for (int a = 0; a < 3; ++a) ens.x[p][a] += tau * ens.v[p][a];
}

}  // namespace

void step(SimulationState& state, double dt) {
  require(dt > 0.0 && std::isfinite(dt), ErrorCode::InvalidParameter, "dt must be positive");
  SimulationState next = state;
  try {
    const bool frozen = static_cast<bool>(next.frozen_field);
    if (!frozen && (next.stale || !next.split)) refresh_field(next);

    double vmax = 0.0;
    for (std::size_t p = 0; p < next.ensemble.size(); ++p) {
      if (!frozen && !in_box(next.grid, next.ensemble.x[p])) continue;
      const auto& v = next.ensemble.v[p];
      vmax = std::max(vmax, std::sqrt(v[0] * v[0] + v[1] * v[1] + v[2] * v[2]));
    }
    const double limit = vmax > 0.0 ? next.grid.spacing() / (4.0 * vmax)
                                     : std::numeric_limits<double>::infinity();
    int halvings = 0;
    double tau = dt;
    while (tau > limit) {
      if (++halvings > kMaxCflHalvings) {
        std::ostringstream msg;
        msg << "dt " << dt << " needs more than " << kMaxCflHalvings
            << " halvings to satisfy h/(4 max|V|) = " << limit;
        throw Error(ErrorCode::Cfl, msg.str());
      }
      tau *= 0.5;
    }
    const int substeps = 1 << halvings;
    for (int s = 0; s < substeps; ++s) {
      kick(next.ensemble, accelerations(next), 0.5 * tau);
      drift(next.ensemble, tau);
      if (!frozen) refresh_field(next);
      kick(next.ensemble, accelerations(next), 0.5 * tau);
    }
    next.t = state.t + dt;
    ++next.step_count;
    next.cfl_halvings += static_cast<std::uint64_t>(halvings);
  } catch (const StepError&) {
    throw;
  } catch (const Error& e) {
    throw StepError(e.code(), e.what(), state.t);
  }
  state = std::move(next);
}

void run(SimulationState& state, const RunSettings& settings,
         const std::function<void(const SimulationState&)>& observer) {
  require(settings.dt > 0.0, ErrorCode::InvalidParameter, "dt must be positive");
  require(settings.T >= 0.0, ErrorCode::InvalidParameter, "T must be non-negative");
  require(settings.snapshot_every >= 1, ErrorCode::InvalidParameter, "snapshot cadence must be >= 1");
  if (!state.frozen_field && (state.stale || !state.split)) {
    try {
      refresh_field(state);
    } catch (const Error& e) {
      throw StepError(e.code(), e.what(), state.t);
    }
  }
  if (observer) observer(state);
  const double t0 = state.t;
  const auto steps = static_cast<std::uint64_t>(std::ceil(settings.T / settings.dt - 1e-9));
  for (std::uint64_t k = 0; k < steps; ++k) {
    const double target = k + 1 == steps ? t0 + settings.T : t0 + (k + 1) * settings.dt;
    step(state, target - state.t);
    state.t = target;
    if (observer && ((k + 1) % settings.snapshot_every == 0 || k + 1 == steps)) observer(state);
  }
}

static_assert(std::endian::native == std::endian::little, "binary formats assume little-endian hosts");

void write_snapshot(const std::filesystem::path& path, const ParticleEnsemble& ens, double t) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  const std::uint64_t N = ens.size();
  out.write(kSnapshotMagic.data(), static_cast<std::streamsize>(kSnapshotMagic.size()));
  out.write(reinterpret_cast<const char*>(&N), sizeof N);
  out.write(reinterpret_cast<const char*>(&t), sizeof t);
  for (std::size_t p = 0; p < ens.size(); ++p) {
    out.write(reinterpret_cast<const char*>(&ens.ids[p]), sizeof(std::uint64_t));
    out.write(reinterpret_cast<const char*>(ens.x[p].data()), 3 * sizeof(double));
    out.write(reinterpret_cast<const char*>(ens.v[p].data()), 3 * sizeof(double));
  }
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

Snapshot read_snapshot(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  char magic[6];
  in.read(magic, sizeof magic);
  if (!in || std::string_view(magic, sizeof magic) != kSnapshotMagic)
    throw Error(ErrorCode::Parse, path.string() + " is not a VPMEP1 snapshot");
  std::uint64_t N = 0;
  Snapshot s;
  in.read(reinterpret_cast<char*>(&N), sizeof N);
  in.read(reinterpret_cast<char*>(&s.t), sizeof s.t);
  if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated header");
  s.ensemble.ids.resize(N);
  s.ensemble.x.resize(N);
  s.ensemble.v.resize(N);
  for (std::uint64_t p = 0; p < N; ++p) {
    in.read(reinterpret_cast<char*>(&s.ensemble.ids[p]), sizeof(std::uint64_t));
    in.read(reinterpret_cast<char*>(s.ensemble.x[p].data()), 3 * sizeof(double));
    in.read(reinterpret_cast<char*>(s.ensemble.v[p].data()), 3 * sizeof(double));
  }
  if (!in) throw Error(ErrorCode::Parse, path.string() + ": truncated particle records");
  return s;
}

}  // namespace vpme
