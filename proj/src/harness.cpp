#include "vpme/harness.hpp"

#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <functional>
#include <iomanip>
#include <map>
#include <sstream>

#include <json.hpp>

#include "vpme/field_io.hpp"
#include "vpme/field_ops.hpp"
#include "vpme/poisson.hpp"

namespace vpme {

namespace {

std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw std::invalid_argument("not a number: '" + s + "'");
  return v;
}

long long to_integer(const std::string& s) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    // Accept integral values written in floating notation, e.g. 2e5.
    const double d = to_double(s);
    if (d != std::floor(d) || std::abs(d) > 9e15) throw std::invalid_argument("not an integer: '" + s + "'");
    return static_cast<long long>(d);
  }
  return v;
}

std::vector<double> to_list(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(to_double(trim(item)));
  return out;
}

Vec3 to_vec3(const std::string& s) {
  const auto l = to_list(s);
  if (l.size() != 3) throw std::invalid_argument("expected three comma-separated numbers");
  return {l[0], l[1], l[2]};
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw std::invalid_argument("expected true or false");
}

SpatialProfile::Kind to_profile_kind(const std::string& s) {
  if (s == "gaussian") return SpatialProfile::Kind::Gaussian;
  if (s == "ball") return SpatialProfile::Kind::Ball;
  if (s == "two_bump") return SpatialProfile::Kind::TwoBump;
  if (s == "point") return SpatialProfile::Kind::Point;
  throw std::invalid_argument("unknown profile '" + s + "'");
}

VelocityProfile::Kind to_velocity_kind(const std::string& s) {
  if (s == "maxwellian") return VelocityProfile::Kind::Maxwellian;
  if (s == "power_law") return VelocityProfile::Kind::PowerLaw;
  if (s == "cold") return VelocityProfile::Kind::Cold;
  throw std::invalid_argument("unknown velocity profile '" + s + "'");
}

using Setter = std::function<void(ScenarioConfig&, const std::string&)>;

void add_profile_keys(std::map<std::string, Setter>& keys, const std::string& prefix,
                      SpatialProfile& (*pick)(ScenarioConfig&)) {
  keys[prefix + ".profile"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).kind = to_profile_kind(v); };
  keys[prefix + ".center"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).center = to_vec3(v); };
  keys[prefix + ".sigma"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).sigma = to_double(v); };
  keys[prefix + ".radius"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).radius = to_double(v); };
  keys[prefix + ".center2"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).center2 = to_vec3(v); };
  keys[prefix + ".sigma2"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).sigma2 = to_double(v); };
  keys[prefix + ".weight"] = [pick](ScenarioConfig& c, const std::string& v) { pick(c).weight = to_double(v); };
}

const std::map<std::string, Setter>& config_keys() {
  static const std::map<std::string, Setter> keys = [] {
    std::map<std::string, Setter> k;
    k["grid.L"] = [](ScenarioConfig& c, const std::string& v) { c.grid = GridSpec(to_double(v), c.grid.cells()); };
    k["grid.n"] = [](ScenarioConfig& c, const std::string& v) {
      c.grid = GridSpec(c.grid.half_width(), static_cast<int>(to_integer(v)));
    };
    k["particles.N"] = [](ScenarioConfig& c, const std::string& v) {
      const long long n = to_integer(v);
      if (n < 1) throw std::invalid_argument("particles.N must be at least 1");
      c.particles = static_cast<std::size_t>(n);
    };
    k["seed"] = [](ScenarioConfig& c, const std::string& v) { c.seed = static_cast<std::uint64_t>(to_integer(v)); };
    k["mode"] = [](ScenarioConfig& c, const std::string& v) { c.mode = parse_charge_mode(v); };
    k["dt"] = [](ScenarioConfig& c, const std::string& v) {
      c.dt = to_double(v);
      if (!(c.dt > 0.0)) throw std::invalid_argument("dt must be positive");
    };
    k["T"] = [](ScenarioConfig& c, const std::string& v) {
      c.T = to_double(v);
      if (!(c.T > 0.0)) throw std::invalid_argument("T must be positive");
    };
    k["snapshot.every"] = [](ScenarioConfig& c, const std::string& v) {
      const long long e = to_integer(v);
      if (e < 1) throw std::invalid_argument("snapshot.every must be at least 1");
      c.snapshot_every = static_cast<int>(e);
    };
    k["g.matched"] = [](ScenarioConfig& c, const std::string& v) { c.g.matched = to_bool(v); };
    k["g.mass"] = [](ScenarioConfig& c, const std::string& v) { c.g.mass = to_double(v); };
    add_profile_keys(k, "g", [](ScenarioConfig& c) -> SpatialProfile& { return c.g.profile; });
    add_profile_keys(k, "f0", [](ScenarioConfig& c) -> SpatialProfile& { return c.f0.spatial; });
    k["f0.velocity"] = [](ScenarioConfig& c, const std::string& v) { c.f0.velocity.kind = to_velocity_kind(v); };
    k["f0.vsigma"] = [](ScenarioConfig& c, const std::string& v) { c.f0.velocity.thermal_speed = to_double(v); };
    k["f0.decay"] = [](ScenarioConfig& c, const std::string& v) { c.f0.velocity.decay = to_double(v); };
    k["f0.drift"] = [](ScenarioConfig& c, const std::string& v) { c.f0.velocity.drift = to_vec3(v); };
    k["f0.moment_order"] = [](ScenarioConfig& c, const std::string& v) {
      c.f0.moment_order = static_cast<int>(to_integer(v));
    };
    k["f0.shift"] = [](ScenarioConfig& c, const std::string& v) { c.f0.shift = to_vec3(v); };
    k["solver.tol"] = [](ScenarioConfig& c, const std::string& v) { c.solver.tolerance = to_double(v); };
    k["solver.max_iter"] = [](ScenarioConfig& c, const std::string& v) {
      c.solver.max_iterations = static_cast<int>(to_integer(v));
    };
    k["solver.damping"] = [](ScenarioConfig& c, const std::string& v) { c.solver.damping = to_double(v); };
    k["solver.K"] = [](ScenarioConfig& c, const std::string& v) { c.solver.K = static_cast<int>(to_integer(v)); };
    k["solver.normalize_g"] = [](ScenarioConfig& c, const std::string& v) { c.solver.normalize_g = to_bool(v); };
    k["diag.orders"] = [](ScenarioConfig& c, const std::string& v) {
      c.orders = to_list(v);
      for (double o : c.orders)
        if (o < 0.0) throw std::invalid_argument("moment orders must be non-negative");
    };
    return k;
  }();
  return keys;
}

std::string utc_now() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::Io, "cannot open " + path.string() + " for writing");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw Error(ErrorCode::Io, "write failed for " + path.string());
}

}  // namespace

ScenarioConfig parse_config(std::string_view text, std::string_view origin) {
  ScenarioConfig c;
  c.text = std::string(text);
  const auto& keys = config_keys();
  std::map<std::string, int> seen;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  auto fail = [&](int at, const std::string& why) {
    std::ostringstream msg;
    msg << origin << ':' << at << ": " << why;
    throw Error(ErrorCode::Parse, msg.str());
  };
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    const std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) fail(lineno, "expected 'key = value'");
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    const auto it = keys.find(key);
    if (it == keys.end()) fail(lineno, "unknown key '" + key + "'");
    if (seen.count(key)) fail(lineno, "duplicate key '" + key + "'");
    seen[key] = lineno;
    try {
      it->second(c, value);
    } catch (const std::exception& e) {
      fail(lineno, key + ": " + e.what());
    }
  }
  auto line_of = [&](std::initializer_list<const char*> ks) {
    for (const char* k : ks)
      if (seen.count(k)) return seen[k];
    return 0;
  };
  try {
    c.f0.validate();
  } catch (const Error& e) {
    fail(line_of({"f0.decay", "f0.vsigma", "f0.sigma", "f0.radius", "f0.weight", "f0.profile"}), e.what());
  }
  if (!c.g.matched) {
    try {
      c.g.profile.validate();
    } catch (const Error& e) {
      fail(line_of({"g.sigma", "g.radius", "g.weight", "g.profile"}), e.what());
    }
    if (c.g.profile.kind == SpatialProfile::Kind::Point) fail(line_of({"g.profile"}), "g cannot be a point mass");
    if (!(c.g.mass > 0.0)) fail(line_of({"g.mass"}), "g.mass must be positive");
  }
  try {
    c.solver.validate();
  } catch (const Error& e) {
    fail(line_of({"solver.tol", "solver.max_iter", "solver.damping", "solver.K"}), e.what());
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  return parse_config(read_text(path), path.string());
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hex64(std::uint64_t value) {
  std::ostringstream out;
  out << std::hex << std::setw(16) << std::setfill('0') << value;
  return out.str();
}

std::uint64_t file_hash(const std::filesystem::path& path) { return fnv1a64(read_text(path)); }

ScalarField build_confinement(const ScenarioConfig& config) {
  if (config.g.matched) {
    InitialDataSpec unshifted = config.f0;
    unshifted.shift = {0.0, 0.0, 0.0};
    return deposit_density(sample_initial(unshifted, config.particles, config.seed), config.grid);
  }
  return discretize(config.g.profile, config.grid, config.g.mass);
}

SimulationState initial_state(const ScenarioConfig& config) {
  return make_state(sample_initial(config.f0, config.particles, config.seed), config.grid,
                    build_confinement(config), config.mode, config.solver);
}

std::string RunManifest::to_json() const {
  nlohmann::ordered_json j;
  j["config_hash"] = config_hash;
  j["version"] = version;
  j["started_utc"] = started_utc;
  j["wall_seconds"] = wall_seconds;
  j["diagnostic_files"] = diagnostic_files;
  auto snaps = nlohmann::ordered_json::array();
  for (const auto& s : snapshots)
    snaps.push_back({{"step", s.step}, {"t", s.t}, {"file", s.file}, {"hash", s.hash}});
  j["snapshots"] = snaps;
  return j.dump(2) + "\n";
}

RunManifest RunManifest::from_json(std::string_view text) {
  RunManifest m;
  try {
    const auto j = nlohmann::json::parse(text);
    m.config_hash = j.at("config_hash").get<std::string>();
    m.version = j.at("version").get<std::string>();
    m.started_utc = j.value("started_utc", "");
    m.wall_seconds = j.value("wall_seconds", 0.0);
    m.diagnostic_files = j.value("diagnostic_files", std::vector<std::string>{});
    for (const auto& s : j.at("snapshots"))
      m.snapshots.push_back({s.at("step").get<std::uint64_t>(), s.at("t").get<double>(),
                             s.at("file").get<std::string>(), s.at("hash").get<std::string>()});
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::Parse, std::string("malformed manifest: ") + e.what());
  }
  return m;
}

RunManifest RunManifest::load(const std::filesystem::path& run_dir) {
  return from_json(read_text(run_dir / "manifest.json"));
}

RunManifest cmd_run(const std::filesystem::path& config_path, const std::filesystem::path& out_dir) {
  // Parsing and validation happen before anything touches the output directory.
  const ScenarioConfig config = load_config(config_path);
  SimulationState state = initial_state(config);

  const auto wall0 = std::chrono::steady_clock::now();
  RunManifest manifest;
  manifest.config_hash = hex64(fnv1a64(config.text));
  manifest.started_utc = utc_now();
  std::filesystem::create_directories(out_dir / "snapshots");
  write_text(out_dir / "config.txt", config.text);

  std::ofstream csv(out_dir / "diagnostics.csv");
  if (!csv) throw Error(ErrorCode::Io, "cannot write diagnostics.csv");
  csv << std::setprecision(17) << "step,t,kinetic,field,E_V,E_F,m";
  for (double k : config.orders) csv << ",M_" << k;
  csv << ",rho_l53\n";
  manifest.diagnostic_files.push_back("diagnostics.csv");

  const auto final_steps = static_cast<std::uint64_t>(std::ceil(config.T / config.dt - 1e-9));
  auto observe = [&](const SimulationState& s) {
    const EnergyReport e = energy(s);
    const auto m = moment_values(s.ensemble, config.orders);
    csv << s.step_count << ',' << s.t << ',' << e.kinetic << ',' << e.field << ',' << e.total_V << ','
        << e.total_F << ',' << e.electron_mass;
    for (double v : m) csv << ',' << v;
    csv << ',' << s.split->source_l53 << '\n';
    if (s.step_count % static_cast<std::uint64_t>(config.snapshot_every) == 0 || s.step_count == final_steps) {
      std::ostringstream name;
      name << "snapshots/snap_" << std::setw(6) << std::setfill('0') << s.step_count << ".vpmep";
      write_snapshot(out_dir / name.str(), s.ensemble, s.t);
      manifest.snapshots.push_back({s.step_count, s.t, name.str(), hex64(file_hash(out_dir / name.str()))});
    }
  };
  run(state, RunSettings{config.dt, config.T, 1}, observe);
  csv.close();
  manifest.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - wall0).count();
  write_text(out_dir / "manifest.json", manifest.to_json());
  return manifest;
}

SolveFieldOutcome cmd_solve_field(const std::filesystem::path& rho_path, const std::filesystem::path& g_path,
                                  ChargeMode mode, double tolerance, const std::filesystem::path& out_dir,
                                  bool normalize_g) {
  const ScalarField rho = read_scalar_field(rho_path);
  const ScalarField g = read_scalar_field(g_path);
  SolverSettings s;
  s.tolerance = tolerance;
  s.normalize_g = normalize_g;
  s.validate();
  PotentialSplit split = solve_split_field(rho, g, mode, s);
  const RegularityReport reg = regularity_report(split, g);

  std::filesystem::create_directories(out_dir);
  write_scalar_field(out_dir / "u_bar.vpmef", split.u_bar);
  write_scalar_field(out_dir / "u_hat.vpmef", split.u_hat);
  nlohmann::ordered_json j;
  j["mode"] = std::string(to_string(mode));
  j["residual"] = split.residual;
  j["iterations"] = split.iterations;
  j["electron_mass"] = split.electron_mass;
  j["laplacian_mass"] = reg.laplacian_mass;
  j["u_hat_max"] = split.u_hat.max_value();
  j["u_bar_linf"] = lp_norm(split.u_bar, kInfinity);
  j["u_hat_weak_l3"] = reg.u_hat_weak_l3;
  j["e_hat_weak_l32"] = reg.e_hat_weak_l32;
  j["u_hat_linf"] = reg.u_hat_linf;
  j["e_hat_linf"] = reg.e_hat_linf;
  j["e_hat_holder_half"] = reg.e_hat_holder_half;
  j["rho_l1"] = reg.rho_l1;
  j["rho_l53"] = reg.rho_l53;
  j["exponent_scale"] = reg.exponent_scale;
  SolveFieldOutcome out{std::move(split), reg, j.dump(2) + "\n"};
  write_text(out_dir / "certificate.json", out.certificate_json);
  return out;
}

std::vector<RunFrame> load_run_frames(const std::filesystem::path& run_dir, ScenarioConfig* config_out) {
  const RunManifest manifest = RunManifest::load(run_dir);
  ScenarioConfig config = load_config(run_dir / "config.txt");
  if (hex64(fnv1a64(config.text)) != manifest.config_hash)
    throw Error(ErrorCode::Io, run_dir.string() + ": config.txt does not match the manifest hash");
  const ScalarField g = build_confinement(config);
  std::vector<RunFrame> frames;
  const ScalarField* warm = nullptr;
  for (const auto& entry : manifest.snapshots) {
    const auto path = run_dir / entry.file;
    if (hex64(file_hash(path)) != entry.hash)
      throw Error(ErrorCode::Io, path.string() + " does not match its manifest hash");
    Snapshot snap = read_snapshot(path);
    RunFrame f{snap.t, std::move(snap.ensemble), std::nullopt};
    const ScalarField rho = deposit_density(f.ensemble, config.grid);
    f.split = solve_split_field(rho, g, config.mode, config.solver, warm);
    frames.push_back(std::move(f));
    warm = &frames.back().split->u_hat;
  }
  if (config_out) *config_out = std::move(config);
  return frames;
}

DiagnoseOutcome cmd_diagnose(const std::filesystem::path& run_dir, const std::vector<double>& orders,
                             const std::filesystem::path& csv_path, double battery_C) {
  ScenarioConfig config;
  const auto frames = load_run_frames(run_dir, &config);
  require(!frames.empty(), ErrorCode::EmptyHistory, "run has no snapshots");
  const ScalarField g = build_confinement(config);
  const double f_inf = config.f0.f_inf_bound();

  DiagnoseOutcome out;
  out.moments.orders = orders;
  bool interp_ok = true;
  for (const auto& f : frames) {
    out.energies.push_back(energy(*f.split, g, f.ensemble, f.t));
    out.moments.append(f.t, f.ensemble);
    const ScalarField rho = deposit_density(f.ensemble, config.grid);
    std::vector<InterpolationVerdict> row;
    for (double k : orders)
      if (k > 0.0) {
        row.push_back(interpolation_check(rho, f.ensemble, k, f_inf));
        interp_ok = interp_ok && row.back().holds;
      }
    out.interpolation.push_back(std::move(row));
  }
  out.envelope = moment_envelope_check(out.moments, battery_C);
  out.passed = interp_ok && out.envelope.holds;

  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorCode::Io, "cannot write " + csv_path.string());
  csv << std::setprecision(17) << "t,E_V,E_F";
  for (double k : orders) csv << ",M_" << k;
  csv << ",rho_l53,interpolation,envelope\n";
  for (std::size_t i = 0; i < frames.size(); ++i) {
    bool row_ok = true;
    for (const auto& v : out.interpolation[i]) row_ok = row_ok && v.holds;
    csv << frames[i].t << ',' << out.energies[i].total_V << ',' << out.energies[i].total_F;
    for (double m : out.moments.values[i]) csv << ',' << m;
    csv << ',' << frames[i].split->source_l53 << ',' << (row_ok ? "holds" : "fails") << ','
        << (out.envelope.holds ? "holds" : "fails") << '\n';
  }
  return out;
}

StabilityOutcome cmd_stability(const std::filesystem::path& run_a, const std::filesystem::path& run_b,
                               std::size_t exact_cap, const std::filesystem::path& csv_path,
                               double battery_C) {
  const auto frames_a = load_run_frames(run_a);
  const auto frames_b = load_run_frames(run_b);
  StabilityOptions opts;
  opts.exact_cap = exact_cap;
  opts.battery_C = battery_C;
  StabilityOutcome out;
  out.report = verify_stability(frames_a, frames_b, Coupling::identity(), opts);
  std::vector<FieldStabilitySample> samples;
  for (std::size_t i = 0; i < frames_a.size(); ++i)
    samples.push_back(field_stability_sample(frames_a[i], frames_b[i], exact_cap));
  out.fields = field_stability_check(std::move(samples), battery_C);
  out.passed = out.report.passed() && out.fields.passed();

  std::ofstream csv(csv_path);
  if (!csv) throw Error(ErrorCode::Io, "cannot write " + csv_path.string());
  csv << std::setprecision(17) << "t,D,W2,envelope,I1,I2,I3,I4,verdict\n";
  for (const auto& s : out.report.samples) {
    const FieldTerms t = s.terms.value_or(FieldTerms{});
    const bool ok = s.d_controls_w2 && s.w2 <= s.envelope * (1.0 + 1e-12);
    csv << s.t << ',' << s.D << ',' << s.w2 << ',' << s.envelope << ',' << t.I1 << ',' << t.I2 << ','
        << t.I3 << ',' << t.I4 << ',' << (ok ? "holds" : "fails") << '\n';
  }
  return out;
}

std::vector<BenchRow> cmd_bench(const std::vector<int>& grid_sizes, const std::vector<std::size_t>& particle_counts,
                                int repeats, const std::filesystem::path& csv_path) {
  require(repeats >= 1, ErrorCode::InvalidParameter, "repeats must be >= 1");
  using clock = std::chrono::steady_clock;
  // Each repeat reports the mean over a batch lasting at least kBatch, which keeps short
  // operations above the timer and scheduler noise floor.
  constexpr double kBatch = 0.05;
  auto per_call = [&](const auto& body) {
    std::size_t calls = 0;
    const auto t0 = clock::now();
    double elapsed = 0.0;
    do {
      body();
      ++calls;
      elapsed = std::chrono::duration<double>(clock::now() - t0).count();
    } while (elapsed < kBatch);
    return elapsed / static_cast<double>(calls);
  };
  std::vector<BenchRow> rows;
  for (int n : grid_sizes) {
    const GridSpec grid(4.0, n);
    const ScalarField rho = discretize(SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5), grid);
    (void)solve_free_space_poisson(rho);
    for (int r = 0; r < repeats; ++r)
      rows.push_back({"poisson", static_cast<std::size_t>(n), r,
                      per_call([&] { (void)solve_free_space_poisson(rho); })});
  }
  const GridSpec grid(4.0, 32);
  const ScalarField rho = discretize(SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5), grid);
  const VectorField E = negative_gradient(solve_free_space_poisson(rho));
  InitialDataSpec spec;
  spec.spatial = SpatialProfile::gaussian({0.0, 0.0, 0.0}, 0.5);
  spec.velocity = VelocityProfile::maxwellian(0.5);
  for (std::size_t N : particle_counts) {
    ParticleEnsemble ens = sample_initial(spec, N, 1);
    auto push = [&] {
      const auto acc = interpolate_acceleration(E, ens.x);
      for (std::size_t p = 0; p < N; ++p)
        for (int a = 0; a < 3; ++a) {
          ens.v[p][a] += 1e-3 * acc[p][a];
          ens.x[p][a] += 1e-3 * ens.v[p][a];
        }
      (void)deposit_density_report(ens, grid, 1.0);
    };
    for (int r = 0; r < repeats; ++r) rows.push_back({"push", N, r, per_call(push)});
  }
  if (!csv_path.empty()) {
    std::ofstream csv(csv_path);
    if (!csv) throw Error(ErrorCode::Io, "cannot write " + csv_path.string());
    csv << "kind,size,repeat,seconds\n" << std::setprecision(9);
    for (const auto& r : rows) csv << r.kind << ',' << r.size << ',' << r.repeat << ',' << r.seconds << '\n';
  }
  return rows;
}

}  // namespace vpme
