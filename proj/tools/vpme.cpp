#include <CLI11.hpp>

#include <iomanip>
#include <iostream>
#include <sstream>

#include "vpme/acceptance.hpp"
#include "vpme/harness.hpp"

namespace {

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;

std::vector<double> parse_orders(const std::string& text) {
  std::vector<double> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
  if (out.empty()) throw std::invalid_argument("no moment orders given");
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Vlasov-Poisson with massless electrons: solvers, diagnostics and stability checks"};
  app.require_subcommand(1);

  std::string config_path, out_dir = "run";
  auto* run = app.add_subcommand("run", "Run a scenario config into an output directory");
  run->add_option("config", config_path, "Scenario config file")->required()->check(CLI::ExistingFile);
  run->add_option("-o,--out", out_dir, "Output directory");

  std::string rho_path, g_path, mode_text = "variable", field_out = "field";
  double tol = 1e-8;
  bool normalize_g = false;
  auto* solve = app.add_subcommand("solve-field", "Solve the split electrostatic field for given rho and g");
  solve->add_option("--rho", rho_path, "Ion density field file")->required()->check(CLI::ExistingFile);
  solve->add_option("--g", g_path, "Confining weight field file")->required()->check(CLI::ExistingFile);
  solve->add_option("--mode", mode_text, "variable or fixed")->check(CLI::IsMember({"variable", "fixed"}));
  solve->add_option("--tol", tol, "Relative residual tolerance");
  solve->add_option("--out", field_out, "Output directory");
  solve->add_flag("--normalize-g", normalize_g, "Rescale g to unit mass in fixed mode");

  std::string run_dir, orders_text = "2,4,6", diag_csv;
  double battery_C = 10.0;
  auto* diagnose = app.add_subcommand("diagnose", "Energy, moment and interpolation diagnostics of a run");
  diagnose->add_option("--run", run_dir, "Run directory")->required()->check(CLI::ExistingDirectory);
  diagnose->add_option("--orders", orders_text, "Comma-separated moment orders");
  diagnose->add_option("--csv", diag_csv, "CSV output (default <run>/diagnose.csv)");
  diagnose->add_option("--battery-C", battery_C, "Battery constant for the moment envelope");

  std::string run_a, run_b, stab_csv;
  std::size_t exact_cap = vpme::kExactW2Cap;
  auto* stability = app.add_subcommand("stability", "Compare two synchronized runs against the stability envelope");
  stability->add_option("--run-a", run_a, "First run directory")->required()->check(CLI::ExistingDirectory);
  stability->add_option("--run-b", run_b, "Second run directory")->required()->check(CLI::ExistingDirectory);
  stability->add_option("--exact-w2-cap", exact_cap, "Largest N solved exactly");
  stability->add_option("--csv", stab_csv, "CSV output (default stability.csv)");
  stability->add_option("--battery-C", battery_C, "Battery constant");

  std::vector<int> grid_sizes{32, 48, 64};
  std::vector<std::size_t> counts{10000, 100000, 1000000};
  int repeats = 3;
  std::string bench_csv = "bench.csv";
  auto* bench = app.add_subcommand("bench", "Time Poisson solves and particle pushes");
  bench->add_option("--grid", grid_sizes, "Grid sizes")->delimiter(',');
  bench->add_option("--particles", counts, "Particle counts")->delimiter(',');
  bench->add_option("--repeats", repeats, "Repetitions per size")->check(CLI::PositiveNumber);
  bench->add_option("--csv", bench_csv, "CSV output");

  std::vector<int> criteria;
  auto* verify = app.add_subcommand("verify", "Run the acceptance battery");
  verify->add_option("--only", criteria, "Criterion numbers to run")->delimiter(',')->check(CLI::Range(1, 10));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitPass : kExitUsage;
  }

  // Errors raised before any computation starts are usage errors.
  bool started = false;
  try {
    if (*run) {
      vpme::load_config(config_path);
      started = true;
      const auto manifest = vpme::cmd_run(config_path, out_dir);
      std::cout << "wrote " << manifest.snapshots.size() << " snapshots to " << out_dir << " (config "
                << manifest.config_hash << ", " << std::fixed << std::setprecision(1) << manifest.wall_seconds
                << " s)\n";
      return kExitPass;
    }
    if (*solve) {
      const auto mode = vpme::parse_charge_mode(mode_text);
      started = true;
      const auto out = vpme::cmd_solve_field(rho_path, g_path, mode, tol, field_out, normalize_g);
      std::cout << out.certificate_json;
      return kExitPass;
    }
    if (*diagnose) {
      const auto orders = parse_orders(orders_text);
      if (diag_csv.empty()) diag_csv = (std::filesystem::path(run_dir) / "diagnose.csv").string();
      started = true;
      const auto out = vpme::cmd_diagnose(run_dir, orders, diag_csv, battery_C);
      std::cout << "moment envelope C " << out.envelope.fitted_C << " (battery " << battery_C << ")\n"
                << (out.passed ? "PASS" : "FAIL") << " diagnostics, CSV in " << diag_csv << '\n';
      return out.passed ? kExitPass : kExitFail;
    }
    if (*stability) {
      if (stab_csv.empty()) stab_csv = "stability.csv";
      started = true;
      const auto out = vpme::cmd_stability(run_a, run_b, exact_cap, stab_csv, battery_C);
      std::cout << "fitted C " << out.report.fitted_C << ", switch time t0 " << out.report.switch_time
                << ", W2^2 <= D " << (out.report.d_controls_w2 ? "holds" : "fails") << '\n'
                << "field bar ratio " << out.fields.bar_ratio_max << ", hat C " << out.fields.fitted_hat_C << '\n'
                << (out.passed ? "PASS" : "FAIL") << " stability, CSV in " << stab_csv << '\n';
      return out.passed ? kExitPass : kExitFail;
    }
    if (*bench) {
      started = true;
      const auto rows = vpme::cmd_bench(grid_sizes, counts, repeats, bench_csv);
      for (const auto& r : rows)
        std::cout << r.kind << ' ' << r.size << ' ' << r.repeat << ' ' << r.seconds << '\n';
      return kExitPass;
    }
    if (*verify) {
      started = true;
      const auto results = vpme::run_acceptance(criteria, std::cout);
      for (const auto& r : results)
        if (!r.passed) return kExitFail;
      return kExitPass;
    }
  } catch (const vpme::Error& e) {
    std::cerr << "vpme: " << e.what() << '\n';
    const bool usage = !started || e.code() == vpme::ErrorCode::Parse;
    return usage ? kExitUsage : kExitFail;
  } catch (const std::exception& e) {
    std::cerr << "vpme: " << e.what() << '\n';
    return started ? kExitFail : kExitUsage;
  }
  return kExitUsage;
}
