#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "uhe/errors.hpp"
#include "uhe/report.hpp"
#include "uhe/scenarios.hpp"

namespace {

// Exit codes: 0 success, 2 invalid config or arguments, 3 solver failed to
// converge, 4 output path not writable.
constexpr int kExitOk = 0;
constexpr int kExitConfig = 2;
constexpr int kExitConvergence = 3;
constexpr int kExitIo = 4;

nlohmann::json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw uhe::ValidationError("cannot read config file " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw uhe::ValidationError("config file " + path + " is not valid JSON: " + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"uhe: constrained unitary evolution scenarios"};
  std::string scenario;
  std::string config_path;
  std::string out_dir = "out";
  std::uint64_t seed = 0;
  std::uint64_t ensemble_size = 0;
  double lambda = 0.0;

  app.add_option("--scenario", scenario,
                 "scenario name: transit, two_slit, eprb, or successive_spins")
      ->required();
  app.add_option("--config", config_path, "JSON config file (scenario defaults when omitted)");
  CLI::Option* seed_opt = app.add_option("--seed", seed, "override the config's RNG seed");
  CLI::Option* size_opt =
      app.add_option("--ensemble-size", ensemble_size, "override the config's ensemble size");
  CLI::Option* lambda_opt = app.add_option(
      "--lambda", lambda, "override the config's 'lambda' threshold (where the scenario has one)");
  app.add_option("--out", out_dir, "output directory, created if needed (default: out)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  try {
    nlohmann::json config;
    if (!config_path.empty()) config = load_config(config_path);
    if (seed_opt->count() > 0) config["seed"] = seed;
    if (size_opt->count() > 0) config["ensemble_size"] = ensemble_size;
    if (lambda_opt->count() > 0) config["lambda"] = lambda;

    uhe::ScenarioReport report = uhe::run_scenario(scenario, config);
    uhe::emit_report(report, out_dir);

    const std::filesystem::path out(out_dir);
    std::cout << "scenario " << report.scenario << " done\n";
    std::cout << "wrote " << (out / "report.json").string() << "\n";
    std::cout << "wrote " << (out / "series.csv").string() << "\n";
    for (const auto& p : report.profiles) {
      std::cout << "wrote " << (out / (p.name + ".csv")).string() << "\n";
    }
    if (!report.ensemble_snapshot.empty()) {
      std::cout << "wrote " << (out / "ensemble.csv").string() << "\n";
    }
    return kExitOk;
  } catch (const uhe::ConvergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConvergence;
  } catch (const uhe::IoError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitIo;
  } catch (const uhe::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const uhe::TimeSpanError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
