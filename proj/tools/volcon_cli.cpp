// Command-line front end: run a scenario, run a parameter sweep, or validate a
// configuration. Exit codes: 0 success, 1 integrator failure, 2 configuration
// or I/O error. VOLCON_LOG_LEVEL selects the log level (trace ... off).

#include <cstdlib>
#include <iostream>
#include <optional>
#include <thread>

#include <spdlog/spdlog.h>

#include "CLI11.hpp"
#include "volcon/errors.hpp"
#include "volcon/harness.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitIntegration = 1;
constexpr int kExitConfig = 2;

void configure_logging() {
  spdlog::set_pattern("[%l] %v");
  spdlog::set_level(spdlog::level::info);
  if (const char* level = std::getenv("VOLCON_LOG_LEVEL")) {
    spdlog::set_level(spdlog::level::from_str(level));
  }
}

}  // namespace

int main(int argc, char** argv) {
  configure_logging();
  CLI::App app{"Volumetric penalty contact simulator"};
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::optional<double> duration;
  std::optional<double> h_max;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());

  CLI::App* run = app.add_subcommand("run", "Simulate one scenario and write its CSV files");
  run->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  run->add_option("--out", out_dir, "Output directory")->required();
  run->add_option("--duration", duration, "Override the simulated duration [s]")
      ->check(CLI::NonNegativeNumber);
  run->add_option("--h-max", h_max, "Override the maximum integrator step [s]")
      ->check(CLI::PositiveNumber);

  CLI::App* sweep = app.add_subcommand("sweep", "Run every cell of the scenario's sweep grid");
  sweep->add_option("--config", config_path, "Scenario JSON")->required()->check(CLI::ExistingFile);
  sweep->add_option("--out", out_dir, "Output directory")->required();
  sweep->add_option("--jobs", jobs, "Concurrent cells")->check(CLI::PositiveNumber);

  CLI::App* validate = app.add_subcommand("validate", "Check a configuration and report violations");
  validate->add_option("--config", config_path, "Scenario JSON")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    volcon::harness::ScenarioConfig config = volcon::harness::load_config(config_path);
    if (duration) config.duration = *duration;
    if (h_max) config.integrator.h_max = *h_max;

    if (*run) {
      const auto summary = volcon::harness::run(config, out_dir);
      if (!summary.ok) {
        spdlog::error("integration failed at t = {}: {}", summary.end_time, summary.message);
        return kExitIntegration;
      }
      return kExitOk;
    }
    if (*sweep) {
      const auto results = volcon::harness::run_sweep(config, out_dir, jobs);
      std::size_t failed = 0;
      for (const auto& r : results) failed += r.failed ? 1 : 0;
      if (failed > 0) spdlog::warn("{} of {} sweep cells failed", failed, results.size());
      return kExitOk;
    }
    volcon::harness::build_scenario(config);
    std::cout << config_path << ": ok\n";
    return kExitOk;
  } catch (const volcon::harness::ConfigError& e) {
    std::cerr << e.what() << '\n';
    return kExitConfig;
  } catch (const volcon::ParameterError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}
