// mixctl <mode> --config <path> [--out <dir>] [--paper-scale]
//
// Exit status: 0 on success, 2 on configuration or I/O errors, 3 when a
// numerical check aborts the run.

#include <exception>
#include <iostream>
#include <string>

#include "CLI11.hpp"

#include "mixctl/app/run.hpp"

namespace {

constexpr int exit_config = 2;
constexpr int exit_numerical = 3;

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Open-system optimal control of mixed-state preparation"};
  std::string mode_name, config_path, out_dir;
  bool paper_scale = false;
  app.add_option("mode", mode_name,
                 "propagate | optimize | steady-state | scan-time-cooperativity | noise-scan | switchback")
      ->required();
  app.add_option("--config", config_path, "JSON run configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides output_dir)");
  app.add_flag("--paper-scale", paper_scale, "use the full-size optomechanical parameter set as defaults");
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return exit_config;
  }

  try {
    mixctl::app::RunConfig cfg =
        mixctl::app::load_config(config_path, paper_scale, mixctl::app::parse_mode(mode_name));
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    mixctl::app::run(cfg, std::cout);
  } catch (const mixctl::NumericalError& e) {
    std::cerr << "numerical error: " << e.what() << '\n';
    return exit_numerical;
  } catch (const mixctl::app::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return exit_config;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    return exit_config;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_config;
  }
  return 0;
}
