#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "vanetsim/errors.hpp"
#include "vanetsim/metrics/metrics.hpp"
#include "vanetsim/scenario/config.hpp"
#include "vanetsim/scenario/sweep.hpp"
#include "vanetsim/version.hpp"

namespace vanetsim {

enum ExitCode : int { kExitOk = 0, kExitConfig = 1, kExitRuntime = 2 };

namespace detail {

inline int run_command(const std::string& config_path, const std::string& out_path, const std::string& plot_dir,
                       const std::string& log_path, std::ostream& out, std::ostream& err) {
  ScenarioConfig cfg;
  try {
    cfg = load_config(config_path);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }

  std::ofstream csv_file;
  if (!out_path.empty()) {
    csv_file.open(out_path, std::ios::binary);
    if (!csv_file) {
      err << "error: cannot write " << out_path << '\n';
      return kExitRuntime;
    }
  }
  std::ofstream log_file;
  if (!log_path.empty()) {
    log_file.open(log_path, std::ios::binary);
    if (!log_file) {
      err << "error: cannot write " << log_path << '\n';
      return kExitRuntime;
    }
  }

  SweepResult result;
  try {
    result = run_sweep(cfg, log_path.empty() ? nullptr : &log_file);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }

  try {
    write_metrics_csv(out_path.empty() ? out : csv_file, result.summaries);
    if (!plot_dir.empty()) write_plot_data(plot_dir, result.aggregates);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  if ((!out_path.empty() && !csv_file) || (!log_path.empty() && !log_file)) {
    err << "error: write failed\n";
    return kExitRuntime;
  }
  return kExitOk;
}

}  // namespace detail

/// Entry point of the `vanetsim` tool. Returns the process exit code.
inline int cli_main(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Discrete-event VANET message dissemination simulator", "vanetsim"};
  app.require_subcommand(1, 1);

  std::string config_path, out_path, plot_dir, log_path;
  auto* run = app.add_subcommand("run", "Run the density sweep and write the metrics CSV");
  run->add_option("--config", config_path, "Scenario configuration (JSON)")->required();
  run->add_option("--out", out_path, "Metrics CSV path (default: standard output)");
  run->add_option("--plot-data", plot_dir, "Directory for per-metric plot-data files");
  run->add_option("--event-log", log_path, "Event log path");

  std::string validate_path;
  auto* check = app.add_subcommand("validate", "Check a configuration and print it fully resolved");
  check->add_option("--config", validate_path, "Scenario configuration (JSON)")->required();

  auto* version = app.add_subcommand("version", "Print the version");

  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("vanetsim");
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    const CLI::App* scope = run->parsed() ? run : check->parsed() ? check : &app;
    err << scope->help();
    return kExitConfig;
  }

  if (version->parsed()) {
    out << "vanetsim " << kVersion << '\n';
    return kExitOk;
  }
  if (check->parsed()) {
    try {
      out << to_json(load_config(validate_path)).dump(2) << '\n';
      return kExitOk;
    } catch (const ConfigError& e) {
      err << "error: " << e.what() << '\n';
      return kExitConfig;
    }
  }
  return detail::run_command(config_path, out_path, plot_dir, log_path, out, err);
}

inline int cli_main(int argc, char** argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  std::vector<std::string> args(argv + (argc > 0 ? 1 : 0), argv + argc);
  return cli_main(args, out, err);
}

}  // namespace vanetsim
