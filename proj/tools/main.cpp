#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulate and check adaptive regulation to invariant sets"};
  app.require_subcommand(1);

  std::vector<std::string> run_configs;
  invreg::cli::RunOptions run_opts;
  std::optional<double> h;
  std::optional<double> t_end;
  std::optional<std::string> mode;
  std::optional<std::string> out_dir;
  auto* run = app.add_subcommand("run", "Integrate scenarios and write CSV, verdict JSON and plots");
  run->set_help_flag("--help", "Print this help message and exit");
  run->add_option("config", run_configs, "Scenario configuration files")->required()->check(
      CLI::ExistingFile);
  run->add_option("--h", h, "Step size (initial step in adaptive mode)");
  run->add_option("--t-end", t_end, "Integration horizon end");
  run->add_option("--mode", mode, "Controller mode")
      ->check(CLI::IsMember({"theorem1", "theorem2"}));
  run->add_option("--out", out_dir, "Output directory");
  run->add_flag("--plot", run_opts.plot, "Also write an SVG plot");
  run->add_option("--jobs", run_opts.jobs, "Configurations to run in parallel")
      ->check(CLI::Range(1, 256));

  std::string verify_config;
  std::optional<std::string> verify_out;
  auto* verify = app.add_subcommand("verify", "Check the standing assumptions by sampling");
  verify->add_option("config", verify_config, "Scenario configuration file")->required();
  verify->add_option("--out", verify_out, "Output directory");

  std::string report_csv;
  std::string report_config;
  std::optional<std::string> report_out;
  auto* rep = app.add_subcommand("report", "Recompute the verdict from a stored trajectory");
  rep->add_option("csv", report_csv, "Trajectory CSV written by run")->required();
  rep->add_option("config", report_config, "Scenario configuration file")->required();
  rep->add_option("--out", report_out, "Output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : invreg::cli::kExitConfigError;
  }

  if (*run) {
    run_opts.h = h;
    run_opts.t_end = t_end;
    run_opts.mode = mode;
    run_opts.out_dir = out_dir;
    return invreg::cli::cmd_run_all(run_configs, run_opts, std::cerr);
  }
  if (*verify) return invreg::cli::cmd_verify(verify_config, verify_out, std::cerr);
  return invreg::cli::cmd_report(report_csv, report_config, report_out, std::cerr);
}
