#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace invreg::cli {

enum ExitCode : int {
  kExitOk = 0,
  kExitCheckFailed = 1,
  kExitConfigError = 2,
  kExitIntegrationFailed = 3,
};

struct RunOptions {
  std::optional<double> h;
  std::optional<double> t_end;
  std::optional<std::string> mode;  ///< theorem1 or theorem2
  std::optional<std::string> out_dir;
  bool plot = false;
  std::size_t jobs = 1;
};

/// Integrates one configuration, writes <stem>.csv, <stem>.verdict.json and
/// optionally <stem>.svg. Diagnostics go to `log`.
int cmd_run(const std::string& config_path, const RunOptions& options, std::ostream& log);

/// Runs several configurations, at most options.jobs at a time. Output of each
/// job is buffered and written in input order. Returns the largest exit code.
int cmd_run_all(const std::vector<std::string>& config_paths, const RunOptions& options,
                std::ostream& log);

/// Assumption sweeps only; writes <stem>.verdict.json.
int cmd_verify(const std::string& config_path, const std::optional<std::string>& out_dir,
               std::ostream& log);

/// Recomputes the run-time verdict from a stored trajectory.
int cmd_report(const std::string& csv_path, const std::string& config_path,
               const std::optional<std::string>& out_dir, std::ostream& log);

}  // namespace invreg::cli
