#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>
#include <thread>

#include <nlohmann/json.hpp>

#include "csv.hpp"
#include "invreg/errors.hpp"
#include "invreg/scenarios.hpp"
#include "svg_plot.hpp"
#include "verdict_json.hpp"

namespace invreg::cli {
namespace fs = std::filesystem;
using nlohmann::json;

namespace {

class ConfigError : public Error {
 public:
  using Error::Error;
};

struct LoadedConfig {
  json tree;
  ScenarioSpec spec;
  fs::path out_dir;
  std::string stem;
  bool plot = false;
};

json read_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

LoadedConfig load(const std::string& path, const RunOptions* flags,
                  const std::optional<std::string>& out_dir) {
  LoadedConfig cfg;
  cfg.tree = read_json(path);
  if (flags != nullptr && cfg.tree.is_object()) {
    json& overrides = cfg.tree["overrides"];
    if (overrides.is_null()) overrides = json::object();
    if (overrides.is_object()) {
      if (flags->h) overrides["h"] = *flags->h;
      if (flags->t_end) overrides["t_end"] = *flags->t_end;
      if (flags->mode) overrides["mode"] = *flags->mode;
    }
  }
  cfg.spec = parse_config(cfg.tree);

  cfg.stem = fs::path(path).stem().string();
  cfg.out_dir = ".";
  if (cfg.tree.contains("output")) {
    const json& o = cfg.tree["output"];
    if (o.contains("stem")) cfg.stem = o["stem"].get<std::string>();
    if (o.contains("dir")) cfg.out_dir = o["dir"].get<std::string>();
    if (o.contains("plot")) cfg.plot = o["plot"].get<bool>();
  }
  if (out_dir) cfg.out_dir = *out_dir;
  if (flags != nullptr && flags->plot) cfg.plot = true;
  return cfg;
}

void write_file(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out << content;
  if (!out) throw ConfigError("failed writing '" + path.string() + "'");
}

/// The same text whether the failure is seen live or recovered from a CSV.
void normalize_failure(Trajectory& traj, double t_end) {
  if (traj.empty() || traj.times.back() >= t_end) {
    traj.failure.reset();
    return;
  }
  IntegrationFailure f;
  f.time = traj.times.back();
  f.message = "trajectory ends at t = " + format_number(traj.times.back()) +
              " before t_end = " + format_number(t_end);
  if (traj.failure) f.kind = traj.failure->kind;
  traj.failure = f;
}

int exit_for(const Trajectory& traj, bool passed) {
  if (traj.failed()) return kExitIntegrationFailed;
  return passed ? kExitOk : kExitCheckFailed;
}

std::string summary_line(const Verdict& v) {
  std::size_t failed = 0;
  std::size_t hard = 0;
  for (const auto& c : v.checks) {
    if (c.informational) continue;
    ++hard;
    if (!c.passed()) ++failed;
  }
  return std::to_string(hard - failed) + "/" + std::to_string(hard) + " hard checks passed";
}

void log_failures(const Verdict& v, std::ostream& log) {
  for (const auto& c : v.checks) {
    if (c.informational || c.passed()) continue;
    log << "  " << to_string(c.status) << ": " << c.name << " measured "
        << format_number(c.measured) << ' ' << c.relation << ' ' << format_number(c.threshold);
    if (!c.note.empty()) log << " (" << c.note << ')';
    log << '\n';
  }
}

template <class F>
int guarded(const std::string& label, std::ostream& log, F&& body) {
  try {
    return body();
  } catch (const Error& e) {
    log << label << ": " << e.what() << '\n';
    return kExitConfigError;
  } catch (const json::exception& e) {
    log << label << ": " << e.what() << '\n';
    return kExitConfigError;
  }
}

struct Evaluation {
  Verdict assumptions;
  Verdict diagnostics;
  json document;
  bool passed = false;
};

Evaluation evaluate(const Scenario& sc, const Trajectory& traj) {
  Evaluation out;
  out.assumptions = verify_assumptions(sc.models, sc.mode, sc.diagnostics);
  out.diagnostics = report(traj, sc.models, sc.mode, sc.diagnostics);
  out.document = verdict_document(sc.name, sc.mode, out.assumptions, out.diagnostics);
  out.passed = out.assumptions.passed() && out.diagnostics.passed();
  return out;
}

}  // namespace

int cmd_run(const std::string& config_path, const RunOptions& options, std::ostream& log) {
  return guarded(config_path, log, [&] {
    const LoadedConfig cfg = load(config_path, &options, options.out_dir);
    const Scenario sc = build(cfg.spec);

    Trajectory traj = integrate(sc.models, sc.mode, sc.s0, sc.integration);
    if (traj.failed()) log << config_path << ": " << traj.failure->message << '\n';
    normalize_failure(traj, sc.integration.t_end);

    std::ostringstream csv;
    write_trajectory_csv(csv, traj, sc.models);
    const fs::path base = cfg.out_dir / cfg.stem;
    write_file(base.string() + ".csv", csv.str());

    const Evaluation ev = evaluate(sc, traj);
    write_file(base.string() + ".verdict.json", dump(ev.document));

    if (cfg.plot && !traj.empty()) {
      std::ostringstream svg;
      write_svg(svg, traj, sc.models, sc.name);
      write_file(base.string() + ".svg", svg.str());
    }

    const int code = exit_for(traj, ev.passed);
    log << config_path << ": " << sc.name << " -> " << base.string() << ".csv ["
        << (code == kExitOk ? "pass" : "FAIL") << "]\n";
    log_failures(ev.assumptions, log);
    log_failures(ev.diagnostics, log);
    return code;
  });
}

int cmd_run_all(const std::vector<std::string>& config_paths, const RunOptions& options,
                std::ostream& log) {
  const std::size_t count = config_paths.size();
  std::vector<std::string> logs(count);
  std::vector<int> codes(count, kExitOk);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < count; i = next++) {
      std::ostringstream buf;
      codes[i] = cmd_run(config_paths[i], options, buf);
      logs[i] = buf.str();
    }
  };
  const std::size_t threads = std::clamp<std::size_t>(options.jobs, 1, std::max<std::size_t>(count, 1));
  if (threads == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
  }
  int worst = kExitOk;
  for (std::size_t i = 0; i < count; ++i) {
    log << logs[i];
    worst = std::max(worst, codes[i]);
  }
  return worst;
}

int cmd_verify(const std::string& config_path, const std::optional<std::string>& out_dir,
               std::ostream& log) {
  return guarded(config_path, log, [&] {
    const LoadedConfig cfg = load(config_path, nullptr, out_dir);
    const ScenarioSpec& spec = cfg.spec;
    DiagnosticsConfig diag = spec.diagnostics;
    diag.asserted_assumptions = spec.asserted_assumptions;
    const Verdict v = verify_assumptions(spec.plant, spec.drift, spec.target, spec.mode, diag);
    const fs::path base = cfg.out_dir / cfg.stem;
    write_file(base.string() + ".verdict.json",
               dump(verdict_document(spec.name, spec.mode, v, std::nullopt)));
    log << config_path << ": " << spec.name << ' ' << summary_line(v) << '\n';
    log_failures(v, log);
    return v.passed() ? kExitOk : kExitCheckFailed;
  });
}

int cmd_report(const std::string& csv_path, const std::string& config_path,
               const std::optional<std::string>& out_dir, std::ostream& log) {
  return guarded(csv_path, log, [&] {
    const LoadedConfig cfg = load(config_path, nullptr, out_dir);
    const Scenario sc = build(cfg.spec);
    std::ifstream in(csv_path, std::ios::binary);
    if (!in) throw ConfigError("cannot open trajectory '" + csv_path + "'");
    Trajectory traj = read_trajectory_csv(in, sc.models, sc.mode);
    normalize_failure(traj, sc.integration.t_end);

    const Evaluation ev = evaluate(sc, traj);
    const fs::path base = cfg.out_dir / (cfg.stem + ".report");
    write_file(base.string() + ".verdict.json", dump(ev.document));
    const int code = exit_for(traj, ev.passed);
    log << csv_path << ": " << sc.name << " -> " << base.string() << ".verdict.json ["
        << (code == kExitOk ? "pass" : "FAIL") << "]\n";
    log_failures(ev.assumptions, log);
    log_failures(ev.diagnostics, log);
    return code;
  });
}

}  // namespace invreg::cli
