// Acceptance suite: one line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "invreg/diagnostics.hpp"
#include "invreg/dynamics.hpp"
#include "invreg/errors.hpp"
#include "invreg/integrate.hpp"
#include "invreg/scenarios.hpp"

namespace {

using namespace invreg;

struct Outcome {
  bool pass = true;
  std::string detail;

  void require(bool ok, const std::string& what) {
    pass = pass && ok;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [FAILED]");
  }
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

struct Run {
  Scenario scenario;
  Trajectory traj;
  double seconds = 0.0;
};

Run simulate(ScenarioSpec spec) {
  Scenario sc = build(spec);
  const auto start = std::chrono::steady_clock::now();
  Trajectory traj = integrate(sc.models, sc.mode, sc.s0, sc.integration);
  return {std::move(sc), std::move(traj), seconds_since(start)};
}

Run simulate(const std::string& name, double t_end, double h, std::size_t stride = 1) {
  ScenarioSpec spec = builtin_spec(name);
  spec.integration.t_end = t_end;
  spec.integration.h = h;
  spec.integration.log_stride = stride;
  return simulate(spec);
}

/// Largest |varphi(psi(x(t)))| over the final quarter of the run.
double final_quarter_distance(const Run& r) {
  const double t0 = r.traj.times.front();
  const double t_from = r.traj.times.back() - 0.25 * (r.traj.times.back() - t0);
  double worst = 0.0;
  for (std::size_t k = 0; k < r.traj.size(); ++k) {
    if (r.traj.times[k] < t_from) continue;
    worst = std::max(worst, std::abs(r.traj.derived[k].varphi_psi));
  }
  return worst;
}

Outcome regulation_hopf(const std::string& name) {
  Outcome o;
  const Run run = simulate(name, 40.0, 1e-3);
  const Run ref = simulate(name, 40.0, 1e-5, 100);
  const double d = final_quarter_distance(run);
  const double d_ref = final_quarter_distance(ref);
  o.require(!run.traj.failed() && d <= 1e-2, name + " max|phi(psi)| final 25% = " + num(d));
  o.require(std::abs(d - d_ref) <= 1e-3 * std::max(d_ref, 1e-12) + 1e-12,
            "reference h=1e-5 gives " + num(d_ref));
  o.require(run.seconds < 5.0, "runtime " + num(run.seconds) + " s");
  return o;
}

Outcome regulation_scalar() {
  Outcome o;
  const Run run = simulate("scalar-equilibrium", 10.0, 1e-3);
  const Run ref = simulate("scalar-equilibrium", 10.0, 1e-5, 100);
  const double x = std::abs(run.traj.states.back().x[0]);
  const double x_ref = std::abs(ref.traj.states.back().x[0]);
  o.require(!run.traj.failed() && x <= 1e-2, "scalar |x(10)| = " + num(x));
  o.require(std::abs(x - x_ref) <= 1e-6 * x_ref, "reference h=1e-5 gives " + num(x_ref));
  o.require(run.seconds < 5.0, "runtime " + num(run.seconds) + " s");
  return o;
}

struct BuiltinResult {
  Run run;
  Verdict verdict;
};

const std::map<std::string, BuiltinResult>& builtin_runs() {
  static const std::map<std::string, BuiltinResult> runs = [] {
    std::map<std::string, BuiltinResult> out;
    for (const auto& name : builtin_names()) {
      Run r = simulate(builtin_spec(name));
      Verdict v = report(r.traj, r.scenario.models, r.scenario.mode, r.scenario.diagnostics);
      out.emplace(name, BuiltinResult{std::move(r), std::move(v)});
    }
    return out;
  }();
  return runs;
}

Outcome boundedness(const std::string& name) {
  Outcome o;
  const Run& r = builtin_runs().at(name).run;
  const SimState& s0 = r.traj.states.front();
  const double scale = std::max({norm(s0.x), norm(s0.theta), norm(r.traj.derived.front().theta_hat),
                                 norm(s0.xi), norm(s0.nu)});
  double worst = 0.0;
  bool finite = !r.traj.failed();
  for (std::size_t k = 0; k < r.traj.size(); ++k) {
    const SimState& s = r.traj.states[k];
    finite = finite && all_finite(s) && all_finite(r.traj.derived[k].theta_hat);
    worst = std::max({worst, norm(s.x), norm(r.traj.derived[k].theta_hat), norm(s.xi),
                      norm(s.nu)});
  }
  o.require(finite && worst < 10.0 * scale,
            name + " max norm " + num(worst) + " < 10 x " + num(scale));
  return o;
}

Outcome monotonicity(const std::string& name) {
  Outcome o;
  const Run& r = builtin_runs().at(name).run;
  for (const auto& [label, trace] :
       {std::pair{"V_theta", v_theta_trace(r.traj, r.scenario.models)},
        std::pair{"V_xi", v_xi_trace(r.traj, r.scenario.models)}}) {
    const double rise = max_forward_increase(trace).value;
    const double limit = 1e-6 * (1.0 + trace.front().value);
    o.require(rise <= limit, name + " " + label + " rise " + num(rise) + " <= " + num(limit));
  }
  return o;
}

Outcome embedding(const std::string& name) {
  Outcome o;
  const Run& r = builtin_runs().at(name).run;
  const SimState& last = r.traj.states.back();
  const double gap = norm(sub(last.x, last.xi));
  o.require(gap <= 1e-3, name + " final |x-xi| = " + num(gap));

  ScenarioSpec spec = builtin_spec(name);
  spec.init.identity_init = true;
  const Run id = simulate(spec);
  double worst = 0.0;
  for (const SimState& s : id.traj.states) {
    worst = std::max({worst, norm(sub(s.x, s.xi)), norm(sub(s.theta, s.nu))});
  }
  o.require(!id.traj.failed() && worst <= 1e-9, "identity-init drift " + num(worst));
  return o;
}

Outcome l2_memberships(const std::string& name) {
  Outcome o;
  const Run& r = builtin_runs().at(name).run;
  for (Signal s : {Signal::alpha_error, Signal::embedding_error}) {
    const L2Tail t = l2_tail(r.traj, s, 0.25);
    const double ratio = t.total > 0.0 ? t.tail / t.total : 0.0;
    o.require(ratio <= 0.05, name + " " + to_string(s) + " tail/total " + num(ratio));
  }
  return o;
}

template <class F>
Outcome all_builtins(F&& per, const std::vector<std::string>& names) {
  Outcome o;
  for (const auto& name : names) {
    const Outcome one = per(name);
    o.pass = o.pass && one.pass;
    o.detail += (o.detail.empty() ? "" : "; ") + one.detail;
  }
  return o;
}

Outcome finite_form() {
  Outcome o;
  for (const std::string name : {"scalar-equilibrium", "hopf-circle"}) {
    const Run coarse = simulate(name, 10.0, 1e-3, 4);
    const Run fine = simulate(name, 10.0, 1e-3, 2);
    const double rc = finite_form_consistency(coarse.traj, coarse.scenario.models,
                                              coarse.scenario.mode).max_residual;
    const double rf =
        finite_form_consistency(fine.traj, fine.scenario.models, fine.scenario.mode).max_residual;
    const double ratio = rc / rf;
    o.require(ratio >= 2.5 && ratio <= 6.0,
              name + " residual " + num(rc) + " -> " + num(rf) + " ratio " + num(ratio));
  }
  return o;
}

Outcome excitation() {
  Outcome o;
  const BuiltinResult& drift = builtin_runs().at("hopf-circle-drift");
  const DiagnosticsConfig& dg = drift.run.scenario.diagnostics;
  const Trace eig = pe_min_eig(drift.run.traj, drift.run.scenario.models, 2 * M_PI,
                               dg.pe_start_time);
  double lowest = INFINITY;
  for (const auto& p : eig) lowest = std::min(lowest, p.value);
  o.require(lowest >= 2.5, "drift PE min eig " + num(lowest) + " >= 2.5");

  const Check& fit = drift.verdict.at("exp_rate_fit");
  const double residual = fit.details.count("residual") ? fit.details.at("residual") : INFINITY;
  o.require(fit.passed() && fit.measured > 0.0 && residual <= 0.5,
            "rate c = " + num(fit.measured) + ", residual " + num(residual));

  const BuiltinResult& scalar = builtin_runs().at("scalar-equilibrium");
  const Check& pe = scalar.verdict.at("pe_gramian");
  const double x10 = std::abs(scalar.run.traj.states.back().x[0]);
  o.require(pe.status == CheckStatus::fail && pe.informational && x10 <= 1e-2,
            "scalar PE reported " + to_string(pe.status) + " (" + pe.note + "), |x(10)| " +
                num(x10));
  return o;
}

Outcome theorem2() {
  const std::string name = "hopf-circle-kappa-zero";
  Outcome o = regulation_hopf(name);
  for (const Outcome& part :
       {boundedness(name), monotonicity(name), embedding(name), l2_memberships(name)}) {
    o.pass = o.pass && part.pass;
    o.detail += "; " + part.detail;
  }
  return o;
}

Outcome integrator_order() {
  Outcome o;
  const FlatRhs decay = [](double, std::span<const double> y) { return Vector{-y[0]}; };
  std::vector<double> errors;
  for (double h : {0.1, 0.05, 0.025}) {
    const FlatSolution sol = integrate_flat(decay, 0.0, Vector{1.0}, 1.0, h);
    errors.push_back(std::abs(sol.states.back()[0] - std::exp(-1.0)));
  }
  for (std::size_t i = 0; i + 1 < errors.size(); ++i) {
    const double ratio = errors[i] / errors[i + 1];
    o.require(ratio >= 8.0 && ratio <= 32.0, "error ratio " + num(ratio));
  }
  return o;
}

Outcome sensitivity() {
  Outcome o;
  auto failing = [](const std::string& file) {
    std::ifstream in(std::string(INVREG_CONFIG_DIR) + "/" + file);
    const ScenarioSpec spec = parse_config(nlohmann::json::parse(in));
    DiagnosticsConfig cfg = spec.diagnostics;
    cfg.asserted_assumptions = spec.asserted_assumptions;
    const Verdict v = verify_assumptions(spec.plant, spec.drift, spec.target, spec.mode, cfg);
    std::vector<std::string> out;
    for (const auto& c : v.checks) {
      if (!c.informational && !c.passed()) out.push_back(c.name);
    }
    return out;
  };
  auto describe = [](const std::vector<std::string>& names) {
    std::string s;
    for (const auto& n : names) s += (s.empty() ? "" : ",") + n;
    return s.empty() ? std::string("none") : s;
  };
  const auto baseline = failing("hopf-circle.json");
  o.require(baseline.empty(), "baseline fails " + describe(baseline));
  for (const auto& [file, check] :
       std::vector<std::pair<std::string, std::string>>{
           {"verify-indefinite-h.json", "h_positive_definite"},
           {"verify-expanding-drift.json", "drift_contraction"},
           {"verify-kappa-too-small.json", "kappa_bound"},
           {"verify-region-origin.json", "manifold_inequality"}}) {
    const auto got = failing(file);
    o.require(got == std::vector<std::string>{check}, file + " fails " + describe(got));
  }
  return o;
}

}  // namespace

int main() {
  const std::vector<std::string> all = builtin_names();
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"C1 regulation",
       [] {
         Outcome o = regulation_scalar();
         const Outcome h = regulation_hopf("hopf-circle");
         o.pass = o.pass && h.pass;
         o.detail += "; " + h.detail;
         return o;
       }},
      {"C2 boundedness", [&] { return all_builtins(boundedness, all); }},
      {"C3 lyapunov monotonicity", [&] { return all_builtins(monotonicity, all); }},
      {"C4 embedding", [&] { return all_builtins(embedding, all); }},
      {"C5 finite-form consistency", finite_form},
      {"C6 excitation and exponential rate", excitation},
      {"C7 L2 memberships", [&] { return all_builtins(l2_memberships, all); }},
      {"C8 kappa-zero mode", theorem2},
      {"C9 integrator order", integrator_order},
      {"C10 assumption verifier sensitivity", sensitivity},
  };

  int failed = 0;
  for (const auto& [label, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    if (!o.pass) ++failed;
    std::printf("%s %s: %s\n", o.pass ? "PASS" : "FAIL", label.c_str(), o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(criteria.size()) - failed,
              criteria.size());
  return failed == 0 ? 0 : 1;
}
