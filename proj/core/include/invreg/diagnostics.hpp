#pragma once

// Post-hoc checks over a logged closed-loop trajectory. Each Lyapunov-style
// argument is turned into a measured quantity with a threshold.

#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invreg/integrate.hpp"
#include "invreg/models.hpp"

namespace invreg {

/// Axis-aligned box with an optional radial band ||x|| in [min_radius, max_radius].
struct SampleRegion {
  Vector lo;
  Vector hi;
  double min_radius = 0.0;
  double max_radius = std::numeric_limits<double>::infinity();

  bool contains(const Vector& x) const;
};

struct AssumptionTolerances {
  double drift = 1e-8;       ///< max eig of H JS + JS^T H
  double manifold = 1e-8;    ///< dissipation inequality on psi
  double kappa = 1e-8;       ///< ||grad psi|| <= |kappa|
  double invariance = 1e-6;  ///< grad psi . f0 on the target level set
  double potential = 1e-8;   ///< integral of varphi from 0 to psi is >= 0
};

struct DiagnosticsConfig {
  // Persistency of excitation.
  double pe_window_T = 6.283185307179586;
  double pe_delta = 1e-3;
  double pe_start_time = 0.0;  ///< windows and the rate fit start here
  bool expect_pe = true;       ///< false: PE and rate fit are informational

  double monotonicity_slack = 1e-6;
  double l2_tail_fraction = 0.25;
  double l2_tail_ratio = 0.05;

  double target_tail_fraction = 0.25;
  double target_tolerance = 1e-2;
  double observer_tolerance = 1e-3;
  double bound_factor = 10.0;
  /// C in the finite-form threshold C * dt^2, dt the largest logged interval.
  double finite_form_constant = 5e4;
  double rate_fit_max_residual = 0.5;
  double rate_fit_floor = 1e-10;

  std::size_t sample_count = 2000;
  SampleRegion sample_region;
  AssumptionTolerances tolerances;
  /// Assumptions that cannot be sampled and are certified by the scenario
  /// author; listed in the verdict as informational entries.
  std::vector<std::string> asserted_assumptions;

  /// Throws InvalidArgument naming the offending field.
  void validate(std::size_t n) const;
};

enum class CheckStatus { pass, fail, not_evaluated };
std::string to_string(CheckStatus s);

struct Check {
  std::string name;
  CheckStatus status = CheckStatus::not_evaluated;
  bool informational = false;
  double measured = 0.0;
  std::string relation = "<=";  ///< how measured compares against threshold
  double threshold = 0.0;
  std::optional<double> worst_time;
  std::optional<Vector> worst_location;
  std::string note;
  std::map<std::string, double> details;

  bool passed() const noexcept { return status == CheckStatus::pass; }
};

struct Verdict {
  std::vector<Check> checks;

  /// True when every non-informational check passed.
  bool passed() const;
  const Check& at(const std::string& name) const;
  const Check* find(const std::string& name) const;
  void add(Check c);  ///< throws InvalidArgument on duplicate names
};

struct TracePoint {
  double t = 0.0;
  double value = 0.0;
};
using Trace = std::vector<TracePoint>;

/// ||theta - theta_hat||_H^2 + 1/2 int_t^{t_end} (kappa^2 + 1) ||e||^2, with the
/// tail integral truncated at the last logged time (trapezoidal rule).
Trace v_theta_trace(const Trajectory& traj, const Models& models);

/// 0.5 ||x - xi||^2 + 0.5 ||theta - nu||_H^2.
Trace v_xi_trace(const Trajectory& traj, const Models& models);

/// int_0^{psi(x)} varphi, adaptive Simpson to 1e-9.
Trace v_psi_trace(const Trajectory& traj, const Models& models);

/// Largest increase of a trace over any earlier value.
struct ForwardIncrease {
  double value = 0.0;
  double time = 0.0;
};
ForwardIncrease max_forward_increase(const Trace& trace);

/// Minimum eigenvalue of the sliding-window Gramian of alpha(xi) over windows
/// [t, t + window] with t >= start_time. Throws WindowTooLong if no window fits
/// or the window spans fewer than two logged intervals.
Trace pe_min_eig(const Trajectory& traj, const Models& models, double window,
                 double start_time = 0.0);

struct ExpFit {
  double amplitude = 0.0;  ///< D0
  double rate = 0.0;       ///< c in D0 exp(-c t)
  double residual = 0.0;   ///< RMS residual of the log-linear fit
  std::size_t points = 0;
};
/// Largest value in each consecutive window [start + kT, start + (k+1)T),
/// keeping the time at which it occurs. Incomplete final windows are dropped.
Trace window_maxima(const Trace& series, double window, double start);

/// Least-squares fit of log(value) against t, ignoring values below 1e-12.
/// Throws DegenerateSeries with fewer than five usable points.
ExpFit fit_exp_rate(std::span<const TracePoint> series);

struct FiniteFormResidual {
  double max_residual = 0.0;
  double worst_time = 0.0;
};
/// Central-difference derivative of the logged theta_hat against virtual_rhs
/// with eps = e(t), over interior samples.
FiniteFormResidual finite_form_consistency(const Trajectory& traj, const Models& models,
                                           const ControllerMode& mode);

enum class Signal { alpha_error, embedding_error, psi_gradient_error };
/// Accepts "alpha_error", "embedding_error", "psi_gradient_error".
Signal signal_from_name(const std::string& name);
std::string to_string(Signal s);

struct L2Tail {
  double total = 0.0;
  double tail = 0.0;
};
L2Tail l2_tail(const Trajectory& traj, Signal signal, double tail_fraction);

/// Assumption sweeps over a Halton sample of cfg.sample_region (and of
/// theta_box for the drift check). Failures are verdicts, not errors.
Verdict verify_assumptions(const PlantModel& plant, const DriftModel& drift,
                           const TargetSpec& target, const ControllerMode& mode,
                           const DiagnosticsConfig& cfg);
Verdict verify_assumptions(const Models& models, const ControllerMode& mode,
                           const DiagnosticsConfig& cfg);

/// Trajectory checks: integration, boundedness, target and observer
/// convergence, Lyapunov monotonicity, L2 tails, PE, rate fit, finite form.
Verdict report(const Trajectory& traj, const Models& models, const ControllerMode& mode,
               const DiagnosticsConfig& cfg);

/// Halton point in [0,1)^dim (bases are the first primes).
Vector halton_point(std::size_t index, std::size_t dim);

/// Adaptive Simpson quadrature of f over [a, b] to absolute tolerance tol.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol);

}  // namespace invreg
