#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "invreg/dynamics.hpp"
#include "invreg/models.hpp"

namespace invreg {

struct IntegrationConfig {
  double t0 = 0.0;
  double t_end = 10.0;
  double h = 1e-3;  ///< fixed step, or initial step in adaptive mode
  bool adaptive = false;
  double tol_rel = 1e-8;
  double tol_abs = 1e-10;
  std::size_t log_stride = 1;
  std::size_t max_steps = 50'000'000;

  /// Throws InvalidArgument naming the offending field.
  void validate() const;
};

enum class FailureKind { non_finite_state, max_steps_exceeded };

struct IntegrationFailure {
  FailureKind kind = FailureKind::non_finite_state;
  double time = 0.0;
  std::string message;
};

/// Logged closed-loop run. Samples hold the state and the derived signals at
/// the same index; on failure the log stops at the last finite state.
struct Trajectory {
  std::vector<double> times;
  std::vector<SimState> states;
  std::vector<DerivedSignals> derived;
  std::optional<IntegrationFailure> failure;

  std::size_t size() const noexcept { return times.size(); }
  bool empty() const noexcept { return times.empty(); }
  bool failed() const noexcept { return failure.has_value(); }

  void push_back(const SimState& s, DerivedSignals d);
};

using FlatRhs = std::function<Vector(double t, std::span<const double> y)>;

/// One classical fourth-order Runge-Kutta step. Throws NonFiniteState if a
/// stage or the result is not finite.
Vector step_rk4(const FlatRhs& rhs, double t, std::span<const double> y, double h);

SimState step_rk4(const Models& models, const ControllerMode& mode, const SimState& s,
                  double h);

/// Fixed-step RK4 on an arbitrary flat system; returns (times, states) of every
/// step including t0 and t_end. Used for convergence studies.
struct FlatSolution {
  std::vector<double> times;
  std::vector<Vector> states;
};
FlatSolution integrate_flat(const FlatRhs& rhs, double t0, std::span<const double> y0,
                            double t_end, double h);

/// Integrates the closed loop. Fixed-step mode shortens the final step to land
/// on t_end; adaptive mode uses step doubling with per-component scale
/// tol_abs + tol_rel |y_i|. Every log_stride-th accepted step is logged, plus
/// the first and final states. Non-finite states and step-count exhaustion are
/// recorded in Trajectory::failure instead of being thrown.
Trajectory integrate(const Models& models, const ControllerMode& mode,
                     const SimState& s0, const IntegrationConfig& cfg);

}  // namespace invreg
