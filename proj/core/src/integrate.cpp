#include "invreg/integrate.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "invreg/errors.hpp"

namespace invreg {
namespace {

void require_finite(std::span<const double> v, double t, const char* where) {
  if (!all_finite(v)) {
    throw NonFiniteState(t, std::string(where) + ": non-finite value at t = " +
                                std::to_string(t));
  }
}

FlatRhs closed_loop_flat(const Models& models, const ControllerMode& mode) {
  const std::size_t n = models.n();
  const std::size_t d = models.d();
  return [&models, &mode, n, d](double t, std::span<const double> y) {
    return pack(closed_loop_rhs(models, mode, unpack(t, y, n, d)));
  };
}

bool inside_box(const std::vector<Interval>& box, const Vector& theta) {
  if (box.empty()) return true;
  for (std::size_t i = 0; i < theta.size(); ++i) {
    if (theta[i] < box[i].lo || theta[i] > box[i].hi) return false;
  }
  return true;
}

}  // namespace

void IntegrationConfig::validate() const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument(field + ": " + why);
  };
  if (!std::isfinite(t0)) fail("t0", "must be finite");
  if (!std::isfinite(t_end) || !(t_end > t0)) fail("t_end", "must be greater than t0");
  if (!std::isfinite(h) || !(h > 0.0)) fail("h", "must be positive");
  if (adaptive) {
    if (!(tol_rel > 0.0)) fail("tol_rel", "must be positive");
    if (!(tol_abs > 0.0)) fail("tol_abs", "must be positive");
  }
  if (log_stride == 0) fail("log_stride", "must be at least 1");
  if (max_steps == 0) fail("max_steps", "must be at least 1");
}

void Trajectory::push_back(const SimState& s, DerivedSignals d) {
  times.push_back(s.t);
  states.push_back(s);
  derived.push_back(std::move(d));
}

Vector step_rk4(const FlatRhs& rhs, double t, std::span<const double> y, double h) {
  require_finite(y, t, "step_rk4");
  const std::size_t size = y.size();
  Vector stage(size);

  const Vector k1 = rhs(t, y);
  require_finite(k1, t, "step_rk4 stage 1");
  for (std::size_t i = 0; i < size; ++i) stage[i] = y[i] + 0.5 * h * k1[i];
  const Vector k2 = rhs(t + 0.5 * h, stage);
  require_finite(k2, t + 0.5 * h, "step_rk4 stage 2");
  for (std::size_t i = 0; i < size; ++i) stage[i] = y[i] + 0.5 * h * k2[i];
  const Vector k3 = rhs(t + 0.5 * h, stage);
  require_finite(k3, t + 0.5 * h, "step_rk4 stage 3");
  for (std::size_t i = 0; i < size; ++i) stage[i] = y[i] + h * k3[i];
  const Vector k4 = rhs(t + h, stage);
  require_finite(k4, t + h, "step_rk4 stage 4");

  Vector out(size);
  for (std::size_t i = 0; i < size; ++i) {
    out[i] = y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
  }
  require_finite(out, t + h, "step_rk4 result");
  return out;
}

SimState step_rk4(const Models& models, const ControllerMode& mode, const SimState& s,
                  double h) {
  if (!(h > 0.0)) throw InvalidArgument("step_rk4: h must be positive");
  check_dimensions(models, s);
  const Vector y = step_rk4(closed_loop_flat(models, mode), s.t, pack(s), h);
  return unpack(s.t + h, y, models.n(), models.d());
}

FlatSolution integrate_flat(const FlatRhs& rhs, double t0, std::span<const double> y0,
                            double t_end, double h) {
  if (!(t_end > t0) || !(h > 0.0)) {
    throw InvalidArgument("integrate_flat: need t_end > t0 and h > 0");
  }
  FlatSolution out;
  const auto steps = static_cast<std::size_t>(std::ceil((t_end - t0) / h - 1e-9));
  out.times.reserve(steps + 1);
  out.states.reserve(steps + 1);
  out.times.push_back(t0);
  out.states.emplace_back(y0.begin(), y0.end());
  for (std::size_t k = 0; k < steps; ++k) {
    const double t = out.times.back();
    const double t_next = k + 1 == steps ? t_end : t0 + static_cast<double>(k + 1) * h;
    out.states.push_back(step_rk4(rhs, t, out.states.back(), t_next - t));
    out.times.push_back(t_next);
  }
  return out;
}

Trajectory integrate(const Models& models, const ControllerMode& mode,
                     const SimState& s0, const IntegrationConfig& cfg) {
  cfg.validate();
  check_dimensions(models, s0);
  if (!all_finite(s0)) throw NonFiniteState(s0.t, "integrate: initial state is not finite");
  if (!inside_box(models.drift().theta_box, s0.theta)) {
    throw InvalidArgument("integrate: theta(t0) lies outside theta_box");
  }

  const std::size_t n = models.n();
  const std::size_t d = models.d();
  const FlatRhs rhs = closed_loop_flat(models, mode);

  Trajectory traj;
  SimState start = s0;
  start.t = cfg.t0;
  traj.push_back(start, derive(models, mode, start));

  Vector y = pack(start);
  double t = cfg.t0;
  std::size_t accepted = 0;
  std::size_t attempts = 0;
  bool last_logged = true;

  auto log_state = [&](bool force) {
    if (force || accepted % cfg.log_stride == 0) {
      const SimState s = unpack(t, y, n, d);
      traj.push_back(s, derive(models, mode, s));
      last_logged = true;
    } else {
      last_logged = false;
    }
  };

  try {
    if (!cfg.adaptive) {
      const auto steps =
          static_cast<std::size_t>(std::ceil((cfg.t_end - cfg.t0) / cfg.h - 1e-9));
      if (steps > cfg.max_steps) {
        traj.failure = IntegrationFailure{FailureKind::max_steps_exceeded, cfg.t0,
                                          "integrate: " + std::to_string(steps) +
                                              " steps exceed max_steps"};
        return traj;
      }
      for (std::size_t k = 0; k < steps; ++k) {
        const double t_next =
            k + 1 == steps ? cfg.t_end : cfg.t0 + static_cast<double>(k + 1) * cfg.h;
        y = step_rk4(rhs, t, y, t_next - t);
        t = t_next;
        ++accepted;
        log_state(k + 1 == steps);
      }
    } else {
      double h = std::min(cfg.h, cfg.t_end - cfg.t0);
      const double h_floor = 1e-14 * std::max(1.0, std::abs(cfg.t_end));
      while (t < cfg.t_end) {
        if (++attempts > cfg.max_steps) {
          traj.failure = IntegrationFailure{FailureKind::max_steps_exceeded, t,
                                            "integrate: max_steps exceeded at t = " +
                                                std::to_string(t)};
          break;
        }
        const bool final_step = t + h >= cfg.t_end;
        const double step = final_step ? cfg.t_end - t : h;

        double ratio = 0.0;
        Vector fine;
        try {
          const Vector coarse = step_rk4(rhs, t, y, step);
          fine = step_rk4(rhs, t + 0.5 * step, step_rk4(rhs, t, y, 0.5 * step),
                          0.5 * step);
          for (std::size_t i = 0; i < y.size(); ++i) {
            const double err = std::abs(fine[i] - coarse[i]) / 15.0;
            const double scale = cfg.tol_abs + cfg.tol_rel * std::abs(fine[i]);
            ratio = std::max(ratio, err / scale);
          }
        } catch (const NonFiniteState&) {
          if (step <= h_floor) throw;
          h = 0.25 * step;
          continue;
        }

        if (ratio <= 1.0) {
          y = std::move(fine);
          t = final_step ? cfg.t_end : t + step;
          ++accepted;
          log_state(final_step);
        }
        const double factor =
            ratio == 0.0 ? 5.0 : std::clamp(0.9 * std::pow(ratio, -0.2), 0.2, 5.0);
        h = std::max(step * factor, h_floor);
      }
    }
  } catch (const NonFiniteState& e) {
    traj.failure = IntegrationFailure{FailureKind::non_finite_state, e.time(), e.what()};
  }

  if (!last_logged) log_state(true);
  return traj;
}

}  // namespace invreg
