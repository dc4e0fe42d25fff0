#include "invreg/diagnostics.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <sstream>

#include "invreg/dynamics.hpp"
#include "invreg/errors.hpp"

namespace invreg {
namespace {

void require_nonempty(const Trajectory& traj, const char* what) {
  if (traj.empty()) throw EmptyTrajectory(std::string(what) + ": trajectory is empty");
}

double h_norm_sq(const Matrix& h, const Vector& v) { return dot(v, h * v); }

std::string format_double(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

// Trapezoidal integral of samples g over [a, b] where the samples live on
// `times`; partial intervals use the linear interpolant of g.
double trapezoid_between(const std::vector<double>& times, const std::vector<double>& g,
                         double a, double b) {
  double total = 0.0;
  for (std::size_t k = 0; k + 1 < times.size(); ++k) {
    const double t0 = times[k];
    const double t1 = times[k + 1];
    const double lo = std::max(a, t0);
    const double hi = std::min(b, t1);
    if (!(hi > lo)) continue;
    const double slope = (g[k + 1] - g[k]) / (t1 - t0);
    const double g_lo = g[k] + slope * (lo - t0);
    const double g_hi = g[k] + slope * (hi - t0);
    total += 0.5 * (hi - lo) * (g_lo + g_hi);
  }
  return total;
}

double simpson_step(const std::function<double(double)>& f, double a, double fa,
                    double b, double fb, double m, double fm, double whole, double tol,
                    int depth) {
  const double lm = 0.5 * (a + m);
  const double rm = 0.5 * (m + b);
  const double flm = f(lm);
  const double frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  const double delta = left + right - whole;
  if (depth <= 0 || std::abs(delta) <= 15.0 * tol) return left + right + delta / 15.0;
  return simpson_step(f, a, fa, m, fm, lm, flm, left, 0.5 * tol, depth - 1) +
         simpson_step(f, m, fm, b, fb, rm, frm, right, 0.5 * tol, depth - 1);
}

Check make_check(std::string name, double measured, std::string relation,
                 double threshold) {
  Check c;
  c.name = std::move(name);
  c.measured = measured;
  c.relation = std::move(relation);
  c.threshold = threshold;
  bool ok = false;
  if (c.relation == "<=") ok = measured <= threshold;
  else if (c.relation == ">=") ok = measured >= threshold;
  else if (c.relation == ">") ok = measured > threshold;
  c.status = ok ? CheckStatus::pass : CheckStatus::fail;
  return c;
}

std::vector<Vector> sample_points(const SampleRegion& region, std::size_t count) {
  std::vector<Vector> out;
  const std::size_t dim = region.lo.size();
  if (dim == 0 || count == 0) return out;
  out.reserve(count);
  const std::size_t max_tries = 100 * count;
  for (std::size_t i = 1; i <= max_tries && out.size() < count; ++i) {
    Vector u = halton_point(i, dim);
    for (std::size_t j = 0; j < dim; ++j) {
      u[j] = region.lo[j] + (region.hi[j] - region.lo[j]) * u[j];
    }
    if (region.contains(u)) out.push_back(std::move(u));
  }
  return out;
}

// Newton iteration on g(x) = varphi(psi(x)) along its gradient.
std::optional<Vector> project_to_level_set(const TargetSpec& target, Vector x) {
  for (int iter = 0; iter < 60; ++iter) {
    const double p = target.psi(x);
    const double g = target.varphi(p);
    if (!std::isfinite(g)) return std::nullopt;
    if (std::abs(g) <= 1e-13) return x;
    const double step = 1e-6 * (1.0 + std::abs(p));
    const double dphi = (target.varphi(p + step) - target.varphi(p - step)) / (2.0 * step);
    const Vector grad = target.grad_psi(x);
    const double gn2 = dphi * dphi * squared_norm(grad);
    if (!(gn2 > 1e-24)) return std::nullopt;
    axpy(-g * dphi / gn2, grad, x);
  }
  return std::nullopt;
}

Vector f0_raw(const PlantModel& plant, const TargetSpec& target, const Vector& x) {
  Vector out = plant.f(x);
  axpy(1.0, plant.gu * target.u0(x), out);
  return out;
}

double potential(const TargetSpec& target, double psi) {
  return adaptive_simpson(target.varphi, 0.0, psi, 1e-9);
}

std::vector<double> signal_sq(const Trajectory& traj, Signal signal) {
  std::vector<double> g(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const DerivedSignals& dv = traj.derived[k];
    switch (signal) {
      case Signal::alpha_error:
        g[k] = squared_norm(dv.alpha_error);
        break;
      case Signal::embedding_error:
        g[k] = squared_norm(dv.embedding_error);
        break;
      case Signal::psi_gradient_error: {
        const double v = dot(dv.grad_psi, add(dv.alpha_error, dv.embedding_error));
        g[k] = v * v;
        break;
      }
    }
  }
  return g;
}

}  // namespace

bool SampleRegion::contains(const Vector& x) const {
  if (x.size() != lo.size()) return false;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (x[i] < lo[i] || x[i] > hi[i]) return false;
  }
  const double r = norm(x);
  return r >= min_radius && r <= max_radius;
}

void DiagnosticsConfig::validate(std::size_t n) const {
  auto fail = [](const std::string& field, const std::string& why) {
    throw InvalidArgument(field + ": " + why);
  };
  if (!(pe_window_T > 0.0)) fail("pe_window_T", "must be positive");
  if (!(pe_delta > 0.0)) fail("pe_delta", "must be positive");
  if (!(monotonicity_slack >= 0.0)) fail("monotonicity_slack", "must be nonnegative");
  if (!(l2_tail_fraction > 0.0 && l2_tail_fraction < 1.0))
    fail("l2_tail_fraction", "must lie in (0, 1)");
  if (!(target_tail_fraction > 0.0 && target_tail_fraction < 1.0))
    fail("target_tail_fraction", "must lie in (0, 1)");
  if (!(l2_tail_ratio > 0.0)) fail("l2_tail_ratio", "must be positive");
  if (!(finite_form_constant > 0.0)) fail("finite_form_constant", "must be positive");
  if (sample_count == 0) fail("sample_count", "must be at least 1");
  if (sample_region.lo.size() != n || sample_region.hi.size() != n)
    fail("sample_region", "bounds must have the state dimension");
  for (std::size_t i = 0; i < n; ++i) {
    if (!(sample_region.lo[i] <= sample_region.hi[i]))
      fail("sample_region", "lo must not exceed hi");
  }
  if (!(sample_region.min_radius <= sample_region.max_radius))
    fail("sample_region", "min_radius must not exceed max_radius");
}

std::string to_string(CheckStatus s) {
  switch (s) {
    case CheckStatus::pass: return "pass";
    case CheckStatus::fail: return "fail";
    case CheckStatus::not_evaluated: return "not_evaluated";
  }
  return "unknown";
}

bool Verdict::passed() const {
  return std::all_of(checks.begin(), checks.end(), [](const Check& c) {
    return c.informational || c.status == CheckStatus::pass;
  });
}

const Check* Verdict::find(const std::string& name) const {
  for (const auto& c : checks)
    if (c.name == name) return &c;
  return nullptr;
}

const Check& Verdict::at(const std::string& name) const {
  if (const Check* c = find(name)) return *c;
  throw InvalidArgument("verdict has no check named '" + name + "'");
}

void Verdict::add(Check c) {
  if (find(c.name)) throw InvalidArgument("duplicate check '" + c.name + "'");
  checks.push_back(std::move(c));
}

Vector halton_point(std::size_t index, std::size_t dim) {
  static constexpr std::array<unsigned, 16> kPrimes = {2,  3,  5,  7,  11, 13, 17, 19,
                                                       23, 29, 31, 37, 41, 43, 47, 53};
  if (dim > kPrimes.size()) throw InvalidArgument("halton_point: dimension too large");
  Vector out(dim);
  for (std::size_t j = 0; j < dim; ++j) {
    const unsigned base = kPrimes[j];
    double f = 1.0;
    double r = 0.0;
    for (std::size_t i = index; i > 0; i /= base) {
      f /= base;
      r += f * static_cast<double>(i % base);
    }
    out[j] = r;
  }
  return out;
}

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double tol) {
  if (a == b) return 0.0;
  const double fa = f(a);
  const double fb = f(b);
  const double m = 0.5 * (a + b);
  const double fm = f(m);
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_step(f, a, fa, b, fb, m, fm, whole, tol, 50);
}

Trace v_theta_trace(const Trajectory& traj, const Models& models) {
  require_nonempty(traj, "v_theta_trace");
  const std::size_t count = traj.size();
  const Matrix& h = models.drift().h;

  std::vector<double> weight(count);
  for (std::size_t k = 0; k < count; ++k) {
    const DerivedSignals& dv = traj.derived[k];
    weight[k] = (dv.kappa * dv.kappa + 1.0) * squared_norm(dv.embedding_error);
  }
  // eps(t_k) = 1/2 int_{t_k}^{t_end} weight, accumulated backwards.
  std::vector<double> tail(count, 0.0);
  for (std::size_t k = count - 1; k-- > 0;) {
    tail[k] = tail[k + 1] +
              0.25 * (traj.times[k + 1] - traj.times[k]) * (weight[k] + weight[k + 1]);
  }

  Trace out(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Vector err = sub(traj.states[k].theta, traj.derived[k].theta_hat);
    out[k] = {traj.times[k], h_norm_sq(h, err) + tail[k]};
  }
  return out;
}

Trace v_xi_trace(const Trajectory& traj, const Models& models) {
  require_nonempty(traj, "v_xi_trace");
  const Matrix& h = models.drift().h;
  Trace out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    const SimState& s = traj.states[k];
    out[k] = {traj.times[k], 0.5 * squared_norm(sub(s.x, s.xi)) +
                                 0.5 * h_norm_sq(h, sub(s.theta, s.nu))};
  }
  return out;
}

Trace v_psi_trace(const Trajectory& traj, const Models& models) {
  require_nonempty(traj, "v_psi_trace");
  Trace out(traj.size());
  for (std::size_t k = 0; k < traj.size(); ++k) {
    out[k] = {traj.times[k], potential(models.target(), traj.derived[k].psi)};
  }
  return out;
}

ForwardIncrease max_forward_increase(const Trace& trace) {
  ForwardIncrease out;
  if (trace.empty()) return out;
  double running_min = trace.front().value;
  for (const auto& p : trace) {
    const double rise = p.value - running_min;
    if (rise > out.value) out = {rise, p.t};
    running_min = std::min(running_min, p.value);
  }
  return out;
}

Trace pe_min_eig(const Trajectory& traj, const Models& models, double window,
                 double start_time) {
  require_nonempty(traj, "pe_min_eig");
  if (!(window > 0.0)) throw InvalidArgument("pe_min_eig: window must be positive");
  const std::size_t count = traj.size();
  const std::size_t d = models.d();
  const double t_last = traj.times.back();

  double max_dt = 0.0;
  for (std::size_t k = 0; k + 1 < count; ++k) {
    max_dt = std::max(max_dt, traj.times[k + 1] - traj.times[k]);
  }
  if (count < 3 || window < 2.0 * max_dt) {
    throw WindowTooLong("pe_min_eig: window covers fewer than two logged intervals");
  }

  // Cumulative trapezoidal integral of alpha^T alpha at every sample.
  std::vector<Matrix> gram(count);
  for (std::size_t k = 0; k < count; ++k) {
    const Matrix a = alpha(models.plant(), traj.states[k].xi);
    gram[k] = a.transpose() * a;
  }
  std::vector<Matrix> cumulative(count, Matrix(d, d));
  for (std::size_t k = 1; k < count; ++k) {
    cumulative[k] = cumulative[k - 1] +
                    (gram[k - 1] + gram[k]) * (0.5 * (traj.times[k] - traj.times[k - 1]));
  }

  Trace out;
  std::size_t j = 0;
  for (std::size_t k = 0; k < count; ++k) {
    const double t = traj.times[k];
    if (t < start_time) continue;
    const double end = t + window;
    if (end > t_last * (1.0 + 1e-14)) break;
    j = std::max(j, k);
    while (j + 1 < count && traj.times[j + 1] <= end) ++j;
    Matrix integral = cumulative[j] - cumulative[k];
    if (j + 1 < count && end > traj.times[j]) {
      const double span = traj.times[j + 1] - traj.times[j];
      const double frac = (end - traj.times[j]) / span;
      const Matrix g_end = gram[j] + (gram[j + 1] - gram[j]) * frac;
      integral += (gram[j] + g_end) * (0.5 * (end - traj.times[j]));
    }
    out.push_back({t, sym_min_eig(integral)});
  }
  if (out.empty()) {
    throw WindowTooLong("pe_min_eig: no window of length " + format_double(window) +
                        " fits after t = " + format_double(start_time));
  }
  return out;
}

Trace window_maxima(const Trace& series, double window, double start) {
  if (!(window > 0.0)) throw InvalidArgument("window_maxima: window must be positive");
  Trace out;
  if (series.empty()) return out;
  const double last = series.back().t;
  double window_end = start + window;
  std::optional<TracePoint> best;
  for (const auto& p : series) {
    if (p.t < start) continue;
    while (p.t >= window_end) {
      if (best) out.push_back(*best);
      best.reset();
      window_end += window;
    }
    if (window_end > last + 1e-12 * std::max(1.0, std::abs(last))) break;
    if (!best || p.value > best->value) best = p;
  }
  return out;
}

ExpFit fit_exp_rate(std::span<const TracePoint> series) {
  std::vector<double> ts;
  std::vector<double> ys;
  for (const auto& p : series) {
    if (std::isfinite(p.value) && p.value >= 1e-12) {
      ts.push_back(p.t);
      ys.push_back(std::log(p.value));
    }
  }
  if (ts.size() < 5) {
    throw DegenerateSeries("fit_exp_rate: " + std::to_string(ts.size()) +
                           " usable points, need at least 5");
  }
  const double count = static_cast<double>(ts.size());
  double t_mean = 0.0;
  double y_mean = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    t_mean += ts[i];
    y_mean += ys[i];
  }
  t_mean /= count;
  y_mean /= count;
  double stt = 0.0;
  double sty = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    stt += (ts[i] - t_mean) * (ts[i] - t_mean);
    sty += (ts[i] - t_mean) * (ys[i] - y_mean);
  }
  if (!(stt > 0.0)) throw DegenerateSeries("fit_exp_rate: all samples share one time");
  const double slope = sty / stt;
  const double intercept = y_mean - slope * t_mean;
  double ss = 0.0;
  for (std::size_t i = 0; i < ts.size(); ++i) {
    const double r = ys[i] - (intercept + slope * ts[i]);
    ss += r * r;
  }
  ExpFit fit;
  fit.amplitude = std::exp(intercept);
  fit.rate = -slope;
  fit.residual = std::sqrt(ss / count);
  fit.points = ts.size();
  return fit;
}

FiniteFormResidual finite_form_consistency(const Trajectory& traj, const Models& models,
                                           const ControllerMode& mode) {
  require_nonempty(traj, "finite_form_consistency");
  FiniteFormResidual out;
  for (std::size_t k = 1; k + 1 < traj.size(); ++k) {
    const double h1 = traj.times[k] - traj.times[k - 1];
    const double h2 = traj.times[k + 1] - traj.times[k];
    const Vector& prev = traj.derived[k - 1].theta_hat;
    const Vector& here = traj.derived[k].theta_hat;
    const Vector& next = traj.derived[k + 1].theta_hat;
    const double c_prev = -h2 / (h1 * (h1 + h2));
    const double c_here = (h2 - h1) / (h1 * h2);
    const double c_next = h1 / (h2 * (h1 + h2));

    const SimState& s = traj.states[k];
    const Vector expected = virtual_rhs(models, mode, s.x, s.xi, s.theta, here,
                                        traj.derived[k].embedding_error);
    Vector diff(here.size());
    for (std::size_t i = 0; i < here.size(); ++i) {
      diff[i] = c_prev * prev[i] + c_here * here[i] + c_next * next[i] - expected[i];
    }
    const double r = norm(diff);
    if (r > out.max_residual) out = {r, traj.times[k]};
  }
  return out;
}

Signal signal_from_name(const std::string& name) {
  if (name == "alpha_error") return Signal::alpha_error;
  if (name == "embedding_error") return Signal::embedding_error;
  if (name == "psi_gradient_error") return Signal::psi_gradient_error;
  throw UnknownSignal("unknown signal '" + name + "'");
}

std::string to_string(Signal s) {
  switch (s) {
    case Signal::alpha_error: return "alpha_error";
    case Signal::embedding_error: return "embedding_error";
    case Signal::psi_gradient_error: return "psi_gradient_error";
  }
  return "unknown";
}

L2Tail l2_tail(const Trajectory& traj, Signal signal, double tail_fraction) {
  require_nonempty(traj, "l2_tail");
  if (!(tail_fraction > 0.0 && tail_fraction < 1.0)) {
    throw InvalidArgument("l2_tail: tail fraction must lie in (0, 1)");
  }
  const std::vector<double> g = signal_sq(traj, signal);
  const double t0 = traj.times.front();
  const double t1 = traj.times.back();
  L2Tail out;
  out.total = trapezoid_between(traj.times, g, t0, t1);
  out.tail = trapezoid_between(traj.times, g, t1 - tail_fraction * (t1 - t0), t1);
  return out;
}

Verdict verify_assumptions(const PlantModel& plant, const DriftModel& drift,
                           const TargetSpec& target, const ControllerMode& mode,
                           const DiagnosticsConfig& cfg) {
  cfg.validate(plant.n);
  const AssumptionTolerances& tol = cfg.tolerances;
  const bool kappa_zero = mode.kappa_zero();
  Verdict verdict;

  // H symmetric positive definite.
  {
    const bool symmetric = drift.h.rows() == drift.h.cols() && is_symmetric(drift.h);
    const double min_eig = symmetric ? sym_min_eig(drift.h) : -1.0;
    Check c = make_check("h_positive_definite", min_eig, ">", 0.0);
    if (!symmetric) {
      c.status = CheckStatus::fail;
      c.note = "H is not symmetric";
    }
    verdict.add(std::move(c));
  }

  // H JS + JS^T H <= 0 over parameter samples.
  {
    SampleRegion theta_region;
    theta_region.lo.assign(plant.d, -1.0);
    theta_region.hi.assign(plant.d, 1.0);
    for (std::size_t i = 0; i < drift.theta_box.size(); ++i) {
      theta_region.lo[i] = drift.theta_box[i].lo;
      theta_region.hi[i] = drift.theta_box[i].hi;
    }
    double worst = -std::numeric_limits<double>::infinity();
    Vector worst_theta;
    for (const Vector& th : sample_points(theta_region, cfg.sample_count)) {
      const Matrix js = drift.js(th);
      const Matrix sym = drift.h * js + js.transpose() * drift.h;
      const double top = sym_max_eig(sym);
      if (top > worst) {
        worst = top;
        worst_theta = th;
      }
    }
    Check c = make_check("drift_contraction", worst, "<=", tol.drift);
    c.worst_location = worst_theta;
    verdict.add(std::move(c));
  }

  const std::vector<Vector> xs = sample_points(cfg.sample_region, cfg.sample_count);
  const std::string not_required = "not required in kappa-zero mode";

  // psi grad(psi) f0 <= -2 beta_min varphi(psi) psi
  {
    double worst = -std::numeric_limits<double>::infinity();
    Vector where;
    for (const Vector& x : xs) {
      const double p = target.psi(x);
      const double lhs = p * dot(target.grad_psi(x), f0_raw(plant, target, x));
      const double v = lhs + 2.0 * target.beta_min * target.varphi(p) * p;
      if (v > worst) {
        worst = v;
        where = x;
      }
    }
    Check c = make_check("manifold_inequality", worst, "<=", tol.manifold);
    c.worst_location = where;
    c.informational = kappa_zero;
    if (kappa_zero) c.note = not_required;
    if (xs.empty()) {
      c.status = CheckStatus::not_evaluated;
      c.note = "sample region is empty";
    }
    verdict.add(std::move(c));
  }

  // ||grad psi|| <= |kappa|
  {
    double worst = -std::numeric_limits<double>::infinity();
    Vector where;
    for (const Vector& x : xs) {
      const double v = norm(target.grad_psi(x)) - std::abs(target.kappa(x));
      if (v > worst) {
        worst = v;
        where = x;
      }
    }
    Check c = make_check("kappa_bound", worst, "<=", tol.kappa);
    c.worst_location = where;
    c.informational = kappa_zero;
    if (kappa_zero) c.note = not_required;
    if (xs.empty()) {
      c.status = CheckStatus::not_evaluated;
      c.note = "sample region is empty";
    }
    verdict.add(std::move(c));
  }

  // Invariance of the level set varphi(psi(x)) = 0 under f0.
  {
    double worst = 0.0;
    Vector where;
    std::size_t projected = 0;
    for (const Vector& x : xs) {
      const auto p = project_to_level_set(target, x);
      if (!p || !cfg.sample_region.contains(*p)) continue;
      ++projected;
      const double v = std::abs(dot(target.grad_psi(*p), f0_raw(plant, target, *p)));
      if (v > worst || where.empty()) {
        if (v > worst) worst = v;
        if (v >= worst) where = *p;
      }
    }
    Check c = make_check("target_invariance", worst, "<=", tol.invariance);
    c.worst_location = where;
    c.details["points"] = static_cast<double>(projected);
    c.informational = kappa_zero;
    if (kappa_zero) c.note = not_required;
    if (projected == 0) {
      c.status = CheckStatus::not_evaluated;
      c.note = "no point of the target level set found in the sample region";
    }
    verdict.add(std::move(c));
  }

  // int_0^psi varphi >= 0
  {
    double worst = std::numeric_limits<double>::infinity();
    Vector where;
    for (const Vector& x : xs) {
      const double v = potential(target, target.psi(x));
      if (v < worst) {
        worst = v;
        where = x;
      }
    }
    Check c = make_check("potential_nonnegative", worst, ">=", -tol.potential);
    c.worst_location = where;
    c.informational = kappa_zero;
    if (kappa_zero) c.note = not_required;
    if (xs.empty()) {
      c.status = CheckStatus::not_evaluated;
      c.note = "sample region is empty";
    }
    verdict.add(std::move(c));
  }

  for (const auto& id : cfg.asserted_assumptions) {
    Check c;
    c.name = "asserted_" + id;
    c.status = CheckStatus::pass;
    c.informational = true;
    c.measured = 1.0;
    c.relation = "==";
    c.threshold = 1.0;
    c.note = "asserted by scenario author";
    verdict.add(std::move(c));
  }
  return verdict;
}

Verdict verify_assumptions(const Models& models, const ControllerMode& mode,
                           const DiagnosticsConfig& cfg) {
  return verify_assumptions(models.plant(), models.drift(), models.target(), mode, cfg);
}

Verdict report(const Trajectory& traj, const Models& models, const ControllerMode& mode,
               const DiagnosticsConfig& cfg) {
  require_nonempty(traj, "report");
  Verdict verdict;
  const double t_start = traj.times.front();
  const double t_end = traj.times.back();

  static const std::array<const char*, 10> kDownstream = {
      "boundedness",           "target_convergence",      "observer_convergence",
      "v_theta_monotone",      "v_xi_monotone",           "l2_tail_alpha_error",
      "l2_tail_embedding_error", "pe_gramian",            "exp_rate_fit",
      "finite_form_consistency"};

  {
    Check c;
    c.name = "integration";
    c.relation = ">=";
    if (traj.failed()) {
      c.status = CheckStatus::fail;
      c.measured = traj.failure->time;
      c.threshold = t_end;
      c.worst_time = traj.failure->time;
      c.note = traj.failure->message;
    } else {
      c.status = CheckStatus::pass;
      c.measured = t_end;
      c.threshold = t_end;
    }
    const bool failed = traj.failed();
    verdict.add(std::move(c));
    if (failed) {
      for (const char* name : kDownstream) {
        Check skipped;
        skipped.name = name;
        skipped.status = CheckStatus::not_evaluated;
        skipped.note = "integration failed at t = " + format_double(traj.failure->time);
        verdict.add(std::move(skipped));
      }
      return verdict;
    }
  }

  // Boundedness against the scale of the initial condition.
  {
    const SimState& s0 = traj.states.front();
    const double scale =
        std::max({1.0, norm(s0.x), norm(s0.theta), norm(traj.derived.front().theta_hat),
                  norm(s0.xi), norm(s0.nu)});
    double worst = 0.0;
    double when = t_start;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      const SimState& s = traj.states[k];
      const double v = std::max({norm(s.x), norm(traj.derived[k].theta_hat), norm(s.xi),
                                 norm(s.nu)});
      if (!(v <= worst)) {
        worst = v;
        when = traj.times[k];
      }
    }
    Check c = make_check("boundedness", worst, "<=", cfg.bound_factor * scale);
    c.worst_time = when;
    c.details["initial_scale"] = scale;
    verdict.add(std::move(c));
  }

  {
    const double from = t_end - cfg.target_tail_fraction * (t_end - t_start);
    double worst = 0.0;
    double when = t_end;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (traj.times[k] < from) continue;
      const double v = models.distance_to_target(traj.states[k].x);
      if (!(v <= worst)) {
        worst = v;
        when = traj.times[k];
      }
    }
    Check c = make_check("target_convergence", worst, "<=", cfg.target_tolerance);
    c.worst_time = when;
    verdict.add(std::move(c));
  }

  {
    const SimState& last = traj.states.back();
    Check c = make_check("observer_convergence", norm(sub(last.x, last.xi)), "<=",
                         cfg.observer_tolerance);
    c.worst_time = t_end;
    verdict.add(std::move(c));
  }

  auto monotone_check = [&](const std::string& name, const Trace& trace) {
    const ForwardIncrease inc = max_forward_increase(trace);
    Check c = make_check(name, inc.value, "<=",
                         cfg.monotonicity_slack * (1.0 + trace.front().value));
    c.worst_time = inc.time;
    c.details["initial_value"] = trace.front().value;
    c.details["final_value"] = trace.back().value;
    return c;
  };
  verdict.add(monotone_check("v_theta_monotone", v_theta_trace(traj, models)));
  verdict.add(monotone_check("v_xi_monotone", v_xi_trace(traj, models)));

  auto l2_check = [&](const std::string& name, Signal signal) {
    const L2Tail l2 = l2_tail(traj, signal, cfg.l2_tail_fraction);
    const double ratio = l2.total > 0.0 ? l2.tail / l2.total : 0.0;
    Check c = make_check(name, ratio, "<=", cfg.l2_tail_ratio);
    c.details["total"] = l2.total;
    c.details["tail"] = l2.tail;
    return c;
  };
  verdict.add(l2_check("l2_tail_alpha_error", Signal::alpha_error));
  verdict.add(l2_check("l2_tail_embedding_error", Signal::embedding_error));

  const std::string pe_note = "expected: regressor vanishes";
  {
    Check c;
    try {
      const Trace pe = pe_min_eig(traj, models, cfg.pe_window_T, cfg.pe_start_time);
      auto worst = std::min_element(pe.begin(), pe.end(), [](const auto& a, const auto& b) {
        return a.value < b.value;
      });
      c = make_check("pe_gramian", worst->value, ">=", cfg.pe_delta);
      c.worst_time = worst->t;
      c.details["windows"] = static_cast<double>(pe.size());
    } catch (const WindowTooLong& e) {
      c.name = "pe_gramian";
      c.status = CheckStatus::not_evaluated;
      c.relation = ">=";
      c.threshold = cfg.pe_delta;
      c.note = e.what();
    }
    c.informational = !cfg.expect_pe;
    if (!cfg.expect_pe && c.status == CheckStatus::fail) c.note = pe_note;
    verdict.add(std::move(c));
  }

  {
    Trace series;
    double peak = 0.0;
    for (std::size_t k = 0; k < traj.size(); ++k) {
      if (traj.times[k] < cfg.pe_start_time) continue;
      const double v = norm(sub(traj.states[k].theta, traj.derived[k].theta_hat));
      peak = std::max(peak, v);
      if (v < cfg.rate_fit_floor) break;
      series.push_back({traj.times[k], v});
    }
    Check c;
    c.name = "exp_rate_fit";
    c.relation = ">";
    c.threshold = 0.0;
    if (peak < cfg.rate_fit_floor) {
      c.status = CheckStatus::pass;
      c.note = "estimate already converged below the fit floor";
      c.details["peak_error"] = peak;
    } else {
      try {
        const Trace envelope = window_maxima(series, cfg.pe_window_T, cfg.pe_start_time);
        const ExpFit fit = fit_exp_rate(envelope);
        c.measured = fit.rate;
        const bool ok = fit.rate > 0.0 && fit.residual <= cfg.rate_fit_max_residual;
        c.status = ok ? CheckStatus::pass : CheckStatus::fail;
        c.details["amplitude"] = fit.amplitude;
        c.details["residual"] = fit.residual;
        c.details["max_residual"] = cfg.rate_fit_max_residual;
        c.details["points"] = static_cast<double>(fit.points);
      } catch (const DegenerateSeries& e) {
        c.status = CheckStatus::not_evaluated;
        c.note = e.what();
      }
    }
    c.informational = !cfg.expect_pe;
    if (!cfg.expect_pe && c.status != CheckStatus::pass) c.note = pe_note;
    verdict.add(std::move(c));
  }

  {
    double max_dt = 0.0;
    for (std::size_t k = 0; k + 1 < traj.size(); ++k) {
      max_dt = std::max(max_dt, traj.times[k + 1] - traj.times[k]);
    }
    const FiniteFormResidual r = finite_form_consistency(traj, models, mode);
    Check c = make_check("finite_form_consistency", r.max_residual, "<=",
                         cfg.finite_form_constant * max_dt * max_dt);
    c.worst_time = r.worst_time;
    c.details["max_interval"] = max_dt;
    verdict.add(std::move(c));
  }
  return verdict;
}

}  // namespace invreg
