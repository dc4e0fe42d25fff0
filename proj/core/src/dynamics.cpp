#include "invreg/dynamics.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "invreg/errors.hpp"

namespace invreg {
namespace {

void require_dim(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": got " + std::to_string(got) +
                            ", expected " + std::to_string(want));
  }
}

Matrix psi_from_alpha(const Matrix& a, double kappa) {
  return a.transpose() * (kappa * kappa + 1.0);
}

// Model maps evaluated once at (x, xi) and shared by the controller, the
// observer and the bookkeeping integrands.
struct Frame {
  Matrix phi_x;
  Matrix phi_xi;
  Matrix a_x;
  Matrix a_xi;
  double kappa = 0.0;  // controller kappa at xi
  Matrix psi;          // d x n
  Vector f_x;
  Vector u0_x;
};

Frame evaluate_frame(const Models& models, const ControllerMode& mode, const Vector& x,
                     const Vector& xi) {
  const PlantModel& plant = models.plant();
  Frame fr;
  fr.phi_x = plant.phi(x);
  fr.phi_xi = plant.phi(xi);
  require_dim(fr.phi_xi.rows(), plant.m, "Phi rows");
  require_dim(fr.phi_xi.cols(), plant.d, "Phi cols");
  fr.a_x = plant.gu * fr.phi_x;
  fr.a_xi = plant.gu * fr.phi_xi;
  fr.kappa = controller_kappa(models, mode, xi);
  fr.psi = mode.kappa_zero() ? fr.a_xi.transpose() : psi_from_alpha(fr.a_xi, fr.kappa);
  fr.f_x = plant.f(x);
  require_dim(fr.f_x.size(), models.n(), "f(x)");
  fr.u0_x = models.target().u0(x);
  require_dim(fr.u0_x.size(), models.m(), "u0(x)");
  return fr;
}

Matrix d_big_psi_at(const Models& models, const ControllerMode& mode, const Vector& xi,
                    const Vector& v, const Frame& fr) {
  const PlantModel& plant = models.plant();
  const TargetSpec& target = models.target();
  const bool analytic =
      static_cast<bool>(plant.dphi) && (mode.kappa_zero() || static_cast<bool>(target.dkappa));
  if (!analytic) return d_big_psi_fd(models, mode, xi, v);

  const Matrix dalpha = plant.gu * plant.dphi(xi, v);
  if (mode.kappa_zero()) return dalpha.transpose();
  Matrix out = psi_from_alpha(dalpha, fr.kappa);
  out += fr.a_xi.transpose() * (2.0 * fr.kappa * target.dkappa(xi, v));
  return out;
}

double gain_at(const Models& models, const Vector& x, const Vector& xi, double kappa) {
  const Vector moduli = models.plant().phi_row_lipschitz(x, xi);
  require_dim(moduli.size(), models.m(), "observer: phi_row_lipschitz");
  double sum = 0.0;
  for (double l : moduli) sum += l * l;
  return 1.0 + sum * (1.0 + kappa * kappa);
}

ObserverRate observer_at(const Models& models, const Vector& x, const Vector& xi,
                         const Vector& nu, const Vector& u, const Frame& fr) {
  const double lambda = gain_at(models, x, xi, fr.kappa);
  const Vector mismatch = sub(x, xi);
  ObserverRate out;
  out.xi = fr.f_x;
  axpy(1.0, models.plant().gu * u, out.xi);
  axpy(lambda, mismatch, out.xi);
  axpy(1.0, fr.a_x * nu, out.xi);
  out.nu = models.drift().s(nu);
  axpy(1.0, models.h_factor().solve(transpose_times(fr.a_x, mismatch)), out.nu);
  return out;
}

Vector theta_hat_at(const Models& models, const Vector& x, const Vector& theta_hat_i,
                    const Frame& fr) {
  Vector out = models.h_factor().solve(fr.psi * x);
  axpy(1.0, theta_hat_i, out);
  return out;
}

Vector control_at(const Vector& theta_hat_value, const Frame& fr) {
  Vector u = fr.u0_x;
  axpy(-1.0, fr.phi_xi * theta_hat_value, u);
  return u;
}

struct ControllerRates {
  ObserverRate observer;
  Vector theta_hat_i;
};

ControllerRates controller_rates(const Models& models, const ControllerMode& mode,
                                 const Vector& x, const Vector& xi, const Vector& nu,
                                 const Vector& theta_hat_value, const Vector& u,
                                 const Frame& fr) {
  ControllerRates out;
  out.observer = observer_at(models, x, xi, nu, u, fr);

  const Matrix dpsi = d_big_psi_at(models, mode, xi, out.observer.xi, fr);
  Vector f0_x = fr.f_x;
  axpy(1.0, models.plant().gu * fr.u0_x, f0_x);

  // S(theta_hat) - H^-1 (DPsi[xi'] x + Psi f0(x))
  Vector rhs = dpsi * x;
  axpy(1.0, fr.psi * f0_x, rhs);
  out.theta_hat_i = models.drift().s(theta_hat_value);
  axpy(-1.0, models.h_factor().solve(rhs), out.theta_hat_i);
  return out;
}

}  // namespace

Matrix alpha(const PlantModel& plant, const Vector& xi) {
  require_dim(xi.size(), plant.n, "alpha: xi");
  const Matrix phi = plant.phi(xi);
  require_dim(phi.rows(), plant.m, "alpha: Phi rows");
  require_dim(phi.cols(), plant.d, "alpha: Phi cols");
  return plant.gu * phi;
}

double controller_kappa(const Models& models, const ControllerMode& mode,
                        const Vector& xi) {
  return mode.kappa_zero() ? 0.0 : models.target().kappa(xi);
}

Vector f0(const Models& models, const Vector& x) {
  Vector out = models.plant().f(x);
  require_dim(out.size(), models.n(), "f0: f(x)");
  const Vector gu_u0 = models.plant().gu * models.target().u0(x);
  axpy(1.0, gu_u0, out);
  return out;
}

Matrix big_psi(const Models& models, const ControllerMode& mode, const Vector& xi) {
  const Matrix a = alpha(models.plant(), xi);
  if (mode.kappa_zero()) return a.transpose();
  return psi_from_alpha(a, models.target().kappa(xi));
}

Matrix d_big_psi_fd(const Models& models, const ControllerMode& mode,
                    const Vector& xi, const Vector& v) {
  require_dim(v.size(), models.n(), "d_big_psi: direction");
  const double v_norm = norm(v);
  if (v_norm == 0.0) return Matrix(models.d(), models.n());
  const double step = mode.fd_step_scale * (1.0 + norm(xi)) *
                      std::cbrt(std::numeric_limits<double>::epsilon());
  Vector plus = xi;
  Vector minus = xi;
  for (std::size_t i = 0; i < xi.size(); ++i) {
    const double dir = v[i] / v_norm;
    plus[i] += step * dir;
    minus[i] -= step * dir;
  }
  Matrix out = big_psi(models, mode, plus) - big_psi(models, mode, minus);
  out *= v_norm / (2.0 * step);
  return out;
}

Matrix d_big_psi(const Models& models, const ControllerMode& mode, const Vector& xi,
                 const Vector& v) {
  require_dim(v.size(), models.n(), "d_big_psi: direction");
  const PlantModel& plant = models.plant();
  const TargetSpec& target = models.target();
  const bool analytic =
      static_cast<bool>(plant.dphi) && (mode.kappa_zero() || static_cast<bool>(target.dkappa));
  if (!analytic) return d_big_psi_fd(models, mode, xi, v);

  const Matrix dalpha = plant.gu * plant.dphi(xi, v);
  if (mode.kappa_zero()) return dalpha.transpose();

  const double k = target.kappa(xi);
  const double dk = target.dkappa(xi, v);
  Matrix out = psi_from_alpha(dalpha, k);
  out += alpha(plant, xi).transpose() * (2.0 * k * dk);
  return out;
}

Vector theta_hat(const Models& models, const ControllerMode& mode, const Vector& x,
                 const Vector& xi, const Vector& theta_hat_i) {
  require_dim(x.size(), models.n(), "theta_hat: x");
  require_dim(theta_hat_i.size(), models.d(), "theta_hat: theta_hat_i");
  Vector out = models.h_factor().solve(big_psi(models, mode, xi) * x);
  axpy(1.0, theta_hat_i, out);
  return out;
}

Vector control_u(const Models& models, const Vector& x, const Vector& xi,
                 const Vector& theta_hat) {
  require_dim(theta_hat.size(), models.d(), "control_u: theta_hat");
  Vector u = models.target().u0(x);
  require_dim(u.size(), models.m(), "control_u: u0(x)");
  axpy(-1.0, models.plant().phi(xi) * theta_hat, u);
  return u;
}

double observer_gain(const Models& models, const ControllerMode& mode,
                     const Vector& x, const Vector& xi) {
  return gain_at(models, x, xi, controller_kappa(models, mode, xi));
}

ObserverRate observer_rhs(const Models& models, const ControllerMode& mode,
                          const Vector& x, const Vector& xi, const Vector& nu,
                          const Vector& u) {
  require_dim(x.size(), models.n(), "observer: x");
  require_dim(xi.size(), models.n(), "observer: xi");
  require_dim(nu.size(), models.d(), "observer: nu");
  require_dim(u.size(), models.m(), "observer: u");
  return observer_at(models, x, xi, nu, u, evaluate_frame(models, mode, x, xi));
}

Vector theta_hat_i_rhs(const Models& models, const ControllerMode& mode,
                       const Vector& x, const Vector& xi, const Vector& nu,
                       const Vector& theta_hat_i, const Vector& u) {
  require_dim(x.size(), models.n(), "theta_hat_i_rhs: x");
  require_dim(xi.size(), models.n(), "theta_hat_i_rhs: xi");
  require_dim(nu.size(), models.d(), "theta_hat_i_rhs: nu");
  require_dim(theta_hat_i.size(), models.d(), "theta_hat_i_rhs: theta_hat_i");
  require_dim(u.size(), models.m(), "theta_hat_i_rhs: u");
  const Frame fr = evaluate_frame(models, mode, x, xi);
  const Vector th = theta_hat_at(models, x, theta_hat_i, fr);
  return controller_rates(models, mode, x, xi, nu, th, u, fr).theta_hat_i;
}

Vector virtual_rhs(const Models& models, const ControllerMode& mode, const Vector& x,
                   const Vector& xi, const Vector& theta, const Vector& theta_hat,
                   const Vector& eps_input) {
  require_dim(x.size(), models.n(), "virtual_rhs: x");
  require_dim(theta.size(), models.d(), "virtual_rhs: theta");
  require_dim(eps_input.size(), models.n(), "virtual_rhs: eps");
  const Matrix a = alpha(models.plant(), xi);
  Vector inner = a * sub(theta, theta_hat);
  axpy(1.0, eps_input, inner);
  const double k = controller_kappa(models, mode, xi);
  Vector out = models.drift().s(theta_hat);
  axpy(k * k + 1.0, models.h_factor().solve(a.transpose() * inner), out);
  return out;
}

StateRate closed_loop_rhs(const Models& models, const ControllerMode& mode,
                          const SimState& s) {
  check_dimensions(models, s);
  if (!all_finite(s)) {
    throw NonFiniteState(s.t, "closed_loop_rhs: non-finite state at t = " +
                                  std::to_string(s.t));
  }
  const PlantModel& plant = models.plant();
  const Frame fr = evaluate_frame(models, mode, s.x, s.xi);

  const Vector th = theta_hat_at(models, s.x, s.theta_hat_i, fr);
  const Vector u = control_at(th, fr);
  ControllerRates ctrl = controller_rates(models, mode, s.x, s.xi, s.nu, th, u, fr);

  StateRate r;
  Vector drive = fr.phi_x * s.theta;
  axpy(1.0, u, drive);
  r.x = fr.f_x;
  axpy(1.0, plant.gu * drive, r.x);
  r.theta = models.drift().s(s.theta);
  r.theta_hat_i = std::move(ctrl.theta_hat_i);
  r.xi = std::move(ctrl.observer.xi);
  r.nu = std::move(ctrl.observer.nu);

  const Vector e = sub(fr.a_x * s.theta, fr.a_xi * s.theta);
  const Vector alpha_err = fr.a_xi * sub(s.theta, th);
  r.eps1 = squared_norm(e);
  r.eps2 = squared_norm(alpha_err);
  if (mode.kappa_zero()) {
    r.eps0 = 0.0;
  } else {
    const double g = dot(models.target().grad_psi(s.x), add(alpha_err, e));
    r.eps0 = g * g;
  }

  if (!all_finite(pack(r))) {
    throw NonFiniteState(s.t, "closed_loop_rhs: non-finite rate at t = " +
                                  std::to_string(s.t));
  }
  return r;
}

DerivedSignals derive(const Models& models, const ControllerMode& mode,
                      const SimState& s, const std::optional<Vector>& theta_hat_override) {
  const PlantModel& plant = models.plant();
  const TargetSpec& target = models.target();
  DerivedSignals out;
  out.theta_hat = theta_hat_override ? *theta_hat_override
                                     : theta_hat(models, mode, s.x, s.xi, s.theta_hat_i);
  out.u = control_u(models, s.x, s.xi, out.theta_hat);
  const Matrix a_xi = alpha(plant, s.xi);
  out.embedding_error = (alpha(plant, s.x) - a_xi) * s.theta;
  out.alpha_error = a_xi * sub(s.theta, out.theta_hat);
  out.grad_psi = target.grad_psi(s.x);
  out.psi = target.psi(s.x);
  out.varphi_psi = target.varphi(out.psi);
  out.kappa = controller_kappa(models, mode, s.xi);
  return out;
}

}  // namespace invreg
