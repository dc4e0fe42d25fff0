#pragma once

// Right-hand sides of the adaptive regulator:
//
//   theta_hat  = H^-1 Psi(xi) x + theta_hat_i
//   Psi(xi)    = (kappa(xi)^2 + 1) alpha(xi)^T,   alpha(xi) = Gu Phi(xi)
//   theta_hat_i' = S(theta_hat) - H^-1 DPsi(xi)[xi'] x - H^-1 Psi(xi) f0(x)
//   u          = u0(x) - Phi(xi) theta_hat
//
// and the embedding observer
//
//   xi' = f(x) + Gu u + lambda(x, xi) (x - xi) + Gu Phi(x) nu
//   nu' = S(nu) + H^-1 alpha(x)^T (x - xi)
//   lambda(x, xi) = 1 + sum_i lambda_i(x, xi)^2 (1 + kappa(xi)^2)
//
// The controller path (theta_hat, control_u, observer_rhs, theta_hat_i_rhs)
// never reads the true parameter vector.

#include <optional>

#include "invreg/linalg.hpp"
#include "invreg/models.hpp"

namespace invreg {

/// alpha(xi) = Gu Phi(xi), n x d.
Matrix alpha(const PlantModel& plant, const Vector& xi);

/// kappa(xi) as seen by the controller; exactly 0 in the kappa-zero mode.
double controller_kappa(const Models& models, const ControllerMode& mode,
                        const Vector& xi);

/// f0(x) = f(x) + Gu u0(x).
Vector f0(const Models& models, const Vector& x);

/// Psi(xi), d x n.
Matrix big_psi(const Models& models, const ControllerMode& mode, const Vector& xi);

/// Directional derivative DPsi(xi)[v]. Analytic when the plant supplies dphi
/// (and the target supplies dkappa, unless kappa is forced to zero); central
/// differences otherwise.
Matrix d_big_psi(const Models& models, const ControllerMode& mode, const Vector& xi,
                 const Vector& v);

/// Same as d_big_psi but always uses central differences.
Matrix d_big_psi_fd(const Models& models, const ControllerMode& mode,
                    const Vector& xi, const Vector& v);

Vector theta_hat(const Models& models, const ControllerMode& mode, const Vector& x,
                 const Vector& xi, const Vector& theta_hat_i);

Vector control_u(const Models& models, const Vector& x, const Vector& xi,
                 const Vector& theta_hat);

/// lambda(x, xi) of the observer gain.
double observer_gain(const Models& models, const ControllerMode& mode,
                     const Vector& x, const Vector& xi);

struct ObserverRate {
  Vector xi;
  Vector nu;
};

ObserverRate observer_rhs(const Models& models, const ControllerMode& mode,
                          const Vector& x, const Vector& xi, const Vector& nu,
                          const Vector& u);

/// theta_hat_i' given the measured x, observer state and the applied input.
Vector theta_hat_i_rhs(const Models& models, const ControllerMode& mode,
                       const Vector& x, const Vector& xi, const Vector& nu,
                       const Vector& theta_hat_i, const Vector& u);

/// The idealized estimator
///   S(theta_hat) + H^-1 (kappa^2 + 1) alpha(xi)^T (alpha(xi)(theta - theta_hat) + e).
/// It depends on the unknown theta and is only used as an oracle.
Vector virtual_rhs(const Models& models, const ControllerMode& mode, const Vector& x,
                   const Vector& xi, const Vector& theta, const Vector& theta_hat,
                   const Vector& eps_input);

/// Full closed-loop rate including the bookkeeping integrals. Throws
/// NonFiniteState when the state or the computed rate is not finite.
StateRate closed_loop_rhs(const Models& models, const ControllerMode& mode,
                          const SimState& s);

/// Per-sample signals derived from a state.
struct DerivedSignals {
  Vector theta_hat;
  Vector u;
  Vector embedding_error;  ///< e = (alpha(x) - alpha(xi)) theta
  Vector alpha_error;      ///< alpha(xi) (theta - theta_hat)
  Vector grad_psi;
  double psi = 0.0;
  double varphi_psi = 0.0;
  double kappa = 0.0;      ///< kappa(xi) used by the controller
};

/// When theta_hat_override is set it replaces the value recomputed from
/// theta_hat_i (used when re-reading logged data).
DerivedSignals derive(const Models& models, const ControllerMode& mode,
                      const SimState& s,
                      const std::optional<Vector>& theta_hat_override = std::nullopt);

}  // namespace invreg
