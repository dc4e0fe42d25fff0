#pragma once

// Model definitions for a plant
//
//   x'     = f(x) + Gu (Phi(x) theta + u)
//   theta' = S(theta)
//
// together with the target description the regulator steers towards.

#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "invreg/linalg.hpp"

namespace invreg {

using StateMap = std::function<Vector(const Vector&)>;
using MatrixMap = std::function<Matrix(const Vector&)>;
using ScalarMap = std::function<double(const Vector&)>;

struct PlantModel {
  std::size_t n = 0;  ///< state dimension
  std::size_t m = 0;  ///< input dimension
  std::size_t d = 0;  ///< parameter dimension
  StateMap f;
  Matrix gu;   ///< n x m
  MatrixMap phi;  ///< regressor, m x d
  /// Row-wise Lipschitz moduli lambda_i(x, xi) with
  /// ||Phi_i(x) - Phi_i(xi)|| <= lambda_i(x, xi) ||x - xi||.
  std::function<Vector(const Vector& x, const Vector& xi)> phi_row_lipschitz;
  /// Optional directional derivative D Phi(x)[v]; finite differences are used
  /// when empty.
  std::function<Matrix(const Vector& x, const Vector& v)> dphi;
};

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

struct DriftModel {
  StateMap s;
  MatrixMap js;  ///< Jacobian dS/dtheta, d x d
  Matrix h;      ///< symmetric positive definite weight, d x d
  std::vector<Interval> theta_box;  ///< admissible initial parameters
};

struct TargetSpec {
  StateMap u0;
  ScalarMap psi;
  StateMap grad_psi;
  std::function<double(double)> varphi;
  ScalarMap kappa;
  std::function<double(const Vector& x, const Vector& v)> dkappa;  ///< optional
  double beta_min = 0.0;
  ScalarMap dist_to_target;  ///< optional; defaults to |varphi(psi(x))|
};

enum class ControllerVariant { theorem1, theorem2_kappa_zero };

struct ControllerMode {
  ControllerVariant variant = ControllerVariant::theorem1;
  double fd_step_scale = 1.0;

  bool kappa_zero() const noexcept {
    return variant == ControllerVariant::theorem2_kappa_zero;
  }
};

std::string to_string(ControllerVariant v);
/// Accepts "theorem1" and "theorem2"; throws InvalidArgument otherwise.
ControllerVariant parse_controller_variant(const std::string& name);

/// Immutable bundle of plant, drift and target with the Cholesky factor of H
/// cached. Construction validates dimensions and positive definiteness.
class Models {
 public:
  /// Throws DimensionMismatch, InvalidArgument (m = 0, d = 0, missing maps),
  /// NotSymmetric or NotPositiveDefinite.
  Models(PlantModel plant, DriftModel drift, TargetSpec target);

  const PlantModel& plant() const noexcept { return *plant_; }
  const DriftModel& drift() const noexcept { return *drift_; }
  const TargetSpec& target() const noexcept { return *target_; }
  const Cholesky& h_factor() const noexcept { return *h_factor_; }

  std::size_t n() const noexcept { return plant_->n; }
  std::size_t m() const noexcept { return plant_->m; }
  std::size_t d() const noexcept { return plant_->d; }

  /// dist_to_target if supplied, else |varphi(psi(x))|.
  double distance_to_target(const Vector& x) const;

 private:
  std::shared_ptr<const PlantModel> plant_;
  std::shared_ptr<const DriftModel> drift_;
  std::shared_ptr<const TargetSpec> target_;
  std::shared_ptr<const Cholesky> h_factor_;
};

/// Closed-loop state. theta_hat is never stored: it is recomputed from
/// (x, xi, theta_hat_i).
struct SimState {
  double t = 0.0;
  Vector x;
  Vector theta;
  Vector theta_hat_i;
  Vector xi;
  Vector nu;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;

  bool operator==(const SimState&) const = default;
};

/// Time derivative of every SimState component except t.
struct StateRate {
  Vector x;
  Vector theta;
  Vector theta_hat_i;
  Vector xi;
  Vector nu;
  double eps0 = 0.0;
  double eps1 = 0.0;
  double eps2 = 0.0;
};

/// Flat layout [x, theta, theta_hat_i, xi, nu, eps0, eps1, eps2].
std::size_t flat_size(std::size_t n, std::size_t d);
Vector pack(const SimState& s);
Vector pack(const StateRate& r);
SimState unpack(double t, std::span<const double> flat, std::size_t n, std::size_t d);

/// Throws DimensionMismatch when the state does not match the models.
void check_dimensions(const Models& models, const SimState& s);
bool all_finite(const SimState& s);

}  // namespace invreg
