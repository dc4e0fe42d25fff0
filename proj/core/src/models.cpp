#include "invreg/models.hpp"

#include <cmath>
#include <string>

#include "invreg/errors.hpp"

namespace invreg {
namespace {

void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidArgument(what);
}

void require_dim(std::size_t got, std::size_t want, const std::string& what) {
  if (got != want) {
    throw DimensionMismatch(what + ": got " + std::to_string(got) + ", expected " +
                            std::to_string(want));
  }
}

}  // namespace

std::string to_string(ControllerVariant v) {
  return v == ControllerVariant::theorem1 ? "theorem1" : "theorem2";
}

ControllerVariant parse_controller_variant(const std::string& name) {
  if (name == "theorem1") return ControllerVariant::theorem1;
  if (name == "theorem2") return ControllerVariant::theorem2_kappa_zero;
  throw InvalidArgument("unknown controller mode '" + name +
                        "' (expected theorem1 or theorem2)");
}

Models::Models(PlantModel plant, DriftModel drift, TargetSpec target) {
  require(plant.n > 0, "plant: state dimension n must be positive");
  require(plant.m > 0, "plant: input dimension m must be positive");
  require(plant.d > 0, "plant: parameter dimension d must be positive");
  require(static_cast<bool>(plant.f), "plant: f is missing");
  require(static_cast<bool>(plant.phi), "plant: Phi is missing");
  require(static_cast<bool>(plant.phi_row_lipschitz),
          "plant: phi_row_lipschitz is missing");
  require_dim(plant.gu.rows(), plant.n, "plant: Gu rows");
  require_dim(plant.gu.cols(), plant.m, "plant: Gu cols");

  require(static_cast<bool>(drift.s), "drift: S is missing");
  require(static_cast<bool>(drift.js), "drift: Jacobian of S is missing");
  require_dim(drift.h.rows(), plant.d, "drift: H rows");
  require_dim(drift.h.cols(), plant.d, "drift: H cols");
  if (!drift.theta_box.empty()) {
    require_dim(drift.theta_box.size(), plant.d, "drift: theta_box size");
    for (const auto& iv : drift.theta_box) {
      require(iv.lo <= iv.hi, "drift: theta_box interval with lo > hi");
    }
  }

  require(static_cast<bool>(target.u0), "target: u0 is missing");
  require(static_cast<bool>(target.psi), "target: psi is missing");
  require(static_cast<bool>(target.grad_psi), "target: grad_psi is missing");
  require(static_cast<bool>(target.varphi), "target: varphi is missing");
  require(static_cast<bool>(target.kappa), "target: kappa is missing");
  require(target.beta_min > 0.0 && std::isfinite(target.beta_min),
          "target: beta_min must be positive");

  // Probe the maps once at the origin for shape consistency.
  const Vector x0(plant.n, 0.0);
  const Vector th0(plant.d, 0.0);
  require_dim(plant.f(x0).size(), plant.n, "plant: f(x) size");
  const Matrix phi0 = plant.phi(x0);
  require_dim(phi0.rows(), plant.m, "plant: Phi(x) rows");
  require_dim(phi0.cols(), plant.d, "plant: Phi(x) cols");
  require_dim(plant.phi_row_lipschitz(x0, x0).size(), plant.m,
              "plant: phi_row_lipschitz size");
  require_dim(drift.s(th0).size(), plant.d, "drift: S(theta) size");
  const Matrix js0 = drift.js(th0);
  require_dim(js0.rows(), plant.d, "drift: JS rows");
  require_dim(js0.cols(), plant.d, "drift: JS cols");
  require_dim(target.u0(x0).size(), plant.m, "target: u0(x) size");
  require_dim(target.grad_psi(x0).size(), plant.n, "target: grad_psi(x) size");

  h_factor_ = std::make_shared<const Cholesky>(drift.h);
  plant_ = std::make_shared<const PlantModel>(std::move(plant));
  drift_ = std::make_shared<const DriftModel>(std::move(drift));
  target_ = std::make_shared<const TargetSpec>(std::move(target));
}

double Models::distance_to_target(const Vector& x) const {
  if (target_->dist_to_target) return target_->dist_to_target(x);
  return std::abs(target_->varphi(target_->psi(x)));
}

std::size_t flat_size(std::size_t n, std::size_t d) { return 2 * n + 3 * d + 3; }

namespace {

template <typename T>
Vector pack_fields(const T& s) {
  Vector out;
  out.reserve(flat_size(s.x.size(), s.theta.size()));
  out.insert(out.end(), s.x.begin(), s.x.end());
  out.insert(out.end(), s.theta.begin(), s.theta.end());
  out.insert(out.end(), s.theta_hat_i.begin(), s.theta_hat_i.end());
  out.insert(out.end(), s.xi.begin(), s.xi.end());
  out.insert(out.end(), s.nu.begin(), s.nu.end());
  out.push_back(s.eps0);
  out.push_back(s.eps1);
  out.push_back(s.eps2);
  return out;
}

}  // namespace

Vector pack(const SimState& s) { return pack_fields(s); }
Vector pack(const StateRate& r) { return pack_fields(r); }

SimState unpack(double t, std::span<const double> flat, std::size_t n, std::size_t d) {
  require_dim(flat.size(), flat_size(n, d), "unpack: flat state size");
  SimState s;
  s.t = t;
  auto take = [&flat](std::size_t& pos, std::size_t count) {
    Vector v(flat.begin() + static_cast<std::ptrdiff_t>(pos),
             flat.begin() + static_cast<std::ptrdiff_t>(pos + count));
    pos += count;
    return v;
  };
  std::size_t pos = 0;
  s.x = take(pos, n);
  s.theta = take(pos, d);
  s.theta_hat_i = take(pos, d);
  s.xi = take(pos, n);
  s.nu = take(pos, d);
  s.eps0 = flat[pos++];
  s.eps1 = flat[pos++];
  s.eps2 = flat[pos++];
  return s;
}

void check_dimensions(const Models& models, const SimState& s) {
  require_dim(s.x.size(), models.n(), "state: x");
  require_dim(s.xi.size(), models.n(), "state: xi");
  require_dim(s.theta.size(), models.d(), "state: theta");
  require_dim(s.theta_hat_i.size(), models.d(), "state: theta_hat_i");
  require_dim(s.nu.size(), models.d(), "state: nu");
}

bool all_finite(const SimState& s) {
  return std::isfinite(s.t) && all_finite(s.x) && all_finite(s.theta) &&
         all_finite(s.theta_hat_i) && all_finite(s.xi) && all_finite(s.nu) &&
         std::isfinite(s.eps0) && std::isfinite(s.eps1) && std::isfinite(s.eps2);
}

}  // namespace invreg
