#include "invreg/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <initializer_list>
#include <numbers>

#include <nlohmann/json.hpp>

#include "invreg/dynamics.hpp"
#include "invreg/errors.hpp"
#include "invreg/polynomial.hpp"

namespace invreg {
namespace {

using nlohmann::json;

// Builtin model pieces

Vector zeros(std::size_t n) { return Vector(n, 0.0); }

StateMap linear_drift(const Matrix& a) {
  return [a](const Vector& theta) { return a * theta; };
}

MatrixMap constant_matrix(const Matrix& a) {
  return [a](const Vector&) { return a; };
}

ScalarMap norm_affine(double a, double b) {
  return [a, b](const Vector& x) { return a * norm(x) + b; };
}

std::function<double(const Vector&, const Vector&)> norm_affine_derivative(double a) {
  return [a](const Vector& x, const Vector& v) {
    const double r = norm(x);
    return r == 0.0 ? 0.0 : a * dot(x, v) / r;
  };
}

Matrix skew(std::size_t d, double omega) {
  Matrix a(d, d);
  for (std::size_t i = 0; i + 1 < d; i += 2) {
    a(i, i + 1) = omega;
    a(i + 1, i) = -omega;
  }
  return a;
}

const std::vector<std::string> kTargetCompact = {"target_compact",
                                                 "psi_bound_implies_state_bound"};

ScenarioSpec scalar_equilibrium() {
  ScenarioSpec spec;
  spec.name = "scalar-equilibrium";

  PlantModel& p = spec.plant;
  p.n = p.m = p.d = 1;
  p.f = [](const Vector& x) { return Vector{x[0]}; };
  p.gu = Matrix::identity(1);
  p.phi = [](const Vector& x) { return Matrix(1, 1, {x[0]}); };
  p.phi_row_lipschitz = [](const Vector&, const Vector&) { return Vector{1.0}; };
  p.dphi = [](const Vector&, const Vector& v) { return Matrix(1, 1, {v[0]}); };

  spec.drift.s = [](const Vector&) { return Vector{0.0}; };
  spec.drift.js = constant_matrix(Matrix(1, 1));
  spec.drift.h = Matrix::identity(1);
  spec.drift.theta_box = {{-10.0, 10.0}};

  TargetSpec& t = spec.target;
  t.u0 = [](const Vector& x) { return Vector{-2.0 * x[0]}; };
  t.psi = [](const Vector& x) { return x[0]; };
  t.grad_psi = [](const Vector&) { return Vector{1.0}; };
  t.varphi = [](double s) { return s; };
  t.kappa = [](const Vector&) { return 1.0; };
  t.dkappa = [](const Vector&, const Vector&) { return 0.0; };
  t.beta_min = 0.5;

  spec.init.x0 = {1.0};
  spec.init.theta0 = {2.0};
  spec.init.theta_hat0 = {0.0};
  spec.init.xi0 = {0.0};
  spec.init.nu0 = {0.0};

  spec.integration.t_end = 10.0;
  spec.integration.h = 1e-3;

  DiagnosticsConfig& dg = spec.diagnostics;
  dg.expect_pe = false;
  dg.pe_window_T = 2.0;
  dg.pe_delta = 0.1;
  dg.sample_region.lo = {-3.0};
  dg.sample_region.hi = {3.0};
  spec.asserted_assumptions = kTargetCompact;
  return spec;
}

ScenarioSpec hopf(const std::string& name, double omega, ControllerVariant variant) {
  ScenarioSpec spec;
  spec.name = name;

  auto psi = [](const Vector& x) { return x[0] * x[0] + x[1] * x[1] - 1.0; };

  PlantModel& p = spec.plant;
  p.n = 2;
  p.m = 1;
  p.d = 2;
  p.f = [psi](const Vector& x) {
    const double s = psi(x);
    return Vector{-x[1] - s * x[0], x[0]};
  };
  p.gu = Matrix(2, 1, {0.0, 1.0});
  p.phi = [](const Vector& x) { return Matrix(1, 2, {x[0], x[1]}); };
  p.phi_row_lipschitz = [](const Vector&, const Vector&) { return Vector{1.0}; };
  p.dphi = [](const Vector&, const Vector& v) { return Matrix(1, 2, {v[0], v[1]}); };

  const Matrix js = skew(2, omega);
  spec.drift.s = linear_drift(js);
  spec.drift.js = constant_matrix(js);
  spec.drift.h = Matrix::identity(2);
  spec.drift.theta_box = {{-1.0, 1.0}, {-1.0, 1.0}};

  TargetSpec& t = spec.target;
  t.u0 = [psi](const Vector& x) { return Vector{-psi(x) * x[1]}; };
  t.psi = psi;
  t.grad_psi = [](const Vector& x) { return Vector{2.0 * x[0], 2.0 * x[1]}; };
  t.varphi = [](double s) { return s; };
  t.kappa = norm_affine(2.0, 1.0);
  t.dkappa = norm_affine_derivative(2.0);
  t.beta_min = 0.04;

  spec.mode.variant = variant;

  spec.init.x0 = {2.0, 0.0};
  spec.init.theta0 = {0.5, -0.5};
  spec.init.theta_hat0 = {0.0, 0.0};
  spec.init.xi0 = {1.5, 0.5};
  spec.init.nu0 = {0.0, 0.0};

  spec.integration.t_end = 120.0;
  spec.integration.h = 1e-3;

  DiagnosticsConfig& dg = spec.diagnostics;
  dg.pe_window_T = 2.0 * std::numbers::pi;
  dg.pe_delta = 2.5;
  dg.pe_start_time = 10.0;
  dg.sample_region.lo = {-3.0, -3.0};
  dg.sample_region.hi = {3.0, 3.0};
  dg.sample_region.min_radius = 0.2;
  dg.sample_region.max_radius = 3.0;

  spec.asserted_assumptions = kTargetCompact;
  if (variant == ControllerVariant::theorem2_kappa_zero) {
    spec.asserted_assumptions.push_back("finite_l2_linf_gain");
  }
  return spec;
}

// Configuration reading

std::string join(const std::string& base, const std::string& key) {
  return base.empty() ? key : base + "." + key;
}

std::string index_path(const std::string& base, std::size_t i) {
  return base + "[" + std::to_string(i) + "]";
}

class Reader {
 public:
  void issue(const std::string& path, const std::string& message) {
    issues_.push_back({path, message});
  }
  bool ok() const noexcept { return issues_.empty(); }
  void raise_if_any() const {
    if (!issues_.empty()) throw SchemaError(issues_);
  }

  bool object(const json& j, const std::string& path) {
    if (j.is_object()) return true;
    issue(path, "expected an object");
    return false;
  }

  void allowed_keys(const json& j, const std::string& path,
                    std::initializer_list<const char*> keys) {
    for (auto it = j.begin(); it != j.end(); ++it) {
      const bool known = std::any_of(keys.begin(), keys.end(),
                                     [&](const char* k) { return it.key() == k; });
      if (!known) issue(join(path, it.key()), "unknown key");
    }
  }

  std::optional<double> number(const json& j, const std::string& path) {
    if (!j.is_number()) {
      issue(path, "expected a number");
      return std::nullopt;
    }
    const double v = j.get<double>();
    if (!std::isfinite(v)) {
      issue(path, "must be finite");
      return std::nullopt;
    }
    return v;
  }

  std::optional<bool> boolean(const json& j, const std::string& path) {
    if (!j.is_boolean()) {
      issue(path, "expected true or false");
      return std::nullopt;
    }
    return j.get<bool>();
  }

  std::optional<std::string> string(const json& j, const std::string& path) {
    if (!j.is_string()) {
      issue(path, "expected a string");
      return std::nullopt;
    }
    return j.get<std::string>();
  }

  std::optional<std::size_t> count(const json& j, const std::string& path) {
    if (!j.is_number_integer() || j.get<long long>() < 1) {
      issue(path, "expected a positive integer");
      return std::nullopt;
    }
    return static_cast<std::size_t>(j.get<long long>());
  }

  std::optional<Vector> vector(const json& j, const std::string& path,
                               std::optional<std::size_t> size) {
    if (!j.is_array()) {
      issue(path, "expected an array of numbers");
      return std::nullopt;
    }
    if (size && j.size() != *size) {
      issue(path, "expected " + std::to_string(*size) + " entries, got " +
                      std::to_string(j.size()));
      return std::nullopt;
    }
    Vector out;
    bool good = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const auto v = number(j[i], index_path(path, i));
      good = good && v.has_value();
      out.push_back(v.value_or(0.0));
    }
    if (!good) return std::nullopt;
    return out;
  }

  std::optional<Matrix> matrix(const json& j, const std::string& path, std::size_t rows,
                               std::size_t cols) {
    if (!j.is_array() || j.size() != rows) {
      issue(path, "expected " + std::to_string(rows) + " rows");
      return std::nullopt;
    }
    Vector entries;
    bool good = true;
    for (std::size_t i = 0; i < rows; ++i) {
      const auto row = vector(j[i], index_path(path, i), cols);
      good = good && row.has_value();
      if (row) entries.insert(entries.end(), row->begin(), row->end());
    }
    if (!good) return std::nullopt;
    return Matrix(rows, cols, std::move(entries));
  }

  // A polynomial is a number (constant) or an array of
  // {"coef": c, "pow": [e_1, ..., e_vars]} terms.
  std::optional<Polynomial> polynomial(const json& j, const std::string& path,
                                       std::size_t vars) {
    if (j.is_number()) {
      const auto v = number(j, path);
      if (!v) return std::nullopt;
      return Polynomial::constant(vars, *v);
    }
    if (!j.is_array()) {
      issue(path, "expected a number or an array of {coef, pow} terms");
      return std::nullopt;
    }
    std::vector<Monomial> terms;
    bool good = true;
    for (std::size_t i = 0; i < j.size(); ++i) {
      const std::string tp = index_path(path, i);
      const json& term = j[i];
      if (!object(term, tp)) {
        good = false;
        continue;
      }
      allowed_keys(term, tp, {"coef", "pow"});
      Monomial m;
      if (!term.contains("coef")) {
        issue(join(tp, "coef"), "required");
        good = false;
      } else if (const auto c = number(term["coef"], join(tp, "coef"))) {
        m.coef = *c;
      } else {
        good = false;
      }
      m.powers.assign(vars, 0);
      if (term.contains("pow")) {
        const json& pw = term["pow"];
        if (!pw.is_array() || pw.size() != vars) {
          issue(join(tp, "pow"), "expected " + std::to_string(vars) + " exponents");
          good = false;
        } else {
          for (std::size_t k = 0; k < vars; ++k) {
            if (!pw[k].is_number_integer() || pw[k].get<long long>() < 0 ||
                pw[k].get<long long>() > 64) {
              issue(index_path(join(tp, "pow"), k), "expected an integer in [0, 64]");
              good = false;
            } else {
              m.powers[k] = static_cast<unsigned>(pw[k].get<long long>());
            }
          }
        }
      }
      terms.push_back(std::move(m));
    }
    if (!good) return std::nullopt;
    return Polynomial(vars, std::move(terms));
  }

  std::optional<std::vector<Polynomial>> polynomials(const json& j, const std::string& path,
                                                     std::size_t vars, std::size_t size) {
    if (!j.is_array() || j.size() != size) {
      issue(path, "expected an array of " + std::to_string(size) + " polynomials");
      return std::nullopt;
    }
    std::vector<Polynomial> out;
    bool good = true;
    for (std::size_t i = 0; i < size; ++i) {
      auto p = polynomial(j[i], index_path(path, i), vars);
      good = good && p.has_value();
      if (p) out.push_back(std::move(*p));
    }
    if (!good) return std::nullopt;
    return out;
  }

  std::optional<PolynomialMatrix> polynomial_matrix(const json& j, const std::string& path,
                                                    std::size_t vars, std::size_t rows,
                                                    std::size_t cols) {
    if (!j.is_array() || j.size() != rows) {
      issue(path, "expected " + std::to_string(rows) + " rows of polynomials");
      return std::nullopt;
    }
    std::vector<Polynomial> entries;
    bool good = true;
    for (std::size_t i = 0; i < rows; ++i) {
      auto row = polynomials(j[i], index_path(path, i), vars, cols);
      good = good && row.has_value();
      if (row) entries.insert(entries.end(), row->begin(), row->end());
    }
    if (!good) return std::nullopt;
    return PolynomialMatrix(rows, cols, std::move(entries));
  }

 private:
  std::vector<SchemaIssue> issues_;
};

std::optional<std::string> family_of(Reader& r, const json& j, const std::string& path) {
  if (!r.object(j, path)) return std::nullopt;
  if (!j.contains("family")) {
    r.issue(join(path, "family"), "required");
    return std::nullopt;
  }
  return r.string(j["family"], join(path, "family"));
}

// S(theta): linear | skew | polynomial.
void read_drift(Reader& r, const json& j, const std::string& path, std::size_t d,
                DriftModel& drift) {
  const auto family = family_of(r, j, path);
  if (!family) return;
  if (*family == "linear") {
    r.allowed_keys(j, path, {"family", "matrix"});
    if (!j.contains("matrix")) {
      r.issue(join(path, "matrix"), "required");
      return;
    }
    if (const auto a = r.matrix(j["matrix"], join(path, "matrix"), d, d)) {
      drift.s = linear_drift(*a);
      drift.js = constant_matrix(*a);
    }
  } else if (*family == "skew") {
    r.allowed_keys(j, path, {"family", "omega"});
    if (d % 2 != 0) {
      r.issue(path, "skew drift needs an even parameter dimension");
      return;
    }
    const auto omega = j.contains("omega") ? r.number(j["omega"], join(path, "omega"))
                                           : std::optional<double>(0.0);
    if (omega) {
      const Matrix a = skew(d, *omega);
      drift.s = linear_drift(a);
      drift.js = constant_matrix(a);
    }
  } else if (*family == "polynomial") {
    r.allowed_keys(j, path, {"family", "components"});
    if (!j.contains("components")) {
      r.issue(join(path, "components"), "required");
      return;
    }
    if (auto comps = r.polynomials(j["components"], join(path, "components"), d, d)) {
      PolynomialMap map(std::move(*comps));
      PolynomialMatrix jac = map.jacobian_matrix();
      drift.s = [map](const Vector& th) { return map(th); };
      drift.js = [jac](const Vector& th) { return jac(th); };
    }
  } else {
    r.issue(join(path, "family"), "unknown drift family '" + *family +
                                      "' (expected linear, skew or polynomial)");
  }
}

// kappa(x): constant | norm_affine | polynomial.
void read_kappa(Reader& r, const json& j, const std::string& path, std::size_t n,
                TargetSpec& target) {
  const auto family = family_of(r, j, path);
  if (!family) return;
  if (*family == "constant") {
    r.allowed_keys(j, path, {"family", "value"});
    if (!j.contains("value")) {
      r.issue(join(path, "value"), "required");
      return;
    }
    if (const auto v = r.number(j["value"], join(path, "value"))) {
      const double c = *v;
      target.kappa = [c](const Vector&) { return c; };
      target.dkappa = [](const Vector&, const Vector&) { return 0.0; };
    }
  } else if (*family == "norm_affine") {
    r.allowed_keys(j, path, {"family", "a", "b"});
    const auto a = j.contains("a") ? r.number(j["a"], join(path, "a"))
                                   : std::optional<double>(0.0);
    const auto b = j.contains("b") ? r.number(j["b"], join(path, "b"))
                                   : std::optional<double>(0.0);
    if (a && b) {
      target.kappa = norm_affine(*a, *b);
      target.dkappa = norm_affine_derivative(*a);
    }
  } else if (*family == "polynomial") {
    r.allowed_keys(j, path, {"family", "poly"});
    if (!j.contains("poly")) {
      r.issue(join(path, "poly"), "required");
      return;
    }
    if (auto p = r.polynomial(j["poly"], join(path, "poly"), n)) {
      Polynomial poly = std::move(*p);
      PolynomialMap grad = poly.gradient_map();
      target.kappa = [poly](const Vector& x) { return poly(x); };
      target.dkappa = [grad](const Vector& x, const Vector& v) { return dot(grad(x), v); };
    }
  } else {
    r.issue(join(path, "family"), "unknown kappa family '" + *family +
                                      "' (expected constant, norm_affine or polynomial)");
  }
}

// lambda_i(x, xi): constant | affine_in_norms.
void read_lipschitz(Reader& r, const json& j, const std::string& path, std::size_t m,
                    PlantModel& plant) {
  const auto family = family_of(r, j, path);
  if (!family) return;
  if (*family == "constant") {
    r.allowed_keys(j, path, {"family", "values"});
    if (!j.contains("values")) {
      r.issue(join(path, "values"), "required");
      return;
    }
    if (const auto v = r.vector(j["values"], join(path, "values"), m)) {
      const Vector values = *v;
      plant.phi_row_lipschitz = [values](const Vector&, const Vector&) { return values; };
    }
  } else if (*family == "affine_in_norms") {
    r.allowed_keys(j, path, {"family", "const", "x", "xi"});
    auto coeffs = [&](const char* key) -> std::optional<Vector> {
      if (!j.contains(key)) return Vector(m, 0.0);
      return r.vector(j[key], join(path, key), m);
    };
    const auto c = coeffs("const");
    const auto a = coeffs("x");
    const auto b = coeffs("xi");
    if (c && a && b) {
      plant.phi_row_lipschitz = [c = *c, a = *a, b = *b](const Vector& x, const Vector& xi) {
        const double nx = norm(x);
        const double nxi = norm(xi);
        Vector out(c.size());
        for (std::size_t i = 0; i < out.size(); ++i) out[i] = c[i] + a[i] * nx + b[i] * nxi;
        return out;
      };
    }
  } else {
    r.issue(join(path, "family"), "unknown Lipschitz family '" + *family +
                                      "' (expected constant or affine_in_norms)");
  }
}

// Exact row Lipschitz moduli of an affine regressor: the spectral norm of
// each row's coefficient matrix.
Vector affine_row_lipschitz(const PolynomialMatrix& phi) {
  const std::size_t n = phi.vars();
  const Vector origin(n, 0.0);
  Vector out(phi.rows());
  for (std::size_t i = 0; i < phi.rows(); ++i) {
    Matrix a(phi.cols(), n);
    for (std::size_t j = 0; j < phi.cols(); ++j) {
      const Vector g = phi(i, j).gradient(origin);
      for (std::size_t k = 0; k < n; ++k) a(j, k) = g[k];
    }
    out[i] = std::sqrt(std::max(0.0, sym_max_eig(a.transpose() * a)));
  }
  return out;
}

void read_sample_region(Reader& r, const json& j, const std::string& path, std::size_t n,
                        SampleRegion& region) {
  if (!r.object(j, path)) return;
  r.allowed_keys(j, path, {"lo", "hi", "min_radius", "max_radius"});
  if (j.contains("lo")) {
    if (auto v = r.vector(j["lo"], join(path, "lo"), n)) region.lo = *v;
  }
  if (j.contains("hi")) {
    if (auto v = r.vector(j["hi"], join(path, "hi"), n)) region.hi = *v;
  }
  if (j.contains("min_radius")) {
    if (auto v = r.number(j["min_radius"], join(path, "min_radius"))) region.min_radius = *v;
  }
  if (j.contains("max_radius")) {
    if (j["max_radius"].is_null()) {
      region.max_radius = std::numeric_limits<double>::infinity();
    } else if (auto v = r.number(j["max_radius"], join(path, "max_radius"))) {
      region.max_radius = *v;
    }
  }
}

void read_theta_box(Reader& r, const json& j, const std::string& path, std::size_t d,
                    std::vector<Interval>& box) {
  if (!j.is_array() || j.size() != d) {
    r.issue(path, "expected " + std::to_string(d) + " [lo, hi] pairs");
    return;
  }
  std::vector<Interval> out;
  for (std::size_t i = 0; i < d; ++i) {
    const auto pair = r.vector(j[i], index_path(path, i), 2);
    if (!pair) return;
    if ((*pair)[0] > (*pair)[1]) {
      r.issue(index_path(path, i), "lo exceeds hi");
      return;
    }
    out.push_back({(*pair)[0], (*pair)[1]});
  }
  box = std::move(out);
}

void read_diagnostics(Reader& r, const json& j, const std::string& path,
                      DiagnosticsConfig& dg) {
  if (!r.object(j, path)) return;
  r.allowed_keys(j, path,
                 {"pe_window_T", "pe_delta", "pe_start_time", "expect_pe",
                  "monotonicity_slack", "l2_tail_fraction", "l2_tail_ratio",
                  "target_tail_fraction", "target_tolerance", "observer_tolerance",
                  "bound_factor", "finite_form_constant", "rate_fit_max_residual",
                  "rate_fit_floor", "sample_count", "tolerances"});
  auto num = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (auto v = r.number(j[key], join(path, key))) field = *v;
  };
  num("pe_window_T", dg.pe_window_T);
  num("pe_delta", dg.pe_delta);
  num("pe_start_time", dg.pe_start_time);
  num("monotonicity_slack", dg.monotonicity_slack);
  num("l2_tail_fraction", dg.l2_tail_fraction);
  num("l2_tail_ratio", dg.l2_tail_ratio);
  num("target_tail_fraction", dg.target_tail_fraction);
  num("target_tolerance", dg.target_tolerance);
  num("observer_tolerance", dg.observer_tolerance);
  num("bound_factor", dg.bound_factor);
  num("finite_form_constant", dg.finite_form_constant);
  num("rate_fit_max_residual", dg.rate_fit_max_residual);
  num("rate_fit_floor", dg.rate_fit_floor);
  if (j.contains("expect_pe")) {
    if (auto v = r.boolean(j["expect_pe"], join(path, "expect_pe"))) dg.expect_pe = *v;
  }
  if (j.contains("sample_count")) {
    if (auto v = r.count(j["sample_count"], join(path, "sample_count"))) dg.sample_count = *v;
  }
  if (j.contains("tolerances")) {
    const std::string tp = join(path, "tolerances");
    const json& t = j["tolerances"];
    if (r.object(t, tp)) {
      r.allowed_keys(t, tp, {"drift", "manifold", "kappa", "invariance", "potential"});
      auto tol = [&](const char* key, double& field) {
        if (!t.contains(key)) return;
        if (auto v = r.number(t[key], join(tp, key))) field = *v;
      };
      tol("drift", dg.tolerances.drift);
      tol("manifold", dg.tolerances.manifold);
      tol("kappa", dg.tolerances.kappa);
      tol("invariance", dg.tolerances.invariance);
      tol("potential", dg.tolerances.potential);
    }
  }
}

void read_string_list(Reader& r, const json& j, const std::string& path,
                      std::vector<std::string>& out) {
  if (!j.is_array()) {
    r.issue(path, "expected an array of strings");
    return;
  }
  std::vector<std::string> values;
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (auto s = r.string(j[i], index_path(path, i))) values.push_back(*s);
  }
  out = std::move(values);
}

ScenarioSpec read_inline(Reader& r, const json& j, const std::string& path) {
  ScenarioSpec spec;
  spec.name = "inline";
  if (!r.object(j, path)) return spec;
  r.allowed_keys(j, path,
                 {"name", "n", "m", "d", "f", "gu", "phi", "phi_row_lipschitz", "S", "H",
                  "theta_box", "u0", "psi", "varphi", "kappa", "beta_min", "sample_region",
                  "asserted_assumptions"});
  auto required = [&](const char* key) {
    if (j.contains(key)) return true;
    r.issue(join(path, key), "required");
    return false;
  };
  if (j.contains("name")) {
    if (auto s = r.string(j["name"], join(path, "name"))) spec.name = *s;
  }
  std::optional<std::size_t> n, m, d;
  if (required("n")) n = r.count(j["n"], join(path, "n"));
  if (required("m")) m = r.count(j["m"], join(path, "m"));
  if (required("d")) d = r.count(j["d"], join(path, "d"));
  if (!n || !m || !d) return spec;

  PlantModel& plant = spec.plant;
  plant.n = *n;
  plant.m = *m;
  plant.d = *d;
  if (required("f")) {
    if (auto f = r.polynomials(j["f"], join(path, "f"), *n, *n)) {
      PolynomialMap map(std::move(*f));
      plant.f = [map](const Vector& x) { return map(x); };
    }
  }
  if (required("gu")) {
    if (auto g = r.matrix(j["gu"], join(path, "gu"), *n, *m)) plant.gu = *g;
  }
  std::optional<PolynomialMatrix> phi;
  if (required("phi")) phi = r.polynomial_matrix(j["phi"], join(path, "phi"), *n, *m, *d);
  if (phi) {
    std::vector<PolynomialMatrix> partials;
    for (std::size_t k = 0; k < *n; ++k) partials.push_back(phi->derivative(k));
    plant.phi = [p = *phi](const Vector& x) { return p(x); };
    plant.dphi = [partials, m = *m, d = *d](const Vector& x, const Vector& v) {
      Matrix out(m, d);
      for (std::size_t k = 0; k < partials.size(); ++k) {
        if (v[k] != 0.0) out += partials[k](x) * v[k];
      }
      return out;
    };
  }
  if (j.contains("phi_row_lipschitz")) {
    read_lipschitz(r, j["phi_row_lipschitz"], join(path, "phi_row_lipschitz"), *m, plant);
  } else if (phi && phi->degree() <= 1) {
    const Vector moduli = affine_row_lipschitz(*phi);
    plant.phi_row_lipschitz = [moduli](const Vector&, const Vector&) { return moduli; };
  } else if (phi) {
    r.issue(join(path, "phi_row_lipschitz"), "required when phi is not affine");
  }

  DriftModel& drift = spec.drift;
  if (j.contains("S")) {
    read_drift(r, j["S"], join(path, "S"), *d, drift);
  } else {
    drift.s = linear_drift(Matrix(*d, *d));
    drift.js = constant_matrix(Matrix(*d, *d));
  }
  drift.h = Matrix::identity(*d);
  if (j.contains("H")) {
    if (auto h = r.matrix(j["H"], join(path, "H"), *d, *d)) drift.h = *h;
  }
  if (j.contains("theta_box")) {
    read_theta_box(r, j["theta_box"], join(path, "theta_box"), *d, drift.theta_box);
  }

  TargetSpec& target = spec.target;
  if (required("u0")) {
    if (auto u = r.polynomials(j["u0"], join(path, "u0"), *n, *m)) {
      PolynomialMap map(std::move(*u));
      target.u0 = [map](const Vector& x) { return map(x); };
    }
  }
  if (required("psi")) {
    if (auto p = r.polynomial(j["psi"], join(path, "psi"), *n)) {
      PolynomialMap grad = p->gradient_map();
      target.psi = [poly = *p](const Vector& x) { return poly(x); };
      target.grad_psi = [grad](const Vector& x) { return grad(x); };
    }
  }
  target.varphi = [](double s) { return s; };
  if (j.contains("varphi")) {
    if (auto p = r.polynomial(j["varphi"], join(path, "varphi"), 1)) {
      target.varphi = [poly = *p](double s) { return poly(std::span<const double>(&s, 1)); };
    }
  }
  if (required("kappa")) read_kappa(r, j["kappa"], join(path, "kappa"), *n, target);
  if (required("beta_min")) {
    if (auto b = r.number(j["beta_min"], join(path, "beta_min"))) target.beta_min = *b;
  }

  spec.init.x0 = zeros(*n);
  spec.init.theta0 = zeros(*d);
  spec.init.theta_hat0 = zeros(*d);
  spec.init.xi0 = zeros(*n);
  spec.init.nu0 = zeros(*d);
  spec.diagnostics.sample_region.lo = Vector(*n, -1.0);
  spec.diagnostics.sample_region.hi = Vector(*n, 1.0);
  if (j.contains("sample_region")) {
    read_sample_region(r, j["sample_region"], join(path, "sample_region"), *n,
                       spec.diagnostics.sample_region);
  }
  if (j.contains("asserted_assumptions")) {
    read_string_list(r, j["asserted_assumptions"], join(path, "asserted_assumptions"),
                     spec.asserted_assumptions);
  }
  return spec;
}

void read_overrides(Reader& r, const json& j, const std::string& path, ScenarioSpec& spec) {
  if (!r.object(j, path)) return;
  r.allowed_keys(j, path,
                 {"x0", "theta0", "theta_hat0", "xi0", "nu0", "identity_init", "t0", "t_end",
                  "h", "adaptive", "tol_rel", "tol_abs", "log_stride", "max_steps", "mode",
                  "fd_step_scale", "H", "theta_box", "S", "kappa", "beta_min",
                  "sample_region", "diagnostics"});
  const std::size_t n = spec.plant.n;
  const std::size_t d = spec.plant.d;
  auto vec = [&](const char* key, std::size_t size, Vector& field) {
    if (!j.contains(key)) return;
    if (auto v = r.vector(j[key], join(path, key), size)) field = *v;
  };
  vec("x0", n, spec.init.x0);
  vec("theta0", d, spec.init.theta0);
  vec("theta_hat0", d, spec.init.theta_hat0);
  vec("xi0", n, spec.init.xi0);
  vec("nu0", d, spec.init.nu0);
  if (j.contains("identity_init")) {
    if (auto v = r.boolean(j["identity_init"], join(path, "identity_init")))
      spec.init.identity_init = *v;
  }

  IntegrationConfig& ic = spec.integration;
  auto num = [&](const char* key, double& field) {
    if (!j.contains(key)) return;
    if (auto v = r.number(j[key], join(path, key))) field = *v;
  };
  num("t0", ic.t0);
  num("t_end", ic.t_end);
  num("h", ic.h);
  num("tol_rel", ic.tol_rel);
  num("tol_abs", ic.tol_abs);
  if (j.contains("adaptive")) {
    if (auto v = r.boolean(j["adaptive"], join(path, "adaptive"))) ic.adaptive = *v;
  }
  if (j.contains("log_stride")) {
    if (auto v = r.count(j["log_stride"], join(path, "log_stride"))) ic.log_stride = *v;
  }
  if (j.contains("max_steps")) {
    if (auto v = r.count(j["max_steps"], join(path, "max_steps"))) ic.max_steps = *v;
  }

  if (j.contains("mode")) {
    if (auto s = r.string(j["mode"], join(path, "mode"))) {
      try {
        spec.mode.variant = parse_controller_variant(*s);
      } catch (const InvalidArgument&) {
        r.issue(join(path, "mode"), "expected theorem1 or theorem2");
      }
    }
  }
  num("fd_step_scale", spec.mode.fd_step_scale);

  if (j.contains("H")) {
    if (auto h = r.matrix(j["H"], join(path, "H"), d, d)) spec.drift.h = *h;
  }
  if (j.contains("theta_box")) {
    read_theta_box(r, j["theta_box"], join(path, "theta_box"), d, spec.drift.theta_box);
  }
  if (j.contains("S")) read_drift(r, j["S"], join(path, "S"), d, spec.drift);
  if (j.contains("kappa")) read_kappa(r, j["kappa"], join(path, "kappa"), n, spec.target);
  num("beta_min", spec.target.beta_min);
  if (j.contains("sample_region")) {
    read_sample_region(r, j["sample_region"], join(path, "sample_region"), n,
                       spec.diagnostics.sample_region);
  }
  if (j.contains("diagnostics")) {
    read_diagnostics(r, j["diagnostics"], join(path, "diagnostics"), spec.diagnostics);
  }
}

// validate() messages start with the field name; re-anchor them under the
// overrides section so users can find the key.
void revalidate(Reader& r, const ScenarioSpec& spec) {
  try {
    spec.integration.validate();
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    r.issue(join("overrides", msg.substr(0, colon)),
            colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  try {
    spec.diagnostics.validate(spec.plant.n);
  } catch (const InvalidArgument& e) {
    const std::string msg = e.what();
    const auto colon = msg.find(':');
    const std::string field = msg.substr(0, colon);
    const std::string where = field == "sample_region"
                                  ? join("overrides", field)
                                  : join("overrides.diagnostics", field);
    r.issue(where, colon == std::string::npos ? msg : msg.substr(colon + 2));
  }
  if (!(spec.mode.fd_step_scale > 0.0)) {
    r.issue("overrides.fd_step_scale", "must be positive");
  }
  if (!(spec.target.beta_min > 0.0)) r.issue("overrides.beta_min", "must be positive");
}

void require_size(const Vector& v, std::size_t want, const char* what) {
  if (v.size() != want) {
    throw DimensionMismatch(std::string(what) + ": got " + std::to_string(v.size()) +
                            " entries, expected " + std::to_string(want));
  }
}

}  // namespace

const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names = {
      "scalar-equilibrium", "hopf-circle", "hopf-circle-drift", "hopf-circle-kappa-zero"};
  return names;
}

ScenarioSpec builtin_spec(const std::string& name) {
  if (name == "scalar-equilibrium") return scalar_equilibrium();
  if (name == "hopf-circle") return hopf(name, 0.0, ControllerVariant::theorem1);
  if (name == "hopf-circle-drift") return hopf(name, 0.5, ControllerVariant::theorem1);
  if (name == "hopf-circle-kappa-zero") {
    return hopf(name, 0.0, ControllerVariant::theorem2_kappa_zero);
  }
  std::string known;
  for (const auto& n : builtin_names()) known += (known.empty() ? "" : ", ") + n;
  throw UnknownScenario("unknown scenario '" + name + "' (known: " + known + ")");
}

Scenario builtin(const std::string& name) { return build(builtin_spec(name)); }

Scenario build(const ScenarioSpec& spec) {
  Models models(spec.plant, spec.drift, spec.target);
  const std::size_t n = models.n();
  const std::size_t d = models.d();

  InitialCondition init = spec.init;
  require_size(init.x0, n, "x0");
  require_size(init.theta0, d, "theta0");
  if (init.identity_init) {
    init.xi0 = init.x0;
    init.nu0 = init.theta0;
    init.theta_hat0 = init.theta0;
  }
  require_size(init.theta_hat0, d, "theta_hat0");
  require_size(init.xi0, n, "xi0");
  require_size(init.nu0, d, "nu0");

  spec.integration.validate();
  spec.diagnostics.validate(n);
  if (!(spec.mode.fd_step_scale > 0.0)) {
    throw InvalidArgument("fd_step_scale: must be positive");
  }
  const auto& box = spec.drift.theta_box;
  for (std::size_t i = 0; i < box.size(); ++i) {
    if (init.theta0[i] < box[i].lo || init.theta0[i] > box[i].hi) {
      throw InvalidArgument("theta0: component " + std::to_string(i) +
                            " lies outside theta_box");
    }
  }

  SimState s0;
  s0.t = spec.integration.t0;
  s0.x = init.x0;
  s0.theta = init.theta0;
  s0.xi = init.xi0;
  s0.nu = init.nu0;
  s0.theta_hat_i =
      sub(init.theta_hat0, theta_hat(models, spec.mode, init.x0, init.xi0, zeros(d)));

  DiagnosticsConfig diagnostics = spec.diagnostics;
  diagnostics.asserted_assumptions = spec.asserted_assumptions;
  return Scenario{spec.name,        std::move(models), spec.mode,
                  std::move(s0),    spec.integration,  std::move(diagnostics),
                  spec.asserted_assumptions};
}

ScenarioSpec parse_config(const json& config) {
  Reader r;
  if (!r.object(config, "(root)")) r.raise_if_any();
  r.allowed_keys(config, "", {"schema_version", "scenario", "overrides", "output"});

  if (!config.contains("schema_version")) {
    r.issue("schema_version", "required");
  } else if (!config["schema_version"].is_number_integer() ||
             config["schema_version"].get<long long>() != kConfigSchemaVersion) {
    r.issue("schema_version", "expected " + std::to_string(kConfigSchemaVersion));
  }

  ScenarioSpec spec;
  bool have_model = false;
  if (!config.contains("scenario")) {
    r.issue("scenario", "required");
  } else if (config["scenario"].is_string()) {
    try {
      spec = builtin_spec(config["scenario"].get<std::string>());
      have_model = true;
    } catch (const UnknownScenario& e) {
      r.issue("scenario", e.what());
    }
  } else {
    const bool clean = r.ok();
    spec = read_inline(r, config["scenario"], "scenario");
    have_model = clean ? r.ok() : spec.plant.n > 0;
  }

  if (have_model && config.contains("overrides")) {
    read_overrides(r, config["overrides"], "overrides", spec);
  }
  if (config.contains("output")) {
    const json& out = config["output"];
    if (r.object(out, "output")) {
      r.allowed_keys(out, "output", {"dir", "plot", "stem"});
      if (out.contains("dir")) r.string(out["dir"], "output.dir");
      if (out.contains("stem")) r.string(out["stem"], "output.stem");
      if (out.contains("plot")) r.boolean(out["plot"], "output.plot");
    }
  }
  if (have_model && r.ok()) revalidate(r, spec);
  r.raise_if_any();
  return spec;
}

Scenario from_config(const json& config) { return build(parse_config(config)); }

}  // namespace invreg
