#include "invreg/polynomial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "invreg/errors.hpp"

namespace invreg {
namespace {

double ipow(double base, unsigned exp) {
  double out = 1.0;
  while (exp > 0) {
    if (exp & 1U) out *= base;
    base *= base;
    exp >>= 1U;
  }
  return out;
}

std::size_t common_vars(const std::vector<Polynomial>& polys) {
  if (polys.empty()) return 0;
  const std::size_t vars = polys.front().vars();
  for (const auto& p : polys) {
    if (p.vars() != vars) {
      throw DimensionMismatch("polynomials disagree on the number of variables");
    }
  }
  return vars;
}

}  // namespace

Polynomial::Polynomial(std::size_t vars, std::vector<Monomial> terms)
    : vars_(vars), terms_(std::move(terms)) {
  for (const auto& t : terms_) {
    if (t.powers.size() != vars_) {
      throw DimensionMismatch("monomial has " + std::to_string(t.powers.size()) +
                              " powers, expected " + std::to_string(vars_));
    }
    if (!std::isfinite(t.coef)) throw NonFiniteValue("monomial coefficient is not finite");
  }
}

Polynomial Polynomial::constant(std::size_t vars, double value) {
  return Polynomial(vars, {Monomial{value, std::vector<unsigned>(vars, 0)}});
}

Polynomial Polynomial::variable(std::size_t vars, std::size_t index) {
  if (index >= vars) throw DimensionMismatch("variable index out of range");
  std::vector<unsigned> powers(vars, 0);
  powers[index] = 1;
  return Polynomial(vars, {Monomial{1.0, std::move(powers)}});
}

unsigned Polynomial::degree() const noexcept {
  unsigned out = 0;
  for (const auto& t : terms_) {
    if (t.coef == 0.0) continue;
    unsigned sum = 0;
    for (unsigned p : t.powers) sum += p;
    out = std::max(out, sum);
  }
  return out;
}

double Polynomial::operator()(std::span<const double> x) const {
  if (x.size() != vars_) {
    throw DimensionMismatch("polynomial expects " + std::to_string(vars_) +
                            " variables, got " + std::to_string(x.size()));
  }
  double out = 0.0;
  for (const auto& t : terms_) {
    double v = t.coef;
    for (std::size_t i = 0; i < vars_; ++i) v *= ipow(x[i], t.powers[i]);
    out += v;
  }
  return out;
}

Polynomial Polynomial::derivative(std::size_t var) const {
  if (var >= vars_) throw DimensionMismatch("derivative variable out of range");
  std::vector<Monomial> out;
  for (const auto& t : terms_) {
    if (t.powers[var] == 0) continue;
    Monomial m = t;
    m.coef *= static_cast<double>(m.powers[var]);
    --m.powers[var];
    out.push_back(std::move(m));
  }
  return Polynomial(vars_, std::move(out));
}

Vector Polynomial::gradient(std::span<const double> x) const {
  Vector out(vars_);
  for (std::size_t i = 0; i < vars_; ++i) out[i] = derivative(i)(x);
  return out;
}

PolynomialMap Polynomial::gradient_map() const {
  std::vector<Polynomial> parts;
  parts.reserve(vars_);
  for (std::size_t i = 0; i < vars_; ++i) parts.push_back(derivative(i));
  return PolynomialMap(std::move(parts));
}

PolynomialMap::PolynomialMap(std::vector<Polynomial> components)
    : vars_(common_vars(components)), components_(std::move(components)) {}

Vector PolynomialMap::operator()(std::span<const double> x) const {
  Vector out(components_.size());
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = components_[i](x);
  return out;
}

Matrix PolynomialMap::jacobian(std::span<const double> x) const {
  Matrix out(components_.size(), vars_);
  for (std::size_t i = 0; i < components_.size(); ++i) {
    for (std::size_t j = 0; j < vars_; ++j) out(i, j) = components_[i].derivative(j)(x);
  }
  return out;
}

PolynomialMatrix PolynomialMap::jacobian_matrix() const {
  std::vector<Polynomial> entries;
  entries.reserve(components_.size() * vars_);
  for (const auto& c : components_) {
    for (std::size_t j = 0; j < vars_; ++j) entries.push_back(c.derivative(j));
  }
  return PolynomialMatrix(components_.size(), vars_, std::move(entries));
}

PolynomialMatrix::PolynomialMatrix(std::size_t rows, std::size_t cols,
                                   std::vector<Polynomial> entries)
    : rows_(rows), cols_(cols), vars_(common_vars(entries)), entries_(std::move(entries)) {
  if (entries_.size() != rows * cols) {
    throw DimensionMismatch("polynomial matrix has " + std::to_string(entries_.size()) +
                            " entries, expected " + std::to_string(rows * cols));
  }
}

unsigned PolynomialMatrix::degree() const noexcept {
  unsigned out = 0;
  for (const auto& p : entries_) out = std::max(out, p.degree());
  return out;
}

Matrix PolynomialMatrix::operator()(std::span<const double> x) const {
  Matrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out(i, j) = (*this)(i, j)(x);
  }
  return out;
}

PolynomialMatrix PolynomialMatrix::derivative(std::size_t var) const {
  std::vector<Polynomial> out;
  out.reserve(entries_.size());
  for (const auto& p : entries_) out.push_back(p.derivative(var));
  return PolynomialMatrix(rows_, cols_, std::move(out));
}

Matrix PolynomialMatrix::directional(std::span<const double> x,
                                     std::span<const double> v) const {
  if (v.size() != vars_) throw DimensionMismatch("direction has the wrong dimension");
  Matrix out(rows_, cols_);
  for (std::size_t i = 0; i < rows_; ++i) {
    for (std::size_t j = 0; j < cols_; ++j) out(i, j) = dot((*this)(i, j).gradient(x), v);
  }
  return out;
}

}  // namespace invreg
