#pragma once

// Sparse multivariate polynomials with exact derivatives, used to describe
// user dynamics in configuration files.

#include <cstddef>
#include <vector>

#include "invreg/linalg.hpp"

namespace invreg {

struct Monomial {
  double coef = 0.0;
  std::vector<unsigned> powers;  ///< one exponent per variable
};

class PolynomialMap;
class PolynomialMatrix;

class Polynomial {
 public:
  Polynomial() = default;
  /// Throws DimensionMismatch if a monomial has the wrong number of powers,
  /// NonFiniteValue for a non-finite coefficient.
  Polynomial(std::size_t vars, std::vector<Monomial> terms);

  static Polynomial constant(std::size_t vars, double value);
  /// The polynomial x_index.
  static Polynomial variable(std::size_t vars, std::size_t index);

  std::size_t vars() const noexcept { return vars_; }
  const std::vector<Monomial>& terms() const noexcept { return terms_; }
  unsigned degree() const noexcept;

  double operator()(std::span<const double> x) const;
  Polynomial derivative(std::size_t var) const;
  Vector gradient(std::span<const double> x) const;
  /// All partial derivatives, for repeated gradient evaluation.
  PolynomialMap gradient_map() const;

 private:
  std::size_t vars_ = 0;
  std::vector<Monomial> terms_;
};

/// Vector of polynomials sharing one variable count.
class PolynomialMap {
 public:
  PolynomialMap() = default;
  explicit PolynomialMap(std::vector<Polynomial> components);

  std::size_t vars() const noexcept { return vars_; }
  std::size_t size() const noexcept { return components_.size(); }
  const Polynomial& operator[](std::size_t i) const { return components_[i]; }

  Vector operator()(std::span<const double> x) const;
  Matrix jacobian(std::span<const double> x) const;
  /// Entry (i, j) is d component_i / d x_j.
  PolynomialMatrix jacobian_matrix() const;

 private:
  std::size_t vars_ = 0;
  std::vector<Polynomial> components_;
};

/// Matrix of polynomials, row-major.
class PolynomialMatrix {
 public:
  PolynomialMatrix() = default;
  PolynomialMatrix(std::size_t rows, std::size_t cols, std::vector<Polynomial> entries);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  std::size_t vars() const noexcept { return vars_; }
  const Polynomial& operator()(std::size_t i, std::size_t j) const {
    return entries_[i * cols_ + j];
  }
  unsigned degree() const noexcept;

  Matrix operator()(std::span<const double> x) const;
  PolynomialMatrix derivative(std::size_t var) const;
  /// Directional derivative along v.
  Matrix directional(std::span<const double> x, std::span<const double> v) const;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::size_t vars_ = 0;
  std::vector<Polynomial> entries_;
};

}  // namespace invreg
