#pragma once

// Dense linear algebra for the small matrices that appear in the regulator
// (n, m, d up to roughly 16). Storage is row-major, no sparsity.

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

namespace invreg {

using Vector = std::vector<double>;

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0);
  /// Takes ownership of row-major entries. Throws DimensionMismatch if the
  /// entry count is wrong and NonFiniteValue on NaN/Inf.
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);
  static Matrix column(std::span<const double> v);

  std::size_t rows() const noexcept { return rows_; }
  std::size_t cols() const noexcept { return cols_; }
  bool empty() const noexcept { return entries_.empty(); }

  double& operator()(std::size_t i, std::size_t j) { return entries_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return entries_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const {
    return {entries_.data() + i * cols_, cols_};
  }
  std::span<const double> entries() const noexcept { return entries_; }

  Matrix transpose() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> entries_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(Matrix a, double s);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> v);
/// A^T v without forming the transpose.
Vector transpose_times(const Matrix& a, std::span<const double> v);

/// Induced infinity norm (largest absolute row sum).
double norm_inf(const Matrix& a);
bool all_finite(const Matrix& a);

// Vector helpers. Sizes must agree; mismatches throw DimensionMismatch.
Vector add(std::span<const double> a, std::span<const double> b);
Vector sub(std::span<const double> a, std::span<const double> b);
Vector scaled(std::span<const double> a, double s);
/// y += s * x
void axpy(double s, std::span<const double> x, std::span<double> y);
double dot(std::span<const double> a, std::span<const double> b);
double norm(std::span<const double> a);
double squared_norm(std::span<const double> a);
double norm_inf(std::span<const double> a);
bool all_finite(std::span<const double> a);

/// True when |a_ij - a_ji| <= rel_tol * max(1, ||A||inf) for every pair.
bool is_symmetric(const Matrix& a, double rel_tol = 1e-10);

/// Cholesky factor A = L L^T of a symmetric positive-definite matrix.
class Cholesky {
 public:
  Cholesky() = default;
  /// Throws NotSymmetric or NotPositiveDefinite (pivot <= 0).
  explicit Cholesky(const Matrix& a);

  std::size_t size() const noexcept { return lower_.rows(); }
  const Matrix& lower() const noexcept { return lower_; }

  Vector solve(std::span<const double> b) const;
  Matrix solve(const Matrix& b) const;

 private:
  Matrix lower_;
};

/// Solves A X = B for symmetric positive-definite A via Cholesky.
Matrix spd_solve(const Matrix& a, const Matrix& b);
Vector spd_solve(const Matrix& a, std::span<const double> b);

/// Eigenvalues of a symmetric matrix in ascending order, computed with
/// cyclic Jacobi rotations until the off-diagonal Frobenius norm drops
/// below 1e-12 (relative to the matrix scale when that is larger than one).
Vector sym_eigenvalues(const Matrix& a);
double sym_min_eig(const Matrix& a);
double sym_max_eig(const Matrix& a);

}  // namespace invreg
