#include "invreg/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "invreg/errors.hpp"

namespace invreg {
namespace {

void require_same_size(std::size_t a, std::size_t b, const char* what) {
  if (a != b) {
    throw DimensionMismatch(std::string(what) + ": size " + std::to_string(a) +
                            " vs " + std::to_string(b));
  }
}

void require_square(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw DimensionMismatch(std::string(what) + ": matrix is " +
                            std::to_string(a.rows()) + "x" +
                            std::to_string(a.cols()) + ", expected square");
  }
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols, double fill)
    : rows_(rows), cols_(cols), entries_(rows * cols, fill) {}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> entries)
    : rows_(rows), cols_(cols), entries_(std::move(entries)) {
  require_same_size(entries_.size(), rows * cols, "Matrix entries");
  if (!invreg::all_finite(std::span<const double>(entries_))) {
    throw NonFiniteValue("Matrix: non-finite entry on construction");
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix out(n, n);
  for (std::size_t i = 0; i < n; ++i) out(i, i) = 1.0;
  return out;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix out(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) out(i, i) = diag[i];
  return out;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t r = rows.size();
  const std::size_t c = r == 0 ? 0 : rows.begin()->size();
  std::vector<double> entries;
  entries.reserve(r * c);
  for (const auto& row : rows) {
    require_same_size(row.size(), c, "Matrix::from_rows row length");
    entries.insert(entries.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(entries));
}

Matrix Matrix::column(std::span<const double> v) {
  return Matrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
}

Matrix Matrix::transpose() const {
  Matrix out(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) out(j, i) = (*this)(i, j);
  return out;
}

Matrix& Matrix::operator+=(const Matrix& other) {
  require_same_size(rows_, other.rows_, "Matrix += rows");
  require_same_size(cols_, other.cols_, "Matrix += cols");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] += other.entries_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  require_same_size(rows_, other.rows_, "Matrix -= rows");
  require_same_size(cols_, other.cols_, "Matrix -= cols");
  for (std::size_t k = 0; k < entries_.size(); ++k) entries_[k] -= other.entries_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& e : entries_) e *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(Matrix a, double s) { return a *= s; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  require_same_size(a.cols(), b.rows(), "Matrix product inner dimension");
  Matrix out(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t k = 0; k < a.cols(); ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, j) += aik * b(k, j);
    }
  }
  return out;
}

Vector operator*(const Matrix& a, std::span<const double> v) {
  require_same_size(a.cols(), v.size(), "Matrix-vector product");
  Vector out(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double acc = 0.0;
    for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * v[j];
    out[i] = acc;
  }
  return out;
}

Vector transpose_times(const Matrix& a, std::span<const double> v) {
  require_same_size(a.rows(), v.size(), "Transposed matrix-vector product");
  Vector out(a.cols(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < a.cols(); ++j) out[j] += a(i, j) * v[i];
  }
  return out;
}

double norm_inf(const Matrix& a) {
  double best = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double row_sum = 0.0;
    for (double e : a.row(i)) row_sum += std::abs(e);
    best = std::max(best, row_sum);
  }
  return best;
}

bool all_finite(const Matrix& a) { return all_finite(a.entries()); }

Vector add(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "vector add");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] + b[i];
  return out;
}

Vector sub(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "vector sub");
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = a[i] - b[i];
  return out;
}

Vector scaled(std::span<const double> a, double s) {
  Vector out(a.size());
  for (std::size_t i = 0; i < a.size(); ++i) out[i] = s * a[i];
  return out;
}

void axpy(double s, std::span<const double> x, std::span<double> y) {
  require_same_size(x.size(), y.size(), "axpy");
  for (std::size_t i = 0; i < x.size(); ++i) y[i] += s * x[i];
}

double dot(std::span<const double> a, std::span<const double> b) {
  require_same_size(a.size(), b.size(), "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

double squared_norm(std::span<const double> a) { return dot(a, a); }
double norm(std::span<const double> a) { return std::sqrt(squared_norm(a)); }

double norm_inf(std::span<const double> a) {
  double best = 0.0;
  for (double e : a) best = std::max(best, std::abs(e));
  return best;
}

bool all_finite(std::span<const double> a) {
  return std::all_of(a.begin(), a.end(), [](double e) { return std::isfinite(e); });
}

bool is_symmetric(const Matrix& a, double rel_tol) {
  if (a.rows() != a.cols()) return false;
  const double tol = rel_tol * norm_inf(a);
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = i + 1; j < a.cols(); ++j)
      if (std::abs(a(i, j) - a(j, i)) > tol) return false;
  return true;
}

Cholesky::Cholesky(const Matrix& a) {
  require_square(a, "Cholesky");
  if (!is_symmetric(a)) throw NotSymmetric("Cholesky: matrix is not symmetric");
  const std::size_t n = a.rows();
  lower_ = Matrix(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    double pivot = a(j, j);
    for (std::size_t k = 0; k < j; ++k) pivot -= lower_(j, k) * lower_(j, k);
    if (!(pivot > 0.0)) {
      throw NotPositiveDefinite("Cholesky: pivot " + std::to_string(j) +
                                " is not positive (" + std::to_string(pivot) + ")");
    }
    const double ljj = std::sqrt(pivot);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double s = a(i, j);
      for (std::size_t k = 0; k < j; ++k) s -= lower_(i, k) * lower_(j, k);
      lower_(i, j) = s / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = size();
  require_same_size(b.size(), n, "Cholesky::solve");
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = b[i];
    for (std::size_t k = 0; k < i; ++k) s -= lower_(i, k) * y[k];
    y[i] = s / lower_(i, i);
  }
  for (std::size_t i = n; i-- > 0;) {
    double s = y[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= lower_(k, i) * y[k];
    y[i] = s / lower_(i, i);
  }
  return y;
}

Matrix Cholesky::solve(const Matrix& b) const {
  require_same_size(b.rows(), size(), "Cholesky::solve rows");
  Matrix out(b.rows(), b.cols());
  Vector column(b.rows());
  for (std::size_t j = 0; j < b.cols(); ++j) {
    for (std::size_t i = 0; i < b.rows(); ++i) column[i] = b(i, j);
    const Vector x = solve(column);
    for (std::size_t i = 0; i < b.rows(); ++i) out(i, j) = x[i];
  }
  return out;
}

Matrix spd_solve(const Matrix& a, const Matrix& b) { return Cholesky(a).solve(b); }

Vector spd_solve(const Matrix& a, std::span<const double> b) {
  return Cholesky(a).solve(b);
}

Vector sym_eigenvalues(const Matrix& a) {
  require_square(a, "sym_eigenvalues");
  if (!is_symmetric(a)) throw NotSymmetric("sym_eigenvalues: matrix is not symmetric");
  const std::size_t n = a.rows();
  Matrix w = a;
  // Symmetrize exactly so rotations act on a truly symmetric matrix.
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const double avg = 0.5 * (w(i, j) + w(j, i));
      w(i, j) = avg;
      w(j, i) = avg;
    }

  auto off_norm = [&w, n] {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        if (i != j) s += w(i, j) * w(i, j);
    return std::sqrt(s);
  };
  const double threshold = 1e-12 * std::max(1.0, norm_inf(a));

  constexpr int kMaxSweeps = 100;
  for (int sweep = 0; sweep < kMaxSweeps && off_norm() >= threshold; ++sweep) {
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = w(p, q);
        if (apq == 0.0) continue;
        const double theta = (w(q, q) - w(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double wkp = w(k, p);
          const double wkq = w(k, q);
          w(k, p) = c * wkp - s * wkq;
          w(k, q) = s * wkp + c * wkq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double wpk = w(p, k);
          const double wqk = w(q, k);
          w(p, k) = c * wpk - s * wqk;
          w(q, k) = s * wpk + c * wqk;
        }
      }
    }
  }

  Vector eig(n);
  for (std::size_t i = 0; i < n; ++i) eig[i] = w(i, i);
  std::sort(eig.begin(), eig.end());
  return eig;
}

double sym_min_eig(const Matrix& a) {
  const Vector eig = sym_eigenvalues(a);
  if (eig.empty()) throw DimensionMismatch("sym_min_eig: empty matrix");
  return eig.front();
}

double sym_max_eig(const Matrix& a) {
  const Vector eig = sym_eigenvalues(a);
  if (eig.empty()) throw DimensionMismatch("sym_max_eig: empty matrix");
  return eig.back();
}

}  // namespace invreg
