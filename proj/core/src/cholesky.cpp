#include "fedcache/numerics/cholesky.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "fedcache/error.hpp"

namespace fedcache {

Cholesky::Cholesky(const Matrix& a) : factor_(a.rows(), a.cols()) {
  if (a.rows() != a.cols()) throw InputError("Cholesky: matrix is not square");
  const std::size_t n = a.rows();
  for (std::size_t j = 0; j < n; ++j) {
    double diag = a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag -= factor_(j, k) * factor_(j, k);
    if (!(diag > 0.0) || !std::isfinite(diag)) throw DecompositionError(j + 1, diag);
    const double ljj = std::sqrt(diag);
    factor_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = a(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= factor_(i, k) * factor_(j, k);
      factor_(i, j) = v / ljj;
    }
  }
}

Matrix Cholesky::solve(const Matrix& b) const {
  const std::size_t n = order();
  if (b.rows() != n) throw InputError("Cholesky::solve: right-hand side has wrong row count");
  Matrix x = b;
  const std::size_t m = b.cols();
  // forward: L·z = b
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t k = 0; k < i; ++k) {
      const double lik = factor_(i, k);
      for (std::size_t c = 0; c < m; ++c) x(i, c) -= lik * x(k, c);
    }
    const double lii = factor_(i, i);
    for (std::size_t c = 0; c < m; ++c) x(i, c) /= lii;
  }
  // backward: Lᵀ·x = z
  for (std::size_t ii = n; ii-- > 0;) {
    for (std::size_t k = ii + 1; k < n; ++k) {
      const double lki = factor_(k, ii);
      for (std::size_t c = 0; c < m; ++c) x(ii, c) -= lki * x(k, c);
    }
    const double lii = factor_(ii, ii);
    for (std::size_t c = 0; c < m; ++c) x(ii, c) /= lii;
  }
  return x;
}

void require_symmetric(const Matrix& a, const char* what) {
  if (a.rows() != a.cols()) {
    throw InputError(std::string(what) + ": matrix is " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + ", expected square");
  }
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < i; ++j) {
      const double scale = std::max({1.0, std::abs(a(i, j)), std::abs(a(j, i))});
      if (std::abs(a(i, j) - a(j, i)) > kSymmetryTolerance * scale) {
        throw InputError(std::string(what) + ": matrix is not symmetric at (" +
                         std::to_string(i) + "," + std::to_string(j) + ")");
      }
    }
  }
}

namespace {

Matrix regularized(const Matrix& k, double lambda) {
  Matrix a = k;
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
  return a;
}

}  // namespace

Matrix solve_spd_regularized(const Matrix& k, double lambda, const Matrix& y) {
  require_symmetric(k, "solve_spd_regularized");
  if (!(lambda >= 0.0)) throw InputError("solve_spd_regularized: lambda must be >= 0");
  if (y.rows() != k.rows()) throw InputError("solve_spd_regularized: Y has wrong row count");
  const Matrix a = regularized(k, lambda);
  const Cholesky chol(a);
  Matrix z = chol.solve(y);
  z += chol.solve(y - matmul(a, z));
  return z;
}

}  // namespace fedcache
