#pragma once

#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

/// Tolerance for the symmetry precondition of the SPD solvers.
inline constexpr double kSymmetryTolerance = 1e-8;

/// Lower-triangular Cholesky factor L of a symmetric positive-definite A = L·Lᵀ.
///
/// Only the lower triangle of the input is read. Throws DecompositionError naming the
/// first leading principal minor whose pivot is not strictly positive.
class Cholesky {
 public:
  explicit Cholesky(const Matrix& a);

  std::size_t order() const noexcept { return factor_.rows(); }
  const Matrix& factor() const noexcept { return factor_; }

  /// Solves A·X = B for X.
  Matrix solve(const Matrix& b) const;

 private:
  Matrix factor_;
};

/// Throws InputError unless `a` is square and symmetric within kSymmetryTolerance
/// (relative to max(1, |a_ij|, |a_ji|)).
void require_symmetric(const Matrix& a, const char* what);

/// (K + λI)⁻¹·Y via Cholesky with one step of iterative refinement.
Matrix solve_spd_regularized(const Matrix& k, double lambda, const Matrix& y);

}  // namespace fedcache
