#pragma once

#include <functional>

#include "fedcache/error.hpp"
#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

/// Central-difference gradient of a scalar function: entry (i,j) is
/// (f(X + h·E_ij) − f(X − h·E_ij)) / 2h.
inline Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& f, const Matrix& x,
                                   double h = 1e-5) {
  if (!(h > 0.0)) throw InputError("finite_diff_gradient: step must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (std::size_t i = 0; i < x.rows(); ++i) {
    for (std::size_t j = 0; j < x.cols(); ++j) {
      const double orig = probe(i, j);
      probe(i, j) = orig + h;
      const double up = f(probe);
      probe(i, j) = orig - h;
      const double down = f(probe);
      probe(i, j) = orig;
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

}  // namespace fedcache
