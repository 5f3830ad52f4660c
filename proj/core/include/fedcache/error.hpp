#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fedcache {

/// Root of every exception thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Caller supplied a value outside an operation's domain (bad shape, label, index).
class InputError : public Error {
 public:
  using Error::Error;
};

/// Invalid or inconsistent run configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Cholesky factorization hit a non-positive pivot.
class DecompositionError : public Error {
 public:
  DecompositionError(std::size_t leading_minor, double pivot)
      : Error("matrix is not positive definite: leading minor " + std::to_string(leading_minor) +
              " has pivot " + std::to_string(pivot)),
        leading_minor_(leading_minor) {}

  /// 1-based order of the first leading principal minor that failed.
  std::size_t leading_minor() const noexcept { return leading_minor_; }

 private:
  std::size_t leading_minor_;
};

/// Dirichlet partitioning could not produce non-empty clients within the retry bound.
class PartitionError : public Error {
 public:
  using Error::Error;
};

/// A declared payload disagrees with the body actually sent.
class ConsistencyError : public Error {
 public:
  using Error::Error;
};

}  // namespace fedcache
