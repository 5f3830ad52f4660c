#pragma once

#include <cstddef>
#include <deque>
#include <functional>
#include <span>
#include <vector>

#include "fedcache/numerics/matrix.hpp"

namespace fedcache::ad {

class Tape;

/// Handle to a node recorded on a Tape. Cheap to copy; valid as long as the tape lives.
class Var {
 public:
  Var() = default;

  const Matrix& value() const;
  /// Accumulated gradient; zeros of the value's shape if nothing flowed here.
  const Matrix& grad() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
  std::size_t id() const noexcept { return id_; }
  Tape& tape() const noexcept { return *tape_; }
  bool valid() const noexcept { return tape_ != nullptr; }

 private:
  friend class Tape;
  Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}

  Tape* tape_ = nullptr;
  std::size_t id_ = 0;
};

/// Reverse-mode differentiation arena. Nodes are appended in evaluation order, so the
/// node index is a topological order and backward() is a single reverse sweep.
///
/// A tape is single-threaded; build one per worker.
class Tape {
 public:
  /// Backward rule: reads the node's own gradient and accumulates into its inputs.
  using Backward = std::function<void(Tape&, std::size_t self)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Leaf that receives a gradient.
  Var variable(Matrix value);
  /// Leaf excluded from differentiation.
  Var constant(Matrix value);

  /// Records an operation node. It requires a gradient iff any input does.
  Var record(Matrix value, std::span<const std::size_t> inputs, Backward backward);

  /// Seeds d(output)/d(output) = 1 for a 1×1 output and sweeps backwards.
  void backward(const Var& output);
  /// Drops accumulated gradients so the same graph can be swept again.
  void zero_grad();

  const Matrix& value(std::size_t id) const { return nodes_[id].value; }
  const Matrix& grad(std::size_t id) const;
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  void accumulate(std::size_t id, const Matrix& g);
  std::size_t size() const noexcept { return nodes_.size(); }

 private:
  struct Node {
    Matrix value;
    mutable Matrix grad;
    bool requires_grad = false;
    std::vector<std::size_t> inputs;
    Backward backward;
  };

  std::deque<Node> nodes_;
};

Var matmul(const Var& a, const Var& b);
/// a · bᵀ
Var matmul_nt(const Var& a, const Var& b);
Var add(const Var& a, const Var& b);
Var sub(const Var& a, const Var& b);
/// Adds the 1×c row `bias` to every row of `x`.
Var add_row(const Var& x, const Var& bias);
Var relu(const Var& x);
Var scale(const Var& x, double s);
/// 1×1 sum of all entries.
Var sum(const Var& x);
/// 1×1 value ½·Σ x².
Var half_squared_norm(const Var& x);
Var gather_rows(const Var& x, std::span<const std::size_t> rows);

/// (K + λI)⁻¹·Y, differentiable in K and Y. The backward pass reuses the forward
/// Cholesky factor to solve the adjoint system.
Var solve_spd_regularized(const Var& k, double lambda, const Var& y);

}  // namespace fedcache::ad
