#include "fedcache/numerics/autodiff.hpp"

#include <algorithm>
#include <memory>
#include <string>

#include "fedcache/error.hpp"
#include "fedcache/numerics/cholesky.hpp"

namespace fedcache::ad {

const Matrix& Var::value() const { return tape_->value(id_); }
const Matrix& Var::grad() const { return tape_->grad(id_); }

Var Tape::variable(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, true, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::constant(Matrix value) {
  nodes_.push_back(Node{std::move(value), {}, false, {}, {}});
  return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::span<const std::size_t> inputs, Backward backward) {
  if (!value.all_finite()) throw InputError("autodiff: operation produced a non-finite value");
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [this](std::size_t i) { return nodes_[i].requires_grad; });
  nodes_.push_back(Node{std::move(value), {}, needs,
                        std::vector<std::size_t>(inputs.begin(), inputs.end()),
                        needs ? std::move(backward) : Backward{}});
  return Var(this, nodes_.size() - 1);
}

const Matrix& Tape::grad(std::size_t id) const {
  const Node& n = nodes_[id];
  if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  return n.grad;
}

void Tape::accumulate(std::size_t id, const Matrix& g) {
  Node& n = nodes_[id];
  if (!n.requires_grad) return;
  if (!n.grad.same_shape(n.value)) n.grad = Matrix(n.value.rows(), n.value.cols());
  n.grad += g;
}

void Tape::zero_grad() {
  for (Node& n : nodes_) n.grad = Matrix();
}

void Tape::backward(const Var& output) {
  if (output.rows() != 1 || output.cols() != 1) {
    throw InputError("Tape::backward: output must be 1x1");
  }
  accumulate(output.id(), Matrix(1, 1, 1.0));
  for (std::size_t id = output.id() + 1; id-- > 0;) {
    const Node& n = nodes_[id];
    if (!n.requires_grad || !n.backward || !n.grad.same_shape(n.value)) continue;
    n.backward(*this, id);
  }
}

namespace {

Tape& same_tape(const Var& a, const Var& b) {
  if (&a.tape() != &b.tape()) throw InputError("autodiff: operands live on different tapes");
  return a.tape();
}

}  // namespace

Var matmul(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const std::size_t ids[] = {a.id(), b.id()};
  return t.record(fedcache::matmul(a.value(), b.value()), ids,
                  [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    if (tp.requires_grad(ia)) tp.accumulate(ia, matmul_nt(g, tp.value(ib)));
                    if (tp.requires_grad(ib)) tp.accumulate(ib, matmul_tn(tp.value(ia), g));
                  });
}

Var matmul_nt(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const std::size_t ids[] = {a.id(), b.id()};
  return t.record(fedcache::matmul_nt(a.value(), b.value()), ids,
                  [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    if (tp.requires_grad(ia)) tp.accumulate(ia, fedcache::matmul(g, tp.value(ib)));
                    if (tp.requires_grad(ib)) tp.accumulate(ib, matmul_tn(g, tp.value(ia)));
                  });
}

Var add(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const std::size_t ids[] = {a.id(), b.id()};
  return t.record(a.value() + b.value(), ids,
                  [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g);
                  });
}

Var sub(const Var& a, const Var& b) {
  Tape& t = same_tape(a, b);
  const std::size_t ids[] = {a.id(), b.id()};
  return t.record(a.value() - b.value(), ids,
                  [ia = a.id(), ib = b.id()](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    tp.accumulate(ia, g);
                    tp.accumulate(ib, g * -1.0);
                  });
}

Var add_row(const Var& x, const Var& bias) {
  Tape& t = same_tape(x, bias);
  if (bias.rows() != 1 || bias.cols() != x.cols()) {
    throw InputError("add_row: bias must be 1x" + std::to_string(x.cols()));
  }
  Matrix out = x.value();
  const auto b = bias.value().row(0);
  for (std::size_t i = 0; i < out.rows(); ++i) {
    auto r = out.row(i);
    for (std::size_t j = 0; j < r.size(); ++j) r[j] += b[j];
  }
  const std::size_t ids[] = {x.id(), bias.id()};
  return t.record(std::move(out), ids,
                  [ix = x.id(), ib = bias.id()](Tape& tp, std::size_t self) {
                    const Matrix& g = tp.grad(self);
                    tp.accumulate(ix, g);
                    if (tp.requires_grad(ib)) {
                      Matrix gb(1, g.cols());
                      for (std::size_t i = 0; i < g.rows(); ++i)
                        for (std::size_t j = 0; j < g.cols(); ++j) gb(0, j) += g(i, j);
                      tp.accumulate(ib, gb);
                    }
                  });
}

Var relu(const Var& x) {
  Matrix out = x.value();
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ids[] = {x.id()};
  return x.tape().record(std::move(out), ids, [ix = x.id()](Tape& tp, std::size_t self) {
    Matrix g = tp.grad(self);
    const auto in = tp.value(ix).values();
    auto gv = g.values();
    for (std::size_t i = 0; i < gv.size(); ++i)
      if (!(in[i] > 0.0)) gv[i] = 0.0;
    tp.accumulate(ix, g);
  });
}

Var scale(const Var& x, double s) {
  const std::size_t ids[] = {x.id()};
  return x.tape().record(x.value() * s, ids, [ix = x.id(), s](Tape& tp, std::size_t self) {
    tp.accumulate(ix, tp.grad(self) * s);
  });
}

Var sum(const Var& x) {
  const std::size_t ids[] = {x.id()};
  return x.tape().record(Matrix(1, 1, fedcache::sum(x.value())), ids,
                         [ix = x.id()](Tape& tp, std::size_t self) {
                           const Matrix& v = tp.value(ix);
                           tp.accumulate(ix, Matrix(v.rows(), v.cols(), tp.grad(self)(0, 0)));
                         });
}

Var half_squared_norm(const Var& x) {
  double s = 0.0;
  for (double v : x.value().values()) s += v * v;
  const std::size_t ids[] = {x.id()};
  return x.tape().record(Matrix(1, 1, 0.5 * s), ids, [ix = x.id()](Tape& tp, std::size_t self) {
    tp.accumulate(ix, tp.value(ix) * tp.grad(self)(0, 0));
  });
}

Var gather_rows(const Var& x, std::span<const std::size_t> rows) {
  std::vector<std::size_t> idx(rows.begin(), rows.end());
  Matrix out = fedcache::gather_rows(x.value(), idx);
  const std::size_t ids[] = {x.id()};
  return x.tape().record(std::move(out), ids,
                         [ix = x.id(), idx = std::move(idx)](Tape& tp, std::size_t self) {
                           const Matrix& g = tp.grad(self);
                           const Matrix& v = tp.value(ix);
                           Matrix gx(v.rows(), v.cols());
                           for (std::size_t i = 0; i < idx.size(); ++i)
                             for (std::size_t j = 0; j < g.cols(); ++j) gx(idx[i], j) += g(i, j);
                           tp.accumulate(ix, gx);
                         });
}

Var solve_spd_regularized(const Var& k, double lambda, const Var& y) {
  Tape& t = same_tape(k, y);
  require_symmetric(k.value(), "solve_spd_regularized");
  if (!(lambda >= 0.0)) throw InputError("solve_spd_regularized: lambda must be >= 0");
  if (y.rows() != k.rows()) throw InputError("solve_spd_regularized: Y has wrong row count");
  Matrix a = k.value();
  for (std::size_t i = 0; i < a.rows(); ++i) a(i, i) += lambda;
  auto chol = std::make_shared<const Cholesky>(a);
  Matrix z = chol->solve(y.value());
  z += chol->solve(y.value() - fedcache::matmul(a, z));
  const std::size_t ids[] = {k.id(), y.id()};
  return t.record(std::move(z), ids,
                  [ik = k.id(), iy = y.id(), chol](Tape& tp, std::size_t self) {
                    // A symmetric: dY = A⁻ᵀ·G = A⁻¹·G, dK = −dY·Zᵀ.
                    const Matrix gy = chol->solve(tp.grad(self));
                    if (tp.requires_grad(iy)) tp.accumulate(iy, gy);
                    if (tp.requires_grad(ik)) tp.accumulate(ik, matmul_nt(gy, tp.value(self)) * -1.0);
                  });
}

}  // namespace fedcache::ad
