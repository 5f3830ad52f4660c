#include "fedcache/numerics/losses.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "fedcache/error.hpp"

namespace fedcache {
namespace {

void check_labels(const Matrix& logits, std::span<const std::size_t> labels) {
  if (logits.rows() == 0) throw InputError("loss_ce_softmax: empty batch");
  if (labels.size() != logits.rows()) {
    throw InputError("loss_ce_softmax: " + std::to_string(labels.size()) + " labels for " +
                     std::to_string(logits.rows()) + " rows");
  }
  for (std::size_t label : labels) {
    if (label >= logits.cols()) {
      throw InputError("loss_ce_softmax: label " + std::to_string(label) + " outside [0, " +
                       std::to_string(logits.cols()) + ")");
    }
  }
}

double log_sum_exp(std::span<const double> row) {
  const double m = *std::max_element(row.begin(), row.end());
  double s = 0.0;
  for (double v : row) s += std::exp(v - m);
  return m + std::log(s);
}

/// log softmax of one row, written into `out`.
void log_softmax_row(std::span<const double> row, std::span<double> out) {
  const double lse = log_sum_exp(row);
  for (std::size_t j = 0; j < row.size(); ++j) out[j] = row[j] - lse;
}

double ce_total(const Matrix& logits, std::span<const std::size_t> labels) {
  double total = 0.0;
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    const auto row = logits.row(i);
    total += log_sum_exp(row) - row[labels[i]];
  }
  return total;
}

double kl_row(std::span<const double> log_p, std::span<const double> log_q) {
  double kl = 0.0;
  for (std::size_t j = 0; j < log_p.size(); ++j) kl += std::exp(log_p[j]) * (log_p[j] - log_q[j]);
  return std::max(kl, 0.0);
}

void check_kl_shapes(const Matrix& s, const Matrix& t) {
  if (!s.same_shape(t)) throw InputError("loss_kl_softmax: student and teacher shapes differ");
  if (s.rows() == 0) throw InputError("loss_kl_softmax: empty batch");
}

}  // namespace

Matrix softmax_rows(const Matrix& logits) {
  Matrix out(logits.rows(), logits.cols());
  for (std::size_t i = 0; i < logits.rows(); ++i) {
    log_softmax_row(logits.row(i), out.row(i));
    for (double& v : out.row(i)) v = std::exp(v);
  }
  return out;
}

double loss_ce_softmax(const Matrix& logits, std::span<const std::size_t> labels,
                       Reduction reduction) {
  check_labels(logits, labels);
  const double total = ce_total(logits, labels);
  return reduction == Reduction::mean ? total / static_cast<double>(logits.rows()) : total;
}

double loss_kl_softmax(const Matrix& student_logits, const Matrix& teacher_logits) {
  check_kl_shapes(student_logits, teacher_logits);
  const std::size_t c = student_logits.cols();
  std::vector<double> log_p(c), log_q(c);
  double total = 0.0;
  for (std::size_t i = 0; i < student_logits.rows(); ++i) {
    log_softmax_row(teacher_logits.row(i), log_p);
    log_softmax_row(student_logits.row(i), log_q);
    total += kl_row(log_p, log_q);
  }
  return total / static_cast<double>(student_logits.rows());
}

namespace ad {

Var loss_ce_softmax(const Var& logits, std::span<const std::size_t> labels, Reduction reduction) {
  check_labels(logits.value(), labels);
  const double n = static_cast<double>(logits.rows());
  const double factor = reduction == Reduction::mean ? 1.0 / n : 1.0;
  const double total = ce_total(logits.value(), labels);
  const double value = reduction == Reduction::mean ? total / n : total;
  std::vector<std::size_t> lab(labels.begin(), labels.end());
  const std::size_t ids[] = {logits.id()};
  return logits.tape().record(
      Matrix(1, 1, value), ids,
      [il = logits.id(), lab = std::move(lab), factor](Tape& tp, std::size_t self) {
        Matrix g = softmax_rows(tp.value(il));
        for (std::size_t i = 0; i < g.rows(); ++i) g(i, lab[i]) -= 1.0;
        tp.accumulate(il, g * (factor * tp.grad(self)(0, 0)));
      });
}

Var loss_kl_softmax(const Var& student_logits, const Var& teacher_logits) {
  Tape& t = student_logits.tape();
  if (&t != &teacher_logits.tape()) throw InputError("loss_kl_softmax: different tapes");
  const double value = fedcache::loss_kl_softmax(student_logits.value(), teacher_logits.value());
  const std::size_t ids[] = {student_logits.id(), teacher_logits.id()};
  return t.record(
      Matrix(1, 1, value), ids,
      [is = student_logits.id(), it = teacher_logits.id()](Tape& tp, std::size_t self) {
        const Matrix& s = tp.value(is);
        const Matrix& te = tp.value(it);
        const double scale = tp.grad(self)(0, 0) / static_cast<double>(s.rows());
        const std::size_t c = s.cols();
        Matrix gs(s.rows(), c), gt(s.rows(), c);
        std::vector<double> log_p(c), log_q(c);
        for (std::size_t i = 0; i < s.rows(); ++i) {
          log_softmax_row(te.row(i), log_p);
          log_softmax_row(s.row(i), log_q);
          const double kl = kl_row(log_p, log_q);
          for (std::size_t j = 0; j < c; ++j) {
            const double p = std::exp(log_p[j]);
            gs(i, j) = (std::exp(log_q[j]) - p) * scale;
            gt(i, j) = p * (log_p[j] - log_q[j] - kl) * scale;
          }
        }
        tp.accumulate(is, gs);
        tp.accumulate(it, gt);
      });
}

}  // namespace ad
}  // namespace fedcache
