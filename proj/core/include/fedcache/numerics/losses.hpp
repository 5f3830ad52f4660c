#pragma once

#include <cstddef>
#include <span>

#include "fedcache/numerics/autodiff.hpp"
#include "fedcache/numerics/matrix.hpp"

namespace fedcache {

enum class Reduction { mean, sum };

/// Row-wise softmax with max-subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Mean (or sum) over rows of −log softmax(logits)[label], log-sum-exp stabilized.
/// Throws InputError for an empty batch or a label outside [0, cols).
double loss_ce_softmax(const Matrix& logits, std::span<const std::size_t> labels,
                       Reduction reduction = Reduction::mean);

/// Mean over rows of KL(softmax(teacher) ‖ softmax(student)).
double loss_kl_softmax(const Matrix& student_logits, const Matrix& teacher_logits);

namespace ad {

Var loss_ce_softmax(const Var& logits, std::span<const std::size_t> labels,
                    Reduction reduction = Reduction::mean);

/// Differentiable in both arguments; pass the teacher as a constant to distill into the student.
Var loss_kl_softmax(const Var& student_logits, const Var& teacher_logits);

}  // namespace ad
}  // namespace fedcache
