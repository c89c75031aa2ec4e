#pragma once

#include <span>

#include "unlearn/matrix.hpp"

namespace unlearn {

/// Row-wise softmax with max subtraction.
Matrix softmax_rows(const Matrix& logits);

/// Mean cross-entropy of `labels` under softmax(logits). When `dlogits` is
/// given it receives `scale * d(mean loss)/d(logits)`.
double cross_entropy(const Matrix& logits, std::span<const int> labels, Matrix* dlogits = nullptr,
                     double scale = 1.0);

/// Back-propagates d(loss)/d(probs) through a row-wise softmax.
Matrix softmax_backward(const Matrix& probs, const Matrix& dprobs);

}  // namespace unlearn
