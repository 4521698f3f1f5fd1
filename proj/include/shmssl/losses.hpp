#pragma once

#include "shmssl/tensor.hpp"

#include <cstddef>
#include <span>

namespace shmssl {

/// Scalar loss with the gradient w.r.t. its (first) tensor argument.
struct LossGrad {
    double value = 0.0;
    Tensor grad;
};

/// Row-wise softmax over the last dimension, max-subtracted.
Tensor softmax(const Tensor& logits);

/// Row-wise log-softmax over the last dimension.
Tensor log_softmax(const Tensor& logits);

/// (1/B) * sum_i ||prediction_i - target_i||^2 with B = dim(0).
LossGrad mse_loss(const Tensor& prediction, const Tensor& target);

/// Mean cross-entropy of softmax(logits) against integer labels, with the
/// gradient (softmax - one_hot) / B w.r.t. the logits.
LossGrad softmax_cross_entropy(const Tensor& logits, std::span<const int> labels);

/// Numerically stable log(1 + exp(x)).
double softplus(double x) noexcept;
double sigmoid(double x) noexcept;

}  // namespace shmssl
