#pragma once

#include "amlab/tensor.hpp"

namespace amlab {

/// Floor applied inside every log to keep losses finite.
inline constexpr double kLogClamp = 1e-12;

enum class LossKind {
    standard,      // cross entropy against a class label
    reverse,       // cross entropy on (1 - p[label]); trains misinformation
    standard_oe,   // standard plus outlier-exposure term toward uniform
};

/// -log(pred[label]) with the clamp floor.
double cross_entropy(const Tensor& pred, std::size_t label);

/// -log(1 - pred[label]) with the clamp floor. Zero when the model puts
/// no mass on the true class.
double reverse_cross_entropy(const Tensor& pred, std::size_t label);

/// Cross entropy between the uniform distribution and pred:
/// -(1/K) * sum_i log(pred[i]).
double cross_entropy_to_uniform(const Tensor& pred);

/// H(soft_target, pred) = -sum_i soft_target[i] * log(pred[i]).
double distillation_loss(const Tensor& pred, const Tensor& soft_target);

// Gradients of each loss w.r.t. the probability vector; fed into
// Classifier::backward which handles the softmax Jacobian.
Tensor cross_entropy_grad(const Tensor& pred, std::size_t label);
Tensor reverse_cross_entropy_grad(const Tensor& pred, std::size_t label);
Tensor cross_entropy_to_uniform_grad(const Tensor& pred);
Tensor distillation_loss_grad(const Tensor& pred, const Tensor& soft_target);

}  // namespace amlab
