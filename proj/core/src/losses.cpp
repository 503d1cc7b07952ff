#include "amlab/losses.hpp"

#include <cmath>
#include <stdexcept>

namespace amlab {

namespace {

void check_label(const Tensor& pred, std::size_t label) {
    if (pred.rank() != 1) throw DimensionError("loss expects rank-1 prediction");
    if (label >= pred.size()) throw std::out_of_range("label out of range");
}

double clamped_log(double v) { return std::log(std::max(v, kLogClamp)); }

}  // namespace

double cross_entropy(const Tensor& pred, std::size_t label) {
    check_label(pred, label);
    return -clamped_log(pred[label]);
}

double reverse_cross_entropy(const Tensor& pred, std::size_t label) {
    check_label(pred, label);
    return -clamped_log(1.0 - pred[label]);
}

double cross_entropy_to_uniform(const Tensor& pred) {
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) acc += clamped_log(pred[i]);
    return -acc / static_cast<double>(pred.size());
}

double distillation_loss(const Tensor& pred, const Tensor& soft_target) {
    if (!pred.same_shape(soft_target))
        throw DimensionError("distillation: prediction/target length mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i)
        acc += soft_target[i] * clamped_log(pred[i]);
    return -acc;
}

Tensor cross_entropy_grad(const Tensor& pred, std::size_t label) {
    check_label(pred, label);
    Tensor g(pred.shape());
    if (pred[label] > kLogClamp) g[label] = -1.0 / pred[label];
    return g;
}

Tensor reverse_cross_entropy_grad(const Tensor& pred, std::size_t label) {
    check_label(pred, label);
    Tensor g(pred.shape());
    double rest = 1.0 - pred[label];
    if (rest > kLogClamp) g[label] = 1.0 / rest;
    return g;
}

Tensor cross_entropy_to_uniform_grad(const Tensor& pred) {
    Tensor g(pred.shape());
    double inv_k = 1.0 / static_cast<double>(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] > kLogClamp) g[i] = -inv_k / pred[i];
    return g;
}

Tensor distillation_loss_grad(const Tensor& pred, const Tensor& soft_target) {
    if (!pred.same_shape(soft_target))
        throw DimensionError("distillation: prediction/target length mismatch");
    Tensor g(pred.shape());
    for (std::size_t i = 0; i < pred.size(); ++i)
        if (pred[i] > kLogClamp) g[i] = -soft_target[i] / pred[i];
    return g;
}

}  // namespace amlab
