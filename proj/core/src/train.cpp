#include "amlab/train.hpp"

#include <cmath>
#include <stdexcept>

#include "amlab/rng.hpp"

namespace amlab {

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be > 0");
    if (epochs < 1) throw ConfigError("epochs must be >= 1");
    if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
    if (oe_weight < 0.0) throw ConfigError("oe_weight must be >= 0");
}

namespace {

Tensor scaled(Tensor t, double s) {
    for (std::size_t i = 0; i < t.size(); ++i) t[i] *= s;
    return t;
}

double sample_loss(const Tensor& pred, std::size_t label, LossKind kind) {
    switch (kind) {
        case LossKind::standard:
        case LossKind::standard_oe: return cross_entropy(pred, label);
        case LossKind::reverse: return reverse_cross_entropy(pred, label);
    }
    throw std::logic_error("unknown loss kind");
}

Tensor sample_loss_grad(const Tensor& pred, std::size_t label, LossKind kind) {
    switch (kind) {
        case LossKind::standard:
        case LossKind::standard_oe: return cross_entropy_grad(pred, label);
        case LossKind::reverse: return reverse_cross_entropy_grad(pred, label);
    }
    throw std::logic_error("unknown loss kind");
}

}  // namespace

std::vector<double> train(Classifier& model, const LabeledDataset& data,
                          const LabeledDataset* outliers, const TrainConfig& cfg,
                          LossKind loss_kind) {
    cfg.validate();
    if (data.empty()) throw ConfigError("training dataset is empty");
    if (data.role() == Role::defender_test)
        throw ConfigError("refusing to train on a defender-test dataset");
    bool use_oe = loss_kind == LossKind::standard_oe && cfg.oe_weight > 0.0;
    if (loss_kind == LossKind::standard_oe && outliers == nullptr)
        throw ConfigError("standard+oe training requires an outlier dataset");
    if (use_oe && outliers->empty()) throw ConfigError("outlier dataset is empty");

    Rng order_rng(cfg.rng_seed);
    Rng outlier_rng(cfg.rng_seed + 1);  // separate stream so oe_weight=0 matches standard

    std::vector<std::size_t> order(data.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
    std::vector<std::size_t> outlier_order;
    std::size_t outlier_pos = 0;
    if (use_oe) outlier_order = outlier_rng.permutation(outliers->size());

    std::vector<double> history;
    history.reserve(cfg.epochs);
    for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double epoch_loss = 0.0;
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            std::size_t end = std::min(start + cfg.batch_size, order.size());
            double inv_batch = 1.0 / static_cast<double>(end - start);
            model.zero_grads();
            for (std::size_t b = start; b < end; ++b) {
                std::size_t idx = order[b];
                Tensor pred = model.forward(data.input(idx));
                epoch_loss += sample_loss(pred, data.label(idx), loss_kind);
                model.backward(scaled(sample_loss_grad(pred, data.label(idx), loss_kind),
                                      inv_batch));
                if (use_oe) {
                    if (outlier_pos == outlier_order.size()) {
                        outlier_rng.shuffle(outlier_order);
                        outlier_pos = 0;
                    }
                    const Tensor& ox = outliers->input(outlier_order[outlier_pos++]);
                    Tensor opred = model.forward(ox);
                    epoch_loss += cfg.oe_weight * cross_entropy_to_uniform(opred);
                    model.backward(scaled(cross_entropy_to_uniform_grad(opred),
                                          cfg.oe_weight * inv_batch));
                }
            }
            model.sgd_step(cfg.learning_rate);
        }
        history.push_back(epoch_loss / static_cast<double>(data.size()));
    }
    return history;
}

namespace {

double composite_loss(Classifier& model, const Tensor& x, LossKind kind, std::size_t label,
                      const Tensor* outlier, double oe_weight) {
    Tensor pred = model.forward(x);
    double loss = sample_loss(pred, label, kind);
    if (kind == LossKind::standard_oe) {
        if (!outlier) throw ConfigError("oe gradient check requires an outlier sample");
        loss += oe_weight * cross_entropy_to_uniform(model.forward(*outlier));
    }
    return loss;
}

double max_rel_error(Classifier& model, const std::vector<double>& analytic,
                     const std::function<double()>& loss_fn) {
    const double step = 1e-5;
    auto params = model.flat_params();
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double orig = params[i];
        params[i] = orig + step;
        model.set_flat_params(params);
        double up = loss_fn();
        params[i] = orig - step;
        model.set_flat_params(params);
        double down = loss_fn();
        params[i] = orig;
        double numeric = (up - down) / (2.0 * step);
        double err = std::abs(analytic[i] - numeric) / (std::abs(numeric) + 1e-8);
        worst = std::max(worst, err);
    }
    model.set_flat_params(params);
    return worst;
}

}  // namespace

double gradient_check(Classifier& model, const Tensor& x, LossKind kind, std::size_t label,
                      const Tensor* outlier, double oe_weight) {
    model.zero_grads();
    Tensor pred = model.forward(x);
    model.backward(sample_loss_grad(pred, label, kind));
    if (kind == LossKind::standard_oe) {
        if (!outlier) throw ConfigError("oe gradient check requires an outlier sample");
        Tensor opred = model.forward(*outlier);
        model.backward(scaled(cross_entropy_to_uniform_grad(opred), oe_weight));
    }
    auto analytic = model.flat_grads();
    return max_rel_error(model, analytic, [&] {
        return composite_loss(model, x, kind, label, outlier, oe_weight);
    });
}

double gradient_check_distillation(Classifier& model, const Tensor& x,
                                   const Tensor& soft_target) {
    model.zero_grads();
    Tensor pred = model.forward(x);
    model.backward(distillation_loss_grad(pred, soft_target));
    auto analytic = model.flat_grads();
    return max_rel_error(model, analytic, [&] {
        return distillation_loss(model.forward(x), soft_target);
    });
}

}  // namespace amlab
