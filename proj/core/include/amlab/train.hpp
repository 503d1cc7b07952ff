#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "amlab/dataset.hpp"
#include "amlab/losses.hpp"
#include "amlab/net.hpp"

namespace amlab {

struct TrainConfig {
    double learning_rate = 0.1;
    std::size_t epochs = 30;
    std::size_t batch_size = 16;
    double oe_weight = 0.5;  // weight of the outlier-exposure term
    std::uint64_t rng_seed = 1;

    void validate() const;
};

/// Minibatch SGD over the dataset. Returns mean training loss per epoch.
/// loss_kind standard_oe requires an outlier set; its term pushes outlier
/// predictions toward uniform. Training order is a deterministic function
/// of cfg.rng_seed. Refuses datasets tagged defender-test.
std::vector<double> train(Classifier& model, const LabeledDataset& data,
                          const LabeledDataset* outliers, const TrainConfig& cfg,
                          LossKind loss_kind);

/// Max over parameters of |analytic - numeric| / (|numeric| + 1e-8) with
/// central finite differences. Intended for small nets (<= ~5k params).
double gradient_check(Classifier& model, const Tensor& x, LossKind kind, std::size_t label,
                      const Tensor* outlier = nullptr, double oe_weight = 0.5);

/// Same check for the distillation loss against a soft target.
double gradient_check_distillation(Classifier& model, const Tensor& x,
                                   const Tensor& soft_target);

}  // namespace amlab
