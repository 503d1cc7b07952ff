#pragma once

#include <cstdint>
#include <vector>

#include "amlab/dataset.hpp"

namespace amlab {

/// Gaussian-mixture classification task: one cluster per class.
struct SyntheticTaskSpec {
    std::size_t num_classes = 4;
    std::size_t input_dim = 2;
    std::vector<std::vector<double>> cluster_centers;  // one per class
    double cluster_std = 0.5;
    std::size_t samples_per_class = 150;
    std::uint64_t rng_seed = 1;

    void validate() const;

    /// 4 well-separated clusters at the corners of a square; a dense net
    /// trains to ~100% on it.
    static SyntheticTaskSpec separable_preset(std::uint64_t seed = 1);
};

LabeledDataset generate_synthetic(const SyntheticTaskSpec& spec, Role role = Role::defender_train,
                                  std::string name = "synthetic");

/// Attacker-side surrogate: defender clusters moved by `shift` and widened
/// by `scale` (std multiplied). shift=0, scale=1 reproduces the defender's
/// distribution. Labels are dummy zeros.
LabeledDataset generate_surrogate(const SyntheticTaskSpec& spec, const std::vector<double>& shift,
                                  double scale, std::string name = "surrogate");

/// Outlier set for outlier-exposure training: clusters rotated onto the
/// axis midpoints, distinct from both defender data and the surrogate
/// preset. Only meaningful for the 2-d presets.
LabeledDataset generate_outliers(const SyntheticTaskSpec& spec, std::string name = "outliers");

}  // namespace amlab
