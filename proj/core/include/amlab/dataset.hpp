#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "amlab/tensor.hpp"

namespace amlab {

enum class Role {
    defender_train,
    defender_test,
    outlier,
    surrogate,
    seed,
};

std::string role_name(Role r);
Role role_from_name(const std::string& name);

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Inputs plus labels plus a role tag. Surrogate/outlier labels may be
/// dummy zeros. Immutable after construction apart from whole-value moves.
class LabeledDataset {
public:
    LabeledDataset(std::vector<Tensor> inputs, std::vector<std::size_t> labels,
                   std::size_t num_classes, Role role, std::string name);

    std::size_t size() const { return inputs_.size(); }
    bool empty() const { return inputs_.empty(); }
    std::size_t num_classes() const { return num_classes_; }
    Role role() const { return role_; }
    const std::string& name() const { return name_; }

    const Tensor& input(std::size_t i) const { return inputs_[i]; }
    std::size_t label(std::size_t i) const { return labels_[i]; }
    const std::vector<Tensor>& inputs() const { return inputs_; }
    const std::vector<std::size_t>& labels() const { return labels_; }

    /// Subset by index list, keeping role and class count.
    LabeledDataset select(const std::vector<std::size_t>& indices, std::string name) const;

    /// Same data under a different role tag (e.g. carving a seed set out
    /// of an attacker-side split).
    LabeledDataset with_role(Role role, std::string name) const;

private:
    std::vector<Tensor> inputs_;
    std::vector<std::size_t> labels_;
    std::size_t num_classes_;
    Role role_;
    std::string name_;
};

/// Deterministic shuffled split into (first, second) with |first| =
/// round(fraction * n). Throws ConfigError unless 0 < fraction < 1.
std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double fraction,
                                                std::uint64_t rng_seed);

}  // namespace amlab
