#include "amlab/dataset.hpp"

#include <cmath>

#include "amlab/rng.hpp"

namespace amlab {

std::string role_name(Role r) {
    switch (r) {
        case Role::defender_train: return "defender-train";
        case Role::defender_test: return "defender-test";
        case Role::outlier: return "outlier";
        case Role::surrogate: return "surrogate";
        case Role::seed: return "seed";
    }
    return "?";
}

Role role_from_name(const std::string& name) {
    if (name == "defender-train") return Role::defender_train;
    if (name == "defender-test") return Role::defender_test;
    if (name == "outlier") return Role::outlier;
    if (name == "surrogate") return Role::surrogate;
    if (name == "seed") return Role::seed;
    throw ConfigError("unknown dataset role: " + name);
}

LabeledDataset::LabeledDataset(std::vector<Tensor> inputs, std::vector<std::size_t> labels,
                               std::size_t num_classes, Role role, std::string name)
    : inputs_(std::move(inputs)), labels_(std::move(labels)), num_classes_(num_classes),
      role_(role), name_(std::move(name)) {
    if (inputs_.size() != labels_.size())
        throw ConfigError("dataset '" + name_ + "': inputs/labels length mismatch");
    for (std::size_t l : labels_)
        if (l >= num_classes_)
            throw ConfigError("dataset '" + name_ + "': label out of range");
    for (std::size_t i = 1; i < inputs_.size(); ++i)
        if (!inputs_[i].same_shape(inputs_[0]))
            throw ConfigError("dataset '" + name_ + "': inconsistent input shapes");
}

LabeledDataset LabeledDataset::select(const std::vector<std::size_t>& indices,
                                      std::string name) const {
    std::vector<Tensor> ins;
    std::vector<std::size_t> labs;
    ins.reserve(indices.size());
    labs.reserve(indices.size());
    for (std::size_t i : indices) {
        ins.push_back(inputs_[i]);
        labs.push_back(labels_[i]);
    }
    return LabeledDataset(std::move(ins), std::move(labs), num_classes_, role_, std::move(name));
}

LabeledDataset LabeledDataset::with_role(Role role, std::string name) const {
    return LabeledDataset(inputs_, labels_, num_classes_, role, std::move(name));
}

std::pair<LabeledDataset, LabeledDataset> split(const LabeledDataset& dataset, double fraction,
                                                std::uint64_t rng_seed) {
    if (!(fraction > 0.0 && fraction < 1.0))
        throw ConfigError("split fraction must lie in (0,1)");
    Rng rng(rng_seed);
    auto perm = rng.permutation(dataset.size());
    auto n_first = static_cast<std::size_t>(
        std::llround(fraction * static_cast<double>(dataset.size())));
    std::vector<std::size_t> first(perm.begin(), perm.begin() + n_first);
    std::vector<std::size_t> second(perm.begin() + n_first, perm.end());
    return {dataset.select(first, dataset.name() + "/a"),
            dataset.select(second, dataset.name() + "/b")};
}

}  // namespace amlab
