#include "amlab/synthetic.hpp"

#include <cmath>

#include "amlab/rng.hpp"

namespace amlab {

void SyntheticTaskSpec::validate() const {
    if (num_classes < 2) throw ConfigError("synthetic task needs >= 2 classes");
    if (cluster_centers.size() != num_classes)
        throw ConfigError("synthetic task needs one center per class");
    for (const auto& c : cluster_centers)
        if (c.size() != input_dim) throw ConfigError("center dimension mismatch");
    if (cluster_std < 0.0) throw ConfigError("cluster_std must be >= 0");
    if (samples_per_class < 1) throw ConfigError("samples_per_class must be >= 1");
}

SyntheticTaskSpec SyntheticTaskSpec::separable_preset(std::uint64_t seed) {
    SyntheticTaskSpec spec;
    spec.num_classes = 4;
    spec.input_dim = 2;
    spec.cluster_centers = {{3, 3}, {3, -3}, {-3, 3}, {-3, -3}};
    spec.cluster_std = 0.5;
    spec.samples_per_class = 150;
    spec.rng_seed = seed;
    return spec;
}

namespace {

LabeledDataset sample_mixture(const SyntheticTaskSpec& spec,
                              const std::vector<std::vector<double>>& centers, double stddev,
                              bool dummy_labels, Role role, std::string name) {
    Rng rng(spec.rng_seed);
    std::vector<Tensor> inputs;
    std::vector<std::size_t> labels;
    inputs.reserve(centers.size() * spec.samples_per_class);
    for (std::size_t cls = 0; cls < centers.size(); ++cls) {
        for (std::size_t s = 0; s < spec.samples_per_class; ++s) {
            std::vector<double> point(spec.input_dim);
            for (std::size_t d = 0; d < spec.input_dim; ++d)
                point[d] = centers[cls][d] + rng.gaussian(0.0, stddev);
            inputs.push_back(Tensor::vector1d(std::move(point)));
            labels.push_back(dummy_labels ? 0 : cls);
        }
    }
    return LabeledDataset(std::move(inputs), std::move(labels), spec.num_classes, role,
                          std::move(name));
}

}  // namespace

LabeledDataset generate_synthetic(const SyntheticTaskSpec& spec, Role role, std::string name) {
    spec.validate();
    return sample_mixture(spec, spec.cluster_centers, spec.cluster_std, false, role,
                          std::move(name));
}

LabeledDataset generate_surrogate(const SyntheticTaskSpec& spec, const std::vector<double>& shift,
                                  double scale, std::string name) {
    spec.validate();
    if (shift.size() != spec.input_dim) throw ConfigError("surrogate shift dimension mismatch");
    auto centers = spec.cluster_centers;
    for (auto& c : centers)
        for (std::size_t d = 0; d < c.size(); ++d) c[d] += shift[d];
    return sample_mixture(spec, centers, spec.cluster_std * scale, true, Role::surrogate,
                          std::move(name));
}

LabeledDataset generate_outliers(const SyntheticTaskSpec& spec, std::string name) {
    spec.validate();
    if (spec.input_dim != 2) throw ConfigError("outlier preset defined for 2-d tasks only");
    // Mean radius of the defender centers, rotated 45 degrees outward.
    double radius = 0.0;
    for (const auto& c : spec.cluster_centers)
        radius += std::hypot(c[0], c[1]);
    radius = radius / static_cast<double>(spec.cluster_centers.size()) * 1.2;
    std::vector<std::vector<double>> centers = {
        {radius, 0.0}, {0.0, radius}, {-radius, 0.0}, {0.0, -radius}};
    auto outlier_spec = spec;
    outlier_spec.rng_seed = spec.rng_seed + 0x5eedULL;
    return sample_mixture(outlier_spec, centers, spec.cluster_std * 2.0, true, Role::outlier,
                          std::move(name));
}

}  // namespace amlab
