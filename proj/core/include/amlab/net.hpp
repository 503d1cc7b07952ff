#pragma once

#include <cstdint>
#include <iosfwd>
#include <memory>
#include <vector>

#include "amlab/rng.hpp"
#include "amlab/tensor.hpp"

namespace amlab {

enum class LayerKind : std::uint8_t {
    dense = 0,
    relu = 1,
    conv2d_small = 2,
    flatten = 3,
    softmax_output = 4,
};

/// Architecture description for one layer. Dimension fields are
/// kind-specific:
///   dense:        d0 = inputs, d1 = outputs
///   conv2d_small: d0 = height, d1 = width, d2 = out channels, d3 = kernel
///   relu/flatten/softmax_output: no dimensions
struct LayerSpec {
    LayerKind kind = LayerKind::relu;
    std::size_t d0 = 0, d1 = 0, d2 = 0, d3 = 0;
    std::uint64_t init_seed = 0;

    static LayerSpec Dense(std::size_t in, std::size_t out) {
        return {LayerKind::dense, in, out, 0, 0, 0};
    }
    static LayerSpec Relu() { return {LayerKind::relu}; }
    static LayerSpec Conv2dSmall(std::size_t h, std::size_t w, std::size_t channels,
                                 std::size_t kernel) {
        return {LayerKind::conv2d_small, h, w, channels, kernel, 0};
    }
    static LayerSpec Flatten() { return {LayerKind::flatten}; }
    static LayerSpec SoftmaxOutput() { return {LayerKind::softmax_output}; }

    bool operator==(const LayerSpec&) const = default;
};

class Layer;

/// Feed-forward classifier over a LayerSpec stack. forward() yields a
/// probability vector of length num_classes; backward() propagates a
/// gradient w.r.t. that vector down to parameters and the input.
///
/// Layers must compose: the output size of each layer equals the input
/// size of the next, and the stack ends in softmax_output of size
/// num_classes. Violations throw DimensionError at construction.
class Classifier {
public:
    Classifier(std::vector<LayerSpec> specs, std::size_t num_classes, std::uint64_t seed);
    Classifier(const Classifier& other);
    Classifier& operator=(const Classifier& other);
    Classifier(Classifier&&) noexcept;
    Classifier& operator=(Classifier&&) noexcept;
    ~Classifier();

    std::size_t num_classes() const { return num_classes_; }
    const std::vector<LayerSpec>& specs() const { return specs_; }
    const std::vector<std::size_t>& input_shape() const { return input_shape_; }

    /// Probability vector for one input. Not const: layer activations are
    /// cached for a subsequent backward().
    Tensor forward(const Tensor& x);

    /// Backward pass from a gradient w.r.t. the output probabilities.
    /// Accumulates parameter gradients and returns the gradient w.r.t. x.
    /// Must follow a forward() on the same input.
    Tensor backward(const Tensor& grad_probs);

    void zero_grads();
    /// params -= lr * grads
    void sgd_step(double lr);

    std::size_t param_count() const;
    std::vector<double> flat_params() const;
    void set_flat_params(const std::vector<double>& values);
    std::vector<double> flat_grads() const;

    void save(std::ostream& out) const;
    void save_file(const std::string& path) const;
    static Classifier load(std::istream& in);
    static Classifier load_file(const std::string& path);

private:
    std::vector<LayerSpec> specs_;
    std::size_t num_classes_ = 0;
    std::vector<std::size_t> input_shape_;
    std::vector<std::unique_ptr<Layer>> layers_;

    void build_and_check();
    void init_params(std::uint64_t seed);
};

/// Stand-alone softmax with max-subtraction; exposed for tests.
Tensor softmax(const Tensor& logits);

}  // namespace amlab
