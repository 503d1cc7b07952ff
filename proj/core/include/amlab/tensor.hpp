#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace amlab {

/// Dense n-dimensional array, row-major. Carries activations, parameters
/// and gradients throughout the library.
class Tensor {
public:
    Tensor() = default;

    explicit Tensor(std::vector<std::size_t> shape)
        : shape_(std::move(shape)), data_(count(shape_), 0.0) {}

    Tensor(std::vector<std::size_t> shape, std::vector<double> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (count(shape_) != data_.size())
            throw std::invalid_argument("Tensor: shape/data size mismatch");
    }

    static Tensor vector1d(std::vector<double> data) {
        std::size_t n = data.size();
        return Tensor({n}, std::move(data));
    }

    const std::vector<std::size_t>& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    std::size_t rank() const { return shape_.size(); }

    double* data() { return data_.data(); }
    const double* data() const { return data_.data(); }
    std::vector<double>& flat() { return data_; }
    const std::vector<double>& flat() const { return data_; }

    double& operator[](std::size_t i) { return data_[i]; }
    double operator[](std::size_t i) const { return data_[i]; }

    bool same_shape(const Tensor& other) const { return shape_ == other.shape_; }

    /// True when every entry is finite (no NaN/Inf).
    bool all_finite() const;

    std::string shape_str() const;

    static std::size_t count(const std::vector<std::size_t>& shape) {
        std::size_t n = 1;
        for (auto d : shape) n *= d;
        return n;
    }

private:
    std::vector<std::size_t> shape_;
    std::vector<double> data_;
};

/// Raised when tensor shapes do not compose.
class DimensionError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

void check_probability_vector(const Tensor& p);

}  // namespace amlab
