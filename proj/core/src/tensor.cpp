#include "amlab/tensor.hpp"

#include <cmath>
#include <sstream>

namespace amlab {

bool Tensor::all_finite() const {
    for (double v : data_)
        if (!std::isfinite(v)) return false;
    return true;
}

std::string Tensor::shape_str() const {
    std::ostringstream os;
    os << "(";
    for (std::size_t i = 0; i < shape_.size(); ++i) {
        if (i) os << ",";
        os << shape_[i];
    }
    os << ")";
    return os.str();
}

void check_probability_vector(const Tensor& p) {
    if (p.rank() != 1)
        throw DimensionError("expected rank-1 probability vector, got " + p.shape_str());
    double sum = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] < -1e-9 || p[i] > 1.0 + 1e-9)
            throw std::invalid_argument("probability entry out of [0,1]");
        sum += p[i];
    }
    if (std::abs(sum - 1.0) > 1e-6)
        throw std::invalid_argument("probability vector does not sum to 1");
}

}  // namespace amlab
