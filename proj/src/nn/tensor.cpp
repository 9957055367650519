#include "trafficast/nn/tensor.hpp"

#include <cmath>
#include <functional>
#include <numeric>

#include "trafficast/error.hpp"

namespace trafficast::nn {

std::size_t element_count(const Shape& shape) {
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string to_string(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        s += (i ? "x" : "") + std::to_string(shape[i]);
    }
    return s + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(element_count(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> data) : shape_(std::move(shape)), data_(std::move(data)) {
    if (data_.size() != element_count(shape_)) {
        throw ConfigError("tensor data does not match shape " + to_string(shape_));
    }
}

std::span<double> Tensor::sample(std::size_t i) {
    const std::size_t stride = shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<double>(data_).subspan(i * stride, stride);
}

std::span<const double> Tensor::sample(std::size_t i) const {
    const std::size_t stride = shape_.empty() || shape_[0] == 0 ? 0 : data_.size() / shape_[0];
    return std::span<const double>(data_).subspan(i * stride, stride);
}

void Tensor::reshape(Shape shape) {
    if (element_count(shape) != data_.size()) {
        throw ConfigError("cannot reshape " + to_string(shape_) + " to " + to_string(shape));
    }
    shape_ = std::move(shape);
}

bool Tensor::all_finite() const {
    for (const double v : data_) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

}  // namespace trafficast::nn
