#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace trafficast::nn {

using Shape = std::vector<std::size_t>;

[[nodiscard]] std::size_t element_count(const Shape& shape);
[[nodiscard]] std::string to_string(const Shape& shape);

/// Dense row-major array of doubles.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> data);

    [[nodiscard]] const Shape& shape() const { return shape_; }
    [[nodiscard]] std::size_t rank() const { return shape_.size(); }
    [[nodiscard]] std::size_t extent(std::size_t axis) const { return shape_.at(axis); }
    [[nodiscard]] std::size_t size() const { return data_.size(); }
    [[nodiscard]] bool empty() const { return data_.empty(); }

    [[nodiscard]] std::span<double> data() { return data_; }
    [[nodiscard]] std::span<const double> data() const { return data_; }
    [[nodiscard]] double& operator[](std::size_t i) { return data_[i]; }
    [[nodiscard]] double operator[](std::size_t i) const { return data_[i]; }

    /// Slice along the leading axis.
    [[nodiscard]] std::span<double> sample(std::size_t i);
    [[nodiscard]] std::span<const double> sample(std::size_t i) const;

    /// Changes the shape; the element count must not change.
    void reshape(Shape shape);
    [[nodiscard]] bool all_finite() const;

private:
    Shape shape_;
    std::vector<double> data_;
};

}  // namespace trafficast::nn
