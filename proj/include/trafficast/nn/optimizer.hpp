#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace trafficast::nn {

struct TrainConfig {
    double learning_rate = 1e-3;
    std::size_t batch_size = 12;
    std::size_t epochs = 10;
    double margin = 0.2;
    std::uint64_t seed = 1;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
};

/// Adam with bias correction. State is owned by one trainer.
class Adam {
public:
    Adam() = default;
    Adam(std::size_t parameter_count, const TrainConfig& config);

    void step(std::span<double> params, std::span<const double> grads);
    [[nodiscard]] std::size_t steps_taken() const { return t_; }

private:
    double lr_ = 1e-3;
    double beta1_ = 0.9;
    double beta2_ = 0.999;
    double epsilon_ = 1e-8;
    std::size_t t_ = 0;
    std::vector<double> m_;
    std::vector<double> v_;
};

}  // namespace trafficast::nn
