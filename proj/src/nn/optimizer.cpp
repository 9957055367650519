#include "trafficast/nn/optimizer.hpp"

#include <cmath>
#include <string>

#include "trafficast/error.hpp"

namespace trafficast::nn {

void TrainConfig::validate() const {
    auto fail = [](const std::string& field, const std::string& rule) {
        throw ConfigError(field + ": " + rule);
    };
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate)) {
        fail("learning_rate", "must be a positive finite number");
    }
    if (batch_size == 0) {
        fail("batch_size", "must be at least 1");
    }
    if (!(margin >= 0.0) || !std::isfinite(margin)) {
        fail("margin", "must be >= 0");
    }
    if (!(beta1 >= 0.0 && beta1 < 1.0)) {
        fail("beta1", "must lie in [0, 1)");
    }
    if (!(beta2 >= 0.0 && beta2 < 1.0)) {
        fail("beta2", "must lie in [0, 1)");
    }
    if (!(epsilon > 0.0)) {
        fail("epsilon", "must be positive");
    }
}

Adam::Adam(std::size_t parameter_count, const TrainConfig& config)
    : lr_(config.learning_rate),
      beta1_(config.beta1),
      beta2_(config.beta2),
      epsilon_(config.epsilon),
      m_(parameter_count, 0.0),
      v_(parameter_count, 0.0) {}

void Adam::step(std::span<double> params, std::span<const double> grads) {
    if (params.size() != m_.size() || grads.size() != m_.size()) {
        throw ConfigError("optimizer: parameter and gradient sizes do not match its state");
    }
    ++t_;
    const double c1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = grads[i];
        m_[i] = beta1_ * m_[i] + (1.0 - beta1_) * g;
        v_[i] = beta2_ * v_[i] + (1.0 - beta2_) * g * g;
        const double m_hat = m_[i] / c1;
        const double v_hat = v_[i] / c2;
        params[i] -= lr_ * m_hat / (std::sqrt(v_hat) + epsilon_);
    }
}

}  // namespace trafficast::nn
