#pragma once

#include <span>
#include <vector>

#include "trafficast/nn/tensor.hpp"

namespace trafficast::nn {

/// v / |v|. Throws DataError for a zero vector.
[[nodiscard]] std::vector<double> l2_normalize(std::span<const double> v);

[[nodiscard]] double squared_distance(std::span<const double> a, std::span<const double> b);

/// max(0, |a - p|^2 - |a - n|^2 + margin) for unit-norm embeddings.
/// Throws DataError when an input is not unit norm (tolerance 1e-6).
[[nodiscard]] double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                                  std::span<const double> negative, double margin);

struct TripletBatchLoss {
    double loss = 0.0;
    /// Fraction of triplets with a positive hinge.
    double active_fraction = 0.0;
};

/// Mean hinged loss over a batch of embeddings {N, D} and the gradients of
/// that mean with respect to each of the three inputs. No norm check, so it
/// is usable inside gradient checks.
TripletBatchLoss triplet_loss_batch(const Tensor& anchor, const Tensor& positive, const Tensor& negative,
                                    double margin, Tensor* grad_anchor, Tensor* grad_positive,
                                    Tensor* grad_negative);

/// Mean squared error over all elements; fills grad with d(loss)/d(pred).
double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad);

}  // namespace trafficast::nn
