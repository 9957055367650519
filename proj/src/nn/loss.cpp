#include "trafficast/nn/loss.hpp"

#include <algorithm>
#include <cmath>

#include "trafficast/error.hpp"

namespace trafficast::nn {

namespace {

void check_unit(std::span<const double> v, const char* name) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    if (std::abs(std::sqrt(sq) - 1.0) > 1e-6) {
        throw DataError(std::string("triplet loss: ") + name + " embedding is not unit norm");
    }
}

}  // namespace

std::vector<double> l2_normalize(std::span<const double> v) {
    double sq = 0.0;
    for (double x : v) {
        sq += x * x;
    }
    const double norm = std::sqrt(sq);
    if (!(norm > 0.0)) {
        throw DataError("cannot L2-normalize a zero vector");
    }
    std::vector<double> out(v.begin(), v.end());
    for (auto& x : out) {
        x /= norm;
    }
    return out;
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    if (a.size() != b.size()) {
        throw ConfigError("squared_distance: length mismatch");
    }
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

double triplet_loss(std::span<const double> anchor, std::span<const double> positive,
                    std::span<const double> negative, double margin) {
    if (anchor.size() != positive.size() || anchor.size() != negative.size()) {
        throw ConfigError("triplet loss: embedding lengths differ");
    }
    check_unit(anchor, "anchor");
    check_unit(positive, "positive");
    check_unit(negative, "negative");
    return std::max(0.0, squared_distance(anchor, positive) - squared_distance(anchor, negative) + margin);
}

TripletBatchLoss triplet_loss_batch(const Tensor& anchor, const Tensor& positive, const Tensor& negative,
                                    double margin, Tensor* grad_anchor, Tensor* grad_positive,
                                    Tensor* grad_negative) {
    if (anchor.shape() != positive.shape() || anchor.shape() != negative.shape() || anchor.rank() != 2) {
        throw ConfigError("triplet loss: batches must share a {N, D} shape");
    }
    const std::size_t n = anchor.extent(0);
    const std::size_t dim = anchor.extent(1);
    for (Tensor* g : {grad_anchor, grad_positive, grad_negative}) {
        if (g != nullptr) {
            *g = Tensor(anchor.shape());
        }
    }
    TripletBatchLoss result;
    std::size_t active = 0;
    const double scale = 1.0 / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        const auto a = anchor.sample(s);
        const auto p = positive.sample(s);
        const auto q = negative.sample(s);
        const double hinge = squared_distance(a, p) - squared_distance(a, q) + margin;
        if (hinge <= 0.0) {
            continue;
        }
        ++active;
        result.loss += hinge;
        for (std::size_t i = 0; i < dim; ++i) {
            if (grad_anchor != nullptr) {
                grad_anchor->sample(s)[i] = 2.0 * scale * (q[i] - p[i]);
            }
            if (grad_positive != nullptr) {
                grad_positive->sample(s)[i] = 2.0 * scale * (p[i] - a[i]);
            }
            if (grad_negative != nullptr) {
                grad_negative->sample(s)[i] = 2.0 * scale * (a[i] - q[i]);
            }
        }
    }
    result.loss *= scale;
    result.active_fraction = static_cast<double>(active) * scale;
    return result;
}

double mse_loss(const Tensor& pred, const Tensor& target, Tensor* grad) {
    if (pred.size() != target.size() || pred.empty()) {
        throw ConfigError("mse: prediction and target sizes differ");
    }
    const double scale = 1.0 / static_cast<double>(pred.size());
    if (grad != nullptr) {
        *grad = Tensor(pred.shape());
    }
    double loss = 0.0;
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        loss += d * d;
        if (grad != nullptr) {
            (*grad)[i] = 2.0 * scale * d;
        }
    }
    return loss * scale;
}

}  // namespace trafficast::nn
