#include "trafficast/nn/layers.hpp"

#include <cmath>

#include "trafficast/error.hpp"

namespace trafficast::nn {

std::string to_string(LayerKind kind) {
    switch (kind) {
        case LayerKind::conv: return "conv";
        case LayerKind::maxpool: return "maxpool";
        case LayerKind::avgpool: return "avgpool";
        case LayerKind::dense: return "dense";
        case LayerKind::activation: return "activation";
        case LayerKind::l2norm: return "l2norm";
        case LayerKind::lstm: return "lstm";
    }
    return "unknown";
}

std::string to_string(Activation act) {
    switch (act) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        case Activation::sigmoid: return "sigmoid";
    }
    return "unknown";
}

LayerSpec LayerSpec::conv(std::size_t kernels, std::size_t kernel_h, std::size_t kernel_w, std::size_t stride,
                          Activation act) {
    return {LayerKind::conv, kernels, kernel_h, kernel_w, stride, act, false};
}

LayerSpec LayerSpec::maxpool(std::size_t window_h, std::size_t window_w, std::size_t stride) {
    return {LayerKind::maxpool, 0, window_h, window_w, stride, Activation::identity, false};
}

LayerSpec LayerSpec::avgpool(std::size_t window_h, std::size_t window_w, std::size_t stride) {
    return {LayerKind::avgpool, 0, window_h, window_w, stride, Activation::identity, false};
}

LayerSpec LayerSpec::dense(std::size_t units, Activation act) {
    return {LayerKind::dense, units, 0, 0, 1, act, false};
}

LayerSpec LayerSpec::activation_layer(Activation act) {
    return {LayerKind::activation, 0, 0, 0, 1, act, false};
}

LayerSpec LayerSpec::l2norm() { return {LayerKind::l2norm, 0, 0, 0, 1, Activation::identity, false}; }

LayerSpec LayerSpec::lstm(std::size_t hidden, bool return_sequences) {
    return {LayerKind::lstm, hidden, 0, 0, 1, Activation::identity, return_sequences};
}

namespace {

std::size_t sliding_extent(std::size_t in, std::size_t kernel, std::size_t stride, const char* axis) {
    if (kernel == 0 || stride == 0 || kernel > in) {
        throw ConfigError(std::string("window of ") + std::to_string(kernel) + " with stride " +
                          std::to_string(stride) + " does not fit " + axis + " extent " + std::to_string(in));
    }
    return (in - kernel) / stride + 1;
}

void require_rank(const Shape& input, std::size_t rank, const LayerSpec& spec) {
    if (input.size() != rank || element_count(input) == 0) {
        throw ConfigError(to_string(spec.kind) + " layer expects a rank-" + std::to_string(rank) + " input, got " +
                          to_string(input));
    }
}

}  // namespace

Shape output_shape(const LayerSpec& spec, const Shape& input) {
    switch (spec.kind) {
        case LayerKind::conv:
            require_rank(input, 3, spec);
            if (spec.units == 0) {
                throw ConfigError("conv layer needs at least one kernel");
            }
            return {spec.units, sliding_extent(input[1], spec.kernel_h, spec.stride, "row"),
                    sliding_extent(input[2], spec.kernel_w, spec.stride, "column")};
        case LayerKind::maxpool:
        case LayerKind::avgpool:
            require_rank(input, 3, spec);
            return {input[0], sliding_extent(input[1], spec.kernel_h, spec.stride, "row"),
                    sliding_extent(input[2], spec.kernel_w, spec.stride, "column")};
        case LayerKind::dense:
            if (spec.units == 0 || element_count(input) == 0 || input.empty()) {
                throw ConfigError("dense layer needs units >= 1 and a non-empty input");
            }
            return {spec.units};
        case LayerKind::activation:
            return input;
        case LayerKind::l2norm:
            require_rank(input, 1, spec);
            return input;
        case LayerKind::lstm:
            require_rank(input, 2, spec);
            if (spec.units == 0) {
                throw ConfigError("lstm layer needs a hidden size >= 1");
            }
            if (spec.return_sequences) {
                return {input[0], spec.units};
            }
            return {spec.units};
    }
    throw ConfigError("unknown layer kind");
}

std::size_t param_count(const LayerSpec& spec, const Shape& input) {
    (void)output_shape(spec, input);
    switch (spec.kind) {
        case LayerKind::conv:
            return spec.kernel_w * spec.kernel_h * input[0] * spec.units + spec.units;
        case LayerKind::dense:
            return element_count(input) * spec.units + spec.units;
        case LayerKind::lstm:
            return 4 * spec.units * (input[1] + spec.units + 1);
        default:
            return 0;
    }
}

double activate(Activation act, double z) {
    switch (act) {
        case Activation::identity: return z;
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::tanh: return std::tanh(z);
        case Activation::sigmoid: return 1.0 / (1.0 + std::exp(-z));
    }
    return z;
}

double activation_slope(Activation act, double y) {
    switch (act) {
        case Activation::identity: return 1.0;
        case Activation::relu: return y > 0.0 ? 1.0 : 0.0;
        case Activation::tanh: return 1.0 - y * y;
        case Activation::sigmoid: return y * (1.0 - y);
    }
    return 1.0;
}

}  // namespace trafficast::nn
