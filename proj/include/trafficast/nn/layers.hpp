#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

#include "trafficast/nn/tensor.hpp"

namespace trafficast::nn {

enum class LayerKind : std::uint32_t { conv = 1, maxpool = 2, avgpool = 3, dense = 4, activation = 5, l2norm = 6, lstm = 7 };

enum class Activation : std::uint32_t { identity = 0, relu = 1, tanh = 2, sigmoid = 3 };

[[nodiscard]] std::string to_string(LayerKind kind);
[[nodiscard]] std::string to_string(Activation act);

/// Static description of one layer. Shapes are per sample, without the
/// batch axis: images are {channels, rows, cols}, sequences {steps, features}.
struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    /// Output channels (conv), output width (dense) or hidden size (lstm).
    std::size_t units = 0;
    std::size_t kernel_h = 0;
    std::size_t kernel_w = 0;
    std::size_t stride = 1;
    Activation activation = Activation::identity;
    /// lstm only: emit every hidden state instead of just the last one.
    bool return_sequences = false;

    static LayerSpec conv(std::size_t kernels, std::size_t kernel_h, std::size_t kernel_w, std::size_t stride,
                          Activation act);
    static LayerSpec maxpool(std::size_t window_h, std::size_t window_w, std::size_t stride);
    static LayerSpec avgpool(std::size_t window_h, std::size_t window_w, std::size_t stride);
    static LayerSpec dense(std::size_t units, Activation act);
    static LayerSpec activation_layer(Activation act);
    static LayerSpec l2norm();
    static LayerSpec lstm(std::size_t hidden, bool return_sequences);

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Output shape for a given input shape. Convolution and pooling follow
/// out = floor((in - kernel) / stride) + 1 per spatial axis; throws
/// ConfigError when the kernel does not fit or the input rank is wrong.
[[nodiscard]] Shape output_shape(const LayerSpec& spec, const Shape& input);

/// Learnable parameters. For convolution: kernel_h * kernel_w * depth *
/// kernels + kernels.
[[nodiscard]] std::size_t param_count(const LayerSpec& spec, const Shape& input);

[[nodiscard]] double activate(Activation act, double z);
/// Derivative expressed through the activation output y = activate(z).
[[nodiscard]] double activation_slope(Activation act, double y);

}  // namespace trafficast::nn
