#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "trafficast/nn/kernels.hpp"
#include "trafficast/nn/layers.hpp"
#include "trafficast/nn/tensor.hpp"
#include "trafficast/rng.hpp"

namespace trafficast::nn {

/// Per-layer values kept from a forward pass for the backward pass.
struct LayerState {
    Tensor output;
    std::vector<std::uint32_t> argmax;
    /// lstm: time-major gate activations {T, N, 4H}, cells and hidden
    /// states {T + 1, N, H} (index 0 is the zero initial state).
    /// l2norm: per-sample norms {N}.
    Tensor gates;
    Tensor cells;
    Tensor hidden;
};

struct Trace {
    Tensor input;
    std::vector<LayerState> layers;
};

/// Sequential stack of layers over one contiguous parameter vector.
///
/// Layers are stateless descriptors; all learnable values live in
/// parameters() in layer order (conv: weights then bias; dense: [in][out]
/// weights then bias; lstm: input weights, recurrent weights, bias).
class Network {
public:
    Network() = default;
    Network(Shape input_shape, std::vector<LayerSpec> layers);

    [[nodiscard]] const Shape& input_shape() const { return input_shape_; }
    [[nodiscard]] const Shape& output_shape() const { return shapes_.back(); }
    [[nodiscard]] const std::vector<LayerSpec>& layers() const { return layers_; }
    /// Input shape of layer i (i == layers().size() gives the output shape).
    [[nodiscard]] const Shape& shape_before(std::size_t i) const { return shapes_.at(i); }
    [[nodiscard]] std::size_t parameter_count() const { return params_.size(); }
    [[nodiscard]] std::span<const double> layer_parameters(std::size_t i) const;
    [[nodiscard]] std::span<double> parameters() { return params_; }
    [[nodiscard]] std::span<const double> parameters() const { return params_; }

    void set_backend(Backend backend) { backend_ = backend; }
    [[nodiscard]] Backend backend() const { return backend_; }

    /// He-uniform (relu) or Glorot-uniform weights, zero biases; LSTM
    /// weights uniform in +-1/sqrt(hidden) with forget-gate bias 1.
    void initialize(Rng& rng);

    /// Batch forward. `batch` has shape {N, input_shape...}.
    [[nodiscard]] Tensor forward(const Tensor& batch) const;
    [[nodiscard]] Tensor forward(const Tensor& batch, Trace& trace) const;

    /// Reverse pass. Parameter gradients are added into `grad_params`
    /// (same layout as parameters()). Returns the input gradient when
    /// requested, otherwise an empty tensor.
    Tensor backward(const Trace& trace, const Tensor& grad_output, std::span<double> grad_params,
                    bool want_input_grad = false) const;

private:
    Shape input_shape_;
    std::vector<LayerSpec> layers_;
    std::vector<Shape> shapes_;
    std::vector<std::size_t> offsets_;
    std::vector<double> params_;
    Backend backend_ = Backend::parallel;
};

/// Conv(16 5x5 relu) - MaxPool(2x2/2) - Conv(32 5x5 relu) - MaxPool(2x2/2)
/// - Dense(256 relu) - Dense(dim) - L2 normalize, on a 1 x R x R image.
[[nodiscard]] Network make_embedder(std::size_t resolution, std::size_t embedding_dim = 32);

/// LSTM(1->50, sequence) - LSTM(50->25) - Dense(200 relu) - Dense(1).
[[nodiscard]] Network make_predictor(std::size_t steps);

}  // namespace trafficast::nn
