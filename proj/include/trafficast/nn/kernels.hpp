#pragma once

// Layer kernels in two flavours with identical signatures:
//
//   reference::  direct transcriptions of the layer formulas, serial.
//   parallel::   cache-blocked, vectorized and OpenMP-parallel over
//                independent outputs.
//
// Both flavours are deterministic: every reduction runs in a fixed order
// inside one thread, so results do not depend on the thread count. The two
// flavours agree to rounding, not bitwise.
//
// Layouts: images are [batch][channel][row][col], conv weights are
// [out][in][kernel_row][kernel_col], dense weights are [in][out] and LSTM
// weights are [in][4 * hidden] with gate blocks ordered i, f, g, o.
// Functions named *_backward_weights accumulate into their gradient
// outputs; everything else overwrites.

#include <cstddef>
#include <cstdint>
#include <span>

namespace trafficast::nn {

struct ConvDims {
    std::size_t batch = 1;
    std::size_t in_channels = 1;
    std::size_t in_h = 1;
    std::size_t in_w = 1;
    std::size_t out_channels = 1;
    std::size_t kernel_h = 1;
    std::size_t kernel_w = 1;
    std::size_t stride = 1;

    [[nodiscard]] std::size_t out_h() const { return (in_h - kernel_h) / stride + 1; }
    [[nodiscard]] std::size_t out_w() const { return (in_w - kernel_w) / stride + 1; }
};

struct PoolDims {
    std::size_t batch = 1;
    std::size_t channels = 1;
    std::size_t in_h = 1;
    std::size_t in_w = 1;
    std::size_t window_h = 1;
    std::size_t window_w = 1;
    std::size_t stride = 1;

    [[nodiscard]] std::size_t out_h() const { return (in_h - window_h) / stride + 1; }
    [[nodiscard]] std::size_t out_w() const { return (in_w - window_w) / stride + 1; }
};

struct DenseDims {
    std::size_t batch = 1;
    std::size_t in = 1;
    std::size_t out = 1;
};

struct LstmDims {
    std::size_t batch = 1;
    std::size_t input = 1;
    std::size_t hidden = 1;
};

enum class Backend { reference, parallel };

#define TRAFFICAST_KERNEL_DECLS                                                                                   \
    void conv2d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,       \
                        std::span<const double> bias, std::span<double> output);                                 \
    void conv2d_backward_weights(const ConvDims& d, std::span<const double> input,                               \
                                 std::span<const double> grad_output, std::span<double> grad_weights,            \
                                 std::span<double> grad_bias);                                                   \
    void conv2d_backward_input(const ConvDims& d, std::span<const double> weights,                               \
                               std::span<const double> grad_output, std::span<double> grad_input);               \
    void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,             \
                         std::span<std::uint32_t> argmax);                                                       \
    void maxpool_backward(const PoolDims& d, std::span<const double> grad_output,                                \
                          std::span<const std::uint32_t> argmax, std::span<double> grad_input);                  \
    void avgpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output);            \
    void avgpool_backward(const PoolDims& d, std::span<const double> grad_output, std::span<double> grad_input); \
    void dense_forward(const DenseDims& d, std::span<const double> input, std::span<const double> weights,       \
                       std::span<const double> bias, std::span<double> output);                                  \
    void dense_backward_weights(const DenseDims& d, std::span<const double> input,                               \
                                std::span<const double> grad_output, std::span<double> grad_weights,             \
                                std::span<double> grad_bias);                                                    \
    void dense_backward_input(const DenseDims& d, std::span<const double> weights,                               \
                              std::span<const double> grad_output, std::span<double> grad_input);                \
    /* One LSTM time step. gates receives the post-activation i, f, g, o. */                                    \
    void lstm_step_forward(const LstmDims& d, std::span<const double> x, std::span<const double> h_prev,         \
                           std::span<const double> c_prev, std::span<const double> wx,                           \
                           std::span<const double> wh, std::span<const double> bias, std::span<double> gates,    \
                           std::span<double> c, std::span<double> h);                                            \
    /* dh: gradient reaching h_t. dc: in = gradient from step t+1 into c_t, out = gradient into c_{t-1}. */      \
    void lstm_step_backward(const LstmDims& d, std::span<const double> x, std::span<const double> h_prev,        \
                            std::span<const double> c_prev, std::span<const double> gates,                       \
                            std::span<const double> c, std::span<const double> wx, std::span<const double> wh,   \
                            std::span<const double> dh, std::span<double> dc, std::span<double> dx,              \
                            std::span<double> dh_prev, std::span<double> dwx, std::span<double> dwh,             \
                            std::span<double> dbias);

namespace reference {
TRAFFICAST_KERNEL_DECLS
}  // namespace reference

namespace parallel {
TRAFFICAST_KERNEL_DECLS
}  // namespace parallel

#undef TRAFFICAST_KERNEL_DECLS

/// Number of OpenMP threads the parallel kernels will use (1 without OpenMP).
[[nodiscard]] int kernel_threads();
void set_kernel_threads(int threads);

}  // namespace trafficast::nn
