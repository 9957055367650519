#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "trafficast/nn/kernels.hpp"

namespace trafficast::nn::reference {

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

void conv2d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t k = 0; k < d.out_channels; ++k) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    double sum = bias[k];
                    for (std::size_t c = 0; c < d.in_channels; ++c) {
                        for (std::size_t ky = 0; ky < d.kernel_h; ++ky) {
                            for (std::size_t kx = 0; kx < d.kernel_w; ++kx) {
                                const std::size_t iy = y * d.stride + ky;
                                const std::size_t ix = x * d.stride + kx;
                                sum += weights[((k * d.in_channels + c) * d.kernel_h + ky) * d.kernel_w + kx] *
                                       input[((n * d.in_channels + c) * d.in_h + iy) * d.in_w + ix];
                            }
                        }
                    }
                    output[((n * d.out_channels + k) * oh + y) * ow + x] = sum;
                }
            }
        }
    }
}

void conv2d_backward_weights(const ConvDims& d, std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t k = 0; k < d.out_channels; ++k) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    const double g = grad_output[((n * d.out_channels + k) * oh + y) * ow + x];
                    grad_bias[k] += g;
                    for (std::size_t c = 0; c < d.in_channels; ++c) {
                        for (std::size_t ky = 0; ky < d.kernel_h; ++ky) {
                            for (std::size_t kx = 0; kx < d.kernel_w; ++kx) {
                                const std::size_t iy = y * d.stride + ky;
                                const std::size_t ix = x * d.stride + kx;
                                grad_weights[((k * d.in_channels + c) * d.kernel_h + ky) * d.kernel_w + kx] +=
                                    g * input[((n * d.in_channels + c) * d.in_h + iy) * d.in_w + ix];
                            }
                        }
                    }
                }
            }
        }
    }
}

void conv2d_backward_input(const ConvDims& d, std::span<const double> weights, std::span<const double> grad_output,
                           std::span<double> grad_input) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t k = 0; k < d.out_channels; ++k) {
            for (std::size_t y = 0; y < oh; ++y) {
                for (std::size_t x = 0; x < ow; ++x) {
                    const double g = grad_output[((n * d.out_channels + k) * oh + y) * ow + x];
                    for (std::size_t c = 0; c < d.in_channels; ++c) {
                        for (std::size_t ky = 0; ky < d.kernel_h; ++ky) {
                            for (std::size_t kx = 0; kx < d.kernel_w; ++kx) {
                                const std::size_t iy = y * d.stride + ky;
                                const std::size_t ix = x * d.stride + kx;
                                grad_input[((n * d.in_channels + c) * d.in_h + iy) * d.in_w + ix] +=
                                    g * weights[((k * d.in_channels + c) * d.kernel_h + ky) * d.kernel_w + kx];
                            }
                        }
                    }
                }
            }
        }
    }
}

void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::uint32_t> argmax) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    for (std::size_t plane = 0; plane < d.batch * d.channels; ++plane) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double best = -std::numeric_limits<double>::infinity();
                std::size_t where = 0;
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        const std::size_t idx = (y * d.stride + wy) * d.in_w + x * d.stride + wx;
                        const double v = input[plane * d.in_h * d.in_w + idx];
                        if (v > best || (wy == 0 && wx == 0)) {
                            best = v;
                            where = idx;
                        }
                    }
                }
                output[(plane * oh + y) * ow + x] = best;
                argmax[(plane * oh + y) * ow + x] = static_cast<std::uint32_t>(where);
            }
        }
    }
}

void maxpool_backward(const PoolDims& d, std::span<const double> grad_output, std::span<const std::uint32_t> argmax,
                      std::span<double> grad_input) {
    const std::size_t outs = d.out_h() * d.out_w();
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t plane = 0; plane < d.batch * d.channels; ++plane) {
        for (std::size_t o = 0; o < outs; ++o) {
            grad_input[plane * d.in_h * d.in_w + argmax[plane * outs + o]] += grad_output[plane * outs + o];
        }
    }
}

void avgpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const double area = static_cast<double>(d.window_h * d.window_w);
    for (std::size_t plane = 0; plane < d.batch * d.channels; ++plane) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double sum = 0.0;
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        sum += input[(plane * d.in_h + y * d.stride + wy) * d.in_w + x * d.stride + wx];
                    }
                }
                output[(plane * oh + y) * ow + x] = sum / area;
            }
        }
    }
}

void avgpool_backward(const PoolDims& d, std::span<const double> grad_output, std::span<double> grad_input) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const double area = static_cast<double>(d.window_h * d.window_w);
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t plane = 0; plane < d.batch * d.channels; ++plane) {
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = grad_output[(plane * oh + y) * ow + x] / area;
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        grad_input[(plane * d.in_h + y * d.stride + wy) * d.in_w + x * d.stride + wx] += g;
                    }
                }
            }
        }
    }
}

void dense_forward(const DenseDims& d, std::span<const double> input, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> output) {
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t j = 0; j < d.out; ++j) {
            double sum = bias[j];
            for (std::size_t i = 0; i < d.in; ++i) {
                sum += input[n * d.in + i] * weights[i * d.out + j];
            }
            output[n * d.out + j] = sum;
        }
    }
}

void dense_backward_weights(const DenseDims& d, std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_weights, std::span<double> grad_bias) {
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t j = 0; j < d.out; ++j) {
            const double g = grad_output[n * d.out + j];
            grad_bias[j] += g;
            for (std::size_t i = 0; i < d.in; ++i) {
                grad_weights[i * d.out + j] += input[n * d.in + i] * g;
            }
        }
    }
}

void dense_backward_input(const DenseDims& d, std::span<const double> weights, std::span<const double> grad_output,
                          std::span<double> grad_input) {
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t i = 0; i < d.in; ++i) {
            double sum = 0.0;
            for (std::size_t j = 0; j < d.out; ++j) {
                sum += weights[i * d.out + j] * grad_output[n * d.out + j];
            }
            grad_input[n * d.in + i] = sum;
        }
    }
}

void lstm_step_forward(const LstmDims& d, std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, std::span<const double> wx, std::span<const double> wh,
                       std::span<const double> bias, std::span<double> gates, std::span<double> c,
                       std::span<double> h) {
    const std::size_t H = d.hidden;
    const std::size_t G = 4 * H;
    for (std::size_t n = 0; n < d.batch; ++n) {
        for (std::size_t u = 0; u < H; ++u) {
            double z[4];
            for (std::size_t gate = 0; gate < 4; ++gate) {
                const std::size_t col = gate * H + u;
                double sum = bias[col];
                for (std::size_t f = 0; f < d.input; ++f) {
                    sum += x[n * d.input + f] * wx[f * G + col];
                }
                for (std::size_t v = 0; v < H; ++v) {
                    sum += h_prev[n * H + v] * wh[v * G + col];
                }
                z[gate] = sum;
            }
            const double i = sigmoid(z[0]);
            const double f = sigmoid(z[1]);
            const double g = std::tanh(z[2]);
            const double o = sigmoid(z[3]);
            const double cell = f * c_prev[n * H + u] + i * g;
            gates[n * G + u] = i;
            gates[n * G + H + u] = f;
            gates[n * G + 2 * H + u] = g;
            gates[n * G + 3 * H + u] = o;
            c[n * H + u] = cell;
            h[n * H + u] = o * std::tanh(cell);
        }
    }
}

void lstm_step_backward(const LstmDims& d, std::span<const double> x, std::span<const double> h_prev,
                        std::span<const double> c_prev, std::span<const double> gates, std::span<const double> c,
                        std::span<const double> wx, std::span<const double> wh, std::span<const double> dh,
                        std::span<double> dc, std::span<double> dx, std::span<double> dh_prev,
                        std::span<double> dwx, std::span<double> dwh, std::span<double> dbias) {
    const std::size_t H = d.hidden;
    const std::size_t G = 4 * H;
    for (std::size_t n = 0; n < d.batch; ++n) {
        std::vector<double> dzp(G);
        for (std::size_t u = 0; u < H; ++u) {
            const double i = gates[n * G + u];
            const double f = gates[n * G + H + u];
            const double g = gates[n * G + 2 * H + u];
            const double o = gates[n * G + 3 * H + u];
            const double tc = std::tanh(c[n * H + u]);
            const double dcell = dc[n * H + u] + dh[n * H + u] * o * (1.0 - tc * tc);
            dzp[u] = dcell * g * i * (1.0 - i);
            dzp[H + u] = dcell * c_prev[n * H + u] * f * (1.0 - f);
            dzp[2 * H + u] = dcell * i * (1.0 - g * g);
            dzp[3 * H + u] = dh[n * H + u] * tc * o * (1.0 - o);
            dc[n * H + u] = dcell * f;
        }
        for (std::size_t col = 0; col < G; ++col) {
            dbias[col] += dzp[col];
            for (std::size_t f = 0; f < d.input; ++f) {
                dwx[f * G + col] += x[n * d.input + f] * dzp[col];
            }
            for (std::size_t v = 0; v < H; ++v) {
                dwh[v * G + col] += h_prev[n * H + v] * dzp[col];
            }
        }
        for (std::size_t f = 0; f < d.input; ++f) {
            double sum = 0.0;
            for (std::size_t col = 0; col < G; ++col) {
                sum += wx[f * G + col] * dzp[col];
            }
            dx[n * d.input + f] = sum;
        }
        for (std::size_t v = 0; v < H; ++v) {
            double sum = 0.0;
            for (std::size_t col = 0; col < G; ++col) {
                sum += wh[v * G + col] * dzp[col];
            }
            dh_prev[n * H + v] = sum;
        }
    }
}

}  // namespace trafficast::nn::reference
