#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <vector>

#include "gemm.hpp"
#include "trafficast/nn/kernels.hpp"
#include "vector_math.hpp"

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace trafficast::nn {

int kernel_threads() {
#if defined(_OPENMP)
    return omp_get_max_threads();
#else
    return 1;
#endif
}

void set_kernel_threads(int threads) {
#if defined(_OPENMP)
    omp_set_num_threads(std::max(1, threads));
#else
    (void)threads;
#endif
}

}  // namespace trafficast::nn

namespace trafficast::nn::parallel {

namespace {

using Index = std::ptrdiff_t;

using detail::gemm_acc;
using detail::gemm_nt;

/// Patch matrix of one image. Row q = (c, ky, kx), column p = (y, x); with
/// `transposed` the layout is [p][q] instead.
void im2col(const ConvDims& d, const double* image, double* col, bool transposed) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const std::size_t P = oh * ow;
    const std::size_t Q = d.in_channels * d.kernel_h * d.kernel_w;
    for (std::size_t c = 0; c < d.in_channels; ++c) {
        const double* plane = image + c * d.in_h * d.in_w;
        for (std::size_t ky = 0; ky < d.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < d.kernel_w; ++kx) {
                const std::size_t q = (c * d.kernel_h + ky) * d.kernel_w + kx;
                for (std::size_t y = 0; y < oh; ++y) {
                    const double* src = plane + (y * d.stride + ky) * d.in_w + kx;
                    for (std::size_t x = 0; x < ow; ++x) {
                        const std::size_t p = y * ow + x;
                        col[transposed ? p * Q + q : q * P + p] = src[x * d.stride];
                    }
                }
            }
        }
    }
}

void col2im_add(const ConvDims& d, const double* col, double* image) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const std::size_t P = oh * ow;
    for (std::size_t c = 0; c < d.in_channels; ++c) {
        double* plane = image + c * d.in_h * d.in_w;
        for (std::size_t ky = 0; ky < d.kernel_h; ++ky) {
            for (std::size_t kx = 0; kx < d.kernel_w; ++kx) {
                const double* row = col + ((c * d.kernel_h + ky) * d.kernel_w + kx) * P;
                for (std::size_t y = 0; y < oh; ++y) {
                    double* dst = plane + (y * d.stride + ky) * d.in_w + kx;
                    for (std::size_t x = 0; x < ow; ++x) {
                        dst[x * d.stride] += row[y * ow + x];
                    }
                }
            }
        }
    }
}

}  // namespace

void conv2d_forward(const ConvDims& d, std::span<const double> input, std::span<const double> weights,
                    std::span<const double> bias, std::span<double> output) {
    const std::size_t P = d.out_h() * d.out_w();
    const std::size_t Q = d.in_channels * d.kernel_h * d.kernel_w;
    std::vector<double> col(Q * P);
    for (std::size_t n = 0; n < d.batch; ++n) {
        im2col(d, input.data() + n * d.in_channels * d.in_h * d.in_w, col.data(), false);
        double* out = output.data() + n * d.out_channels * P;
        for (std::size_t k = 0; k < d.out_channels; ++k) {
            std::fill(out + k * P, out + (k + 1) * P, bias[k]);
        }
        gemm_acc(d.out_channels, P, Q, weights.data(), Q, 1, col.data(), P, out, P);
    }
}

void conv2d_backward_weights(const ConvDims& d, std::span<const double> input, std::span<const double> grad_output,
                             std::span<double> grad_weights, std::span<double> grad_bias) {
    const std::size_t P = d.out_h() * d.out_w();
    const std::size_t Q = d.in_channels * d.kernel_h * d.kernel_w;
    std::vector<double> col(P * Q);
    for (std::size_t n = 0; n < d.batch; ++n) {
        const double* g = grad_output.data() + n * d.out_channels * P;
        for (std::size_t k = 0; k < d.out_channels; ++k) {
            double sum = 0.0;
#pragma omp simd reduction(+ : sum)
            for (std::size_t p = 0; p < P; ++p) {
                sum += g[k * P + p];
            }
            grad_bias[k] += sum;
        }
        im2col(d, input.data() + n * d.in_channels * d.in_h * d.in_w, col.data(), true);
        gemm_acc(d.out_channels, Q, P, g, P, 1, col.data(), Q, grad_weights.data(), Q);
    }
}

void conv2d_backward_input(const ConvDims& d, std::span<const double> weights, std::span<const double> grad_output,
                           std::span<double> grad_input) {
    const std::size_t P = d.out_h() * d.out_w();
    const std::size_t Q = d.in_channels * d.kernel_h * d.kernel_w;
    const std::size_t image = d.in_channels * d.in_h * d.in_w;
    std::vector<double> col(Q * P);
    std::fill(grad_input.begin(), grad_input.end(), 0.0);
    for (std::size_t n = 0; n < d.batch; ++n) {
        std::fill(col.begin(), col.end(), 0.0);
        gemm_acc(Q, P, d.out_channels, weights.data(), 1, Q, grad_output.data() + n * d.out_channels * P, P,
                 col.data(), P);
        col2im_add(d, col.data(), grad_input.data() + n * image);
    }
}

void maxpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output,
                     std::span<std::uint32_t> argmax) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
    const Index planes = static_cast<Index>(d.batch * d.channels);
#pragma omp parallel for schedule(static)
    for (Index pi = 0; pi < planes; ++pi) {
        const auto plane = static_cast<std::size_t>(pi);
        const double* src = input.data() + plane * in_plane;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                std::size_t where = y * d.stride * d.in_w + x * d.stride;
                double best = src[where];
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        const std::size_t idx = (y * d.stride + wy) * d.in_w + x * d.stride + wx;
                        if (src[idx] > best) {
                            best = src[idx];
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
    const std::size_t in_plane = d.in_h * d.in_w;
    const Index planes = static_cast<Index>(d.batch * d.channels);
#pragma omp parallel for schedule(static)
    for (Index pi = 0; pi < planes; ++pi) {
        const auto plane = static_cast<std::size_t>(pi);
        double* gi = grad_input.data() + plane * in_plane;
        std::fill(gi, gi + in_plane, 0.0);
        for (std::size_t o = 0; o < outs; ++o) {
            gi[argmax[plane * outs + o]] += grad_output[plane * outs + o];
        }
    }
}

void avgpool_forward(const PoolDims& d, std::span<const double> input, std::span<double> output) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
    const double inv_area = 1.0 / static_cast<double>(d.window_h * d.window_w);
    const Index planes = static_cast<Index>(d.batch * d.channels);
#pragma omp parallel for schedule(static)
    for (Index pi = 0; pi < planes; ++pi) {
        const auto plane = static_cast<std::size_t>(pi);
        const double* src = input.data() + plane * in_plane;
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                double sum = 0.0;
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        sum += src[(y * d.stride + wy) * d.in_w + x * d.stride + wx];
                    }
                }
                output[(plane * oh + y) * ow + x] = sum * inv_area;
            }
        }
    }
}

void avgpool_backward(const PoolDims& d, std::span<const double> grad_output, std::span<double> grad_input) {
    const std::size_t oh = d.out_h();
    const std::size_t ow = d.out_w();
    const std::size_t in_plane = d.in_h * d.in_w;
    const double inv_area = 1.0 / static_cast<double>(d.window_h * d.window_w);
    const Index planes = static_cast<Index>(d.batch * d.channels);
#pragma omp parallel for schedule(static)
    for (Index pi = 0; pi < planes; ++pi) {
        const auto plane = static_cast<std::size_t>(pi);
        double* gi = grad_input.data() + plane * in_plane;
        std::fill(gi, gi + in_plane, 0.0);
        for (std::size_t y = 0; y < oh; ++y) {
            for (std::size_t x = 0; x < ow; ++x) {
                const double g = grad_output[(plane * oh + y) * ow + x] * inv_area;
                for (std::size_t wy = 0; wy < d.window_h; ++wy) {
                    for (std::size_t wx = 0; wx < d.window_w; ++wx) {
                        gi[(y * d.stride + wy) * d.in_w + x * d.stride + wx] += g;
                    }
                }
            }
        }
    }
}

void dense_forward(const DenseDims& d, std::span<const double> input, std::span<const double> weights,
                   std::span<const double> bias, std::span<double> output) {
    for (std::size_t n = 0; n < d.batch; ++n) {
        std::copy(bias.begin(), bias.end(), output.begin() + static_cast<Index>(n * d.out));
    }
    gemm_acc(d.batch, d.out, d.in, input.data(), d.in, 1, weights.data(), d.out, output.data(), d.out);
}

void dense_backward_weights(const DenseDims& d, std::span<const double> input, std::span<const double> grad_output,
                            std::span<double> grad_weights, std::span<double> grad_bias) {
    for (std::size_t n = 0; n < d.batch; ++n) {
        const double* g = grad_output.data() + n * d.out;
#pragma omp simd
        for (std::size_t j = 0; j < d.out; ++j) {
            grad_bias[j] += g[j];
        }
    }
    gemm_acc(d.in, d.out, d.batch, input.data(), 1, d.in, grad_output.data(), d.out, grad_weights.data(), d.out);
}

void dense_backward_input(const DenseDims& d, std::span<const double> weights, std::span<const double> grad_output,
                          std::span<double> grad_input) {
    thread_local std::vector<double> scratch;
    gemm_nt(d.batch, d.in, d.out, grad_output.data(), weights.data(), grad_input.data(), scratch);
}

void lstm_step_forward(const LstmDims& d, std::span<const double> x, std::span<const double> h_prev,
                       std::span<const double> c_prev, std::span<const double> wx, std::span<const double> wh,
                       std::span<const double> bias, std::span<double> gates, std::span<double> c,
                       std::span<double> h) {
    const std::size_t H = d.hidden;
    const std::size_t G = 4 * H;
    for (std::size_t n = 0; n < d.batch; ++n) {
        std::copy(bias.begin(), bias.end(), gates.begin() + static_cast<Index>(n * G));
    }
    gemm_acc(d.batch, G, d.input, x.data(), d.input, 1, wx.data(), G, gates.data(), G);
    gemm_acc(d.batch, G, H, h_prev.data(), H, 1, wh.data(), G, gates.data(), G);
#pragma omp parallel for schedule(static)
    for (Index ni = 0; ni < static_cast<Index>(d.batch); ++ni) {
        const auto n = static_cast<std::size_t>(ni);
        double* z = gates.data() + n * G;
        detail::sigmoid_inplace(z, 2 * H);
        detail::tanh_inplace(z + 2 * H, H);
        detail::sigmoid_inplace(z + 3 * H, H);
        double* cn = c.data() + n * H;
        double* hn = h.data() + n * H;
        const double* cp = c_prev.data() + n * H;
#pragma omp simd
        for (std::size_t u = 0; u < H; ++u) {
            cn[u] = z[H + u] * cp[u] + z[u] * z[2 * H + u];
        }
        detail::tanh_copy(cn, hn, H);
#pragma omp simd
        for (std::size_t u = 0; u < H; ++u) {
            hn[u] *= z[3 * H + u];
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
    thread_local std::vector<double> dz_buffer;
    thread_local std::vector<double> scratch;
    dz_buffer.resize(d.batch * G);
    double* dz = dz_buffer.data();

#pragma omp parallel for schedule(static)
    for (Index ni = 0; ni < static_cast<Index>(d.batch); ++ni) {
        const auto n = static_cast<std::size_t>(ni);
        const double* gt = gates.data() + n * G;
        double* z = dz + n * G;
        double tc[256];
        std::vector<double> tc_heap;
        double* tcp = tc;
        if (H > 256) {
            tc_heap.resize(H);
            tcp = tc_heap.data();
        }
        detail::tanh_copy(c.data() + n * H, tcp, H);
        const double* dhn = dh.data() + n * H;
        const double* cp = c_prev.data() + n * H;
        double* dcn = dc.data() + n * H;
#pragma omp simd
        for (std::size_t u = 0; u < H; ++u) {
            const double i = gt[u];
            const double f = gt[H + u];
            const double g = gt[2 * H + u];
            const double o = gt[3 * H + u];
            const double t = tcp[u];
            const double dcell = dcn[u] + dhn[u] * o * (1.0 - t * t);
            z[u] = dcell * g * i * (1.0 - i);
            z[H + u] = dcell * cp[u] * f * (1.0 - f);
            z[2 * H + u] = dcell * i * (1.0 - g * g);
            z[3 * H + u] = dhn[u] * t * o * (1.0 - o);
            dcn[u] = dcell * f;
        }
    }

    for (std::size_t n = 0; n < d.batch; ++n) {
        const double* z = dz + n * G;
#pragma omp simd
        for (std::size_t col = 0; col < G; ++col) {
            dbias[col] += z[col];
        }
    }
    gemm_acc(d.input, G, d.batch, x.data(), 1, d.input, dz, G, dwx.data(), G);
    gemm_acc(H, G, d.batch, h_prev.data(), 1, H, dz, G, dwh.data(), G);
    gemm_nt(d.batch, d.input, G, dz, wx.data(), dx.data(), scratch);
    gemm_nt(d.batch, H, G, dz, wh.data(), dh_prev.data(), scratch);
}

}  // namespace trafficast::nn::parallel
