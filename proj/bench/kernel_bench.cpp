// Reference vs parallel kernels at the shapes the embedder (R=64) and the
// predictor (T=58) run. Run with --benchmark_filter=conv to pick a kernel.

#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "trafficast/nn/kernels.hpp"

namespace {

using namespace trafficast::nn;

std::vector<double> random_vector(std::size_t n, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<double> v(n);
    for (auto& x : v) {
        x = dist(gen);
    }
    return v;
}

struct Reference {
    static constexpr auto conv2d_forward = reference::conv2d_forward;
    static constexpr auto conv2d_backward_weights = reference::conv2d_backward_weights;
    static constexpr auto maxpool_forward = reference::maxpool_forward;
    static constexpr auto dense_forward = reference::dense_forward;
    static constexpr auto lstm_step_forward = reference::lstm_step_forward;
};

struct Parallel {
    static constexpr auto conv2d_forward = parallel::conv2d_forward;
    static constexpr auto conv2d_backward_weights = parallel::conv2d_backward_weights;
    static constexpr auto maxpool_forward = parallel::maxpool_forward;
    static constexpr auto dense_forward = parallel::dense_forward;
    static constexpr auto lstm_step_forward = parallel::lstm_step_forward;
};

// Second embedder conv: 16 -> 32 channels on a 30x30 map.
ConvDims conv_dims(std::size_t batch) {
    return {.batch = batch, .in_channels = 16, .in_h = 30, .in_w = 30, .out_channels = 32,
            .kernel_h = 5, .kernel_w = 5, .stride = 1};
}

template <class K>
void conv_forward(benchmark::State& state) {
    const ConvDims d = conv_dims(static_cast<std::size_t>(state.range(0)));
    const auto in = random_vector(d.batch * d.in_channels * d.in_h * d.in_w, 1);
    const auto w = random_vector(d.out_channels * d.in_channels * d.kernel_h * d.kernel_w, 2);
    const auto b = random_vector(d.out_channels, 3);
    std::vector<double> out(d.batch * d.out_channels * d.out_h() * d.out_w());
    for (auto _ : state) {
        K::conv2d_forward(d, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

template <class K>
void conv_backward_weights(benchmark::State& state) {
    const ConvDims d = conv_dims(static_cast<std::size_t>(state.range(0)));
    const auto in = random_vector(d.batch * d.in_channels * d.in_h * d.in_w, 1);
    const auto go = random_vector(d.batch * d.out_channels * d.out_h() * d.out_w(), 2);
    std::vector<double> gw(d.out_channels * d.in_channels * d.kernel_h * d.kernel_w);
    std::vector<double> gb(d.out_channels);
    for (auto _ : state) {
        K::conv2d_backward_weights(d, in, go, gw, gb);
        benchmark::DoNotOptimize(gw.data());
    }
}

template <class K>
void maxpool(benchmark::State& state) {
    const PoolDims d{.batch = static_cast<std::size_t>(state.range(0)), .channels = 16, .in_h = 60, .in_w = 60,
                     .window_h = 2, .window_w = 2, .stride = 2};
    const auto in = random_vector(d.batch * d.channels * d.in_h * d.in_w, 1);
    std::vector<double> out(d.batch * d.channels * d.out_h() * d.out_w());
    std::vector<std::uint32_t> arg(out.size());
    for (auto _ : state) {
        K::maxpool_forward(d, in, out, arg);
        benchmark::DoNotOptimize(out.data());
    }
}

// Embedder dense layer: 32*13*13 -> 256.
template <class K>
void dense(benchmark::State& state) {
    const DenseDims d{.batch = static_cast<std::size_t>(state.range(0)), .in = 32 * 13 * 13, .out = 256};
    const auto in = random_vector(d.batch * d.in, 1);
    const auto w = random_vector(d.in * d.out, 2);
    const auto b = random_vector(d.out, 3);
    std::vector<double> out(d.batch * d.out);
    for (auto _ : state) {
        K::dense_forward(d, in, w, b, out);
        benchmark::DoNotOptimize(out.data());
    }
}

// First predictor LSTM: 1 input, 50 hidden units, one time step.
template <class K>
void lstm_step(benchmark::State& state) {
    const LstmDims d{.batch = static_cast<std::size_t>(state.range(0)), .input = 1, .hidden = 50};
    const auto x = random_vector(d.batch * d.input, 1);
    const auto h0 = random_vector(d.batch * d.hidden, 2);
    const auto c0 = random_vector(d.batch * d.hidden, 3);
    const auto wx = random_vector(d.input * 4 * d.hidden, 4);
    const auto wh = random_vector(d.hidden * 4 * d.hidden, 5);
    const auto b = random_vector(4 * d.hidden, 6);
    std::vector<double> gates(d.batch * 4 * d.hidden), c(d.batch * d.hidden), h(d.batch * d.hidden);
    for (auto _ : state) {
        K::lstm_step_forward(d, x, h0, c0, wx, wh, b, gates, c, h);
        benchmark::DoNotOptimize(h.data());
    }
}

#define TRAFFICAST_BENCH(fn)                                       \
    BENCHMARK_TEMPLATE(fn, Reference)->Arg(1)->Arg(32)->Unit(benchmark::kMicrosecond); \
    BENCHMARK_TEMPLATE(fn, Parallel)->Arg(1)->Arg(32)->Unit(benchmark::kMicrosecond)

TRAFFICAST_BENCH(conv_forward);
TRAFFICAST_BENCH(conv_backward_weights);
TRAFFICAST_BENCH(maxpool);
TRAFFICAST_BENCH(dense);
TRAFFICAST_BENCH(lstm_step);

}  // namespace

BENCHMARK_MAIN();
