#include "trafficast/nn/network.hpp"

#include <algorithm>
#include <cmath>

#include "trafficast/error.hpp"

namespace trafficast::nn {

namespace {

#define TRAFFICAST_DISPATCH(backend, fn, ...)         \
    do {                                              \
        if ((backend) == Backend::reference) {        \
            reference::fn(__VA_ARGS__);               \
        } else {                                      \
            parallel::fn(__VA_ARGS__);                \
        }                                             \
    } while (0)

void apply_activation(Activation act, std::span<double> values) {
    if (act == Activation::identity) {
        return;
    }
    for (auto& v : values) {
        v = activate(act, v);
    }
}

/// grad_pre = grad_out * g'(z), using the stored outputs.
Tensor activation_backward(Activation act, const Tensor& output, const Tensor& grad_output) {
    Tensor g = grad_output;
    if (act == Activation::identity) {
        return g;
    }
    const auto y = output.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
        gd[i] *= activation_slope(act, y[i]);
    }
    return g;
}

Shape with_batch(std::size_t n, const Shape& shape) {
    Shape s{n};
    s.insert(s.end(), shape.begin(), shape.end());
    return s;
}

double uniform_in(Rng& rng, double limit) { return (2.0 * uniform01(rng) - 1.0) * limit; }

}  // namespace

Network::Network(Shape input_shape, std::vector<LayerSpec> layers)
    : input_shape_(std::move(input_shape)), layers_(std::move(layers)) {
    if (layers_.empty()) {
        throw ConfigError("network needs at least one layer");
    }
    shapes_.push_back(input_shape_);
    std::size_t total = 0;
    for (const auto& spec : layers_) {
        offsets_.push_back(total);
        total += param_count(spec, shapes_.back());
        shapes_.push_back(nn::output_shape(spec, shapes_.back()));
    }
    offsets_.push_back(total);
    params_.assign(total, 0.0);
}

std::span<const double> Network::layer_parameters(std::size_t i) const {
    return std::span<const double>(params_).subspan(offsets_.at(i), offsets_.at(i + 1) - offsets_.at(i));
}

void Network::initialize(Rng& rng) {
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& spec = layers_[li];
        const Shape& in = shapes_[li];
        double* p = params_.data() + offsets_[li];
        const std::size_t count = offsets_[li + 1] - offsets_[li];
        if (count == 0) {
            continue;
        }
        if (spec.kind == LayerKind::lstm) {
            const double limit = 1.0 / std::sqrt(static_cast<double>(spec.units));
            for (std::size_t i = 0; i < count; ++i) {
                p[i] = uniform_in(rng, limit);
            }
            const std::size_t G = 4 * spec.units;
            double* bias = p + count - G;
            for (std::size_t u = 0; u < spec.units; ++u) {
                bias[spec.units + u] += 1.0;
            }
            continue;
        }
        std::size_t fan_in = 0;
        std::size_t fan_out = 0;
        if (spec.kind == LayerKind::conv) {
            fan_in = in[0] * spec.kernel_h * spec.kernel_w;
            fan_out = spec.units * spec.kernel_h * spec.kernel_w;
        } else {
            fan_in = element_count(in);
            fan_out = spec.units;
        }
        const double limit = spec.activation == Activation::relu
                                 ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                 : std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
        const std::size_t weights = count - spec.units;
        for (std::size_t i = 0; i < weights; ++i) {
            p[i] = uniform_in(rng, limit);
        }
        std::fill(p + weights, p + count, 0.0);
    }
}

Tensor Network::forward(const Tensor& batch) const {
    Trace trace;
    return forward(batch, trace);
}

Tensor Network::forward(const Tensor& batch, Trace& trace) const {
    if (batch.rank() != input_shape_.size() + 1 ||
        !std::equal(input_shape_.begin(), input_shape_.end(), batch.shape().begin() + 1)) {
        throw ConfigError("network input must have shape {N}" + to_string(input_shape_) + ", got " +
                          to_string(batch.shape()));
    }
    const std::size_t n = batch.extent(0);
    trace.input = batch;
    trace.layers.assign(layers_.size(), {});
    const Tensor* current = &trace.input;
    for (std::size_t li = 0; li < layers_.size(); ++li) {
        const auto& spec = layers_[li];
        const Shape& in = shapes_[li];
        const auto params = layer_parameters(li);
        LayerState& st = trace.layers[li];
        st.output = Tensor(with_batch(n, shapes_[li + 1]));
        const auto x = current->data();
        auto y = st.output.data();
        switch (spec.kind) {
            case LayerKind::conv: {
                const ConvDims d{n, in[0], in[1], in[2], spec.units, spec.kernel_h, spec.kernel_w, spec.stride};
                const std::size_t wcount = params.size() - spec.units;
                TRAFFICAST_DISPATCH(backend_, conv2d_forward, d, x, params.first(wcount), params.subspan(wcount), y);
                apply_activation(spec.activation, y);
                break;
            }
            case LayerKind::maxpool: {
                const PoolDims d{n, in[0], in[1], in[2], spec.kernel_h, spec.kernel_w, spec.stride};
                st.argmax.resize(y.size());
                TRAFFICAST_DISPATCH(backend_, maxpool_forward, d, x, y, st.argmax);
                break;
            }
            case LayerKind::avgpool: {
                const PoolDims d{n, in[0], in[1], in[2], spec.kernel_h, spec.kernel_w, spec.stride};
                TRAFFICAST_DISPATCH(backend_, avgpool_forward, d, x, y);
                break;
            }
            case LayerKind::dense: {
                const DenseDims d{n, element_count(in), spec.units};
                const std::size_t wcount = params.size() - spec.units;
                TRAFFICAST_DISPATCH(backend_, dense_forward, d, x, params.first(wcount), params.subspan(wcount), y);
                apply_activation(spec.activation, y);
                break;
            }
            case LayerKind::activation:
                std::copy(x.begin(), x.end(), y.begin());
                apply_activation(spec.activation, y);
                break;
            case LayerKind::l2norm: {
                const std::size_t dim = in[0];
                st.gates = Tensor({n});
                for (std::size_t s = 0; s < n; ++s) {
                    double sq = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) {
                        sq += x[s * dim + i] * x[s * dim + i];
                    }
                    const double norm = std::sqrt(sq);
                    if (!(norm > 0.0)) {
                        throw DataError("cannot L2-normalize a zero vector");
                    }
                    st.gates[s] = norm;
                    for (std::size_t i = 0; i < dim; ++i) {
                        y[s * dim + i] = x[s * dim + i] / norm;
                    }
                }
                break;
            }
            case LayerKind::lstm: {
                const std::size_t T = in[0];
                const std::size_t F = in[1];
                const std::size_t H = spec.units;
                const std::size_t G = 4 * H;
                const LstmDims d{n, F, H};
                const auto wx = params.first(F * G);
                const auto wh = params.subspan(F * G, H * G);
                const auto bias = params.subspan((F + H) * G);
                st.gates = Tensor({T, n, G});
                st.cells = Tensor({T + 1, n, H});
                st.hidden = Tensor({T + 1, n, H});
                std::vector<double> xt(n * F);
                for (std::size_t t = 0; t < T; ++t) {
                    for (std::size_t s = 0; s < n; ++s) {
                        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>((s * T + t) * F), F,
                                    xt.begin() + static_cast<std::ptrdiff_t>(s * F));
                    }
                    const auto prev_c = st.cells.data().subspan(t * n * H, n * H);
                    const auto prev_h = st.hidden.data().subspan(t * n * H, n * H);
                    TRAFFICAST_DISPATCH(backend_, lstm_step_forward, d, xt, prev_h, prev_c, wx, wh, bias,
                                        st.gates.data().subspan(t * n * G, n * G),
                                        st.cells.data().subspan((t + 1) * n * H, n * H),
                                        st.hidden.data().subspan((t + 1) * n * H, n * H));
                    if (spec.return_sequences) {
                        for (std::size_t s = 0; s < n; ++s) {
                            std::copy_n(st.hidden.data().begin() + static_cast<std::ptrdiff_t>(((t + 1) * n + s) * H),
                                        H, y.begin() + static_cast<std::ptrdiff_t>((s * T + t) * H));
                        }
                    }
                }
                if (!spec.return_sequences) {
                    std::copy_n(st.hidden.data().begin() + static_cast<std::ptrdiff_t>(T * n * H), n * H, y.begin());
                }
                break;
            }
        }
        current = &st.output;
    }
    return trace.layers.back().output;
}

Tensor Network::backward(const Trace& trace, const Tensor& grad_output, std::span<double> grad_params,
                         bool want_input_grad) const {
    if (trace.layers.size() != layers_.size()) {
        throw ConfigError("backward needs a trace from forward()");
    }
    if (grad_params.size() != params_.size()) {
        throw ConfigError("gradient buffer does not match the parameter count");
    }
    if (grad_output.shape() != trace.layers.back().output.shape()) {
        throw ConfigError("output gradient shape mismatch");
    }
    const std::size_t n = trace.input.extent(0);
    Tensor grad = grad_output;
    for (std::size_t li = layers_.size(); li-- > 0;) {
        const auto& spec = layers_[li];
        const Shape& in = shapes_[li];
        const LayerState& st = trace.layers[li];
        const Tensor& input = li == 0 ? trace.input : trace.layers[li - 1].output;
        const bool need_dx = li > 0 || want_input_grad;
        const auto params = layer_parameters(li);
        auto gp = grad_params.subspan(offsets_[li], offsets_[li + 1] - offsets_[li]);
        Tensor dx(input.shape());
        switch (spec.kind) {
            case LayerKind::conv: {
                const Tensor gz = activation_backward(spec.activation, st.output, grad);
                const ConvDims d{n, in[0], in[1], in[2], spec.units, spec.kernel_h, spec.kernel_w, spec.stride};
                const std::size_t wcount = params.size() - spec.units;
                TRAFFICAST_DISPATCH(backend_, conv2d_backward_weights, d, input.data(), gz.data(), gp.first(wcount),
                                    gp.subspan(wcount));
                if (need_dx) {
                    TRAFFICAST_DISPATCH(backend_, conv2d_backward_input, d, params.first(wcount), gz.data(),
                                        dx.data());
                }
                break;
            }
            case LayerKind::maxpool: {
                const PoolDims d{n, in[0], in[1], in[2], spec.kernel_h, spec.kernel_w, spec.stride};
                TRAFFICAST_DISPATCH(backend_, maxpool_backward, d, grad.data(), st.argmax, dx.data());
                break;
            }
            case LayerKind::avgpool: {
                const PoolDims d{n, in[0], in[1], in[2], spec.kernel_h, spec.kernel_w, spec.stride};
                TRAFFICAST_DISPATCH(backend_, avgpool_backward, d, grad.data(), dx.data());
                break;
            }
            case LayerKind::dense: {
                const Tensor gz = activation_backward(spec.activation, st.output, grad);
                const DenseDims d{n, element_count(in), spec.units};
                const std::size_t wcount = params.size() - spec.units;
                TRAFFICAST_DISPATCH(backend_, dense_backward_weights, d, input.data(), gz.data(), gp.first(wcount),
                                    gp.subspan(wcount));
                if (need_dx) {
                    TRAFFICAST_DISPATCH(backend_, dense_backward_input, d, params.first(wcount), gz.data(),
                                        dx.data());
                }
                break;
            }
            case LayerKind::activation:
                dx = activation_backward(spec.activation, st.output, grad);
                break;
            case LayerKind::l2norm: {
                const std::size_t dim = in[0];
                const auto y = st.output.data();
                const auto g = grad.data();
                auto out = dx.data();
                for (std::size_t s = 0; s < n; ++s) {
                    double dot = 0.0;
                    for (std::size_t i = 0; i < dim; ++i) {
                        dot += y[s * dim + i] * g[s * dim + i];
                    }
                    const double norm = st.gates[s];
                    for (std::size_t i = 0; i < dim; ++i) {
                        out[s * dim + i] = (g[s * dim + i] - y[s * dim + i] * dot) / norm;
                    }
                }
                break;
            }
            case LayerKind::lstm: {
                const std::size_t T = in[0];
                const std::size_t F = in[1];
                const std::size_t H = spec.units;
                const std::size_t G = 4 * H;
                const LstmDims d{n, F, H};
                const auto wx = params.first(F * G);
                const auto wh = params.subspan(F * G, H * G);
                auto dwx = gp.first(F * G);
                auto dwh = gp.subspan(F * G, H * G);
                auto db = gp.subspan((F + H) * G);
                const auto x = input.data();
                const auto g = grad.data();
                std::vector<double> xt(n * F);
                std::vector<double> dxt(n * F);
                std::vector<double> dh(n * H);
                std::vector<double> dh_next(n * H, 0.0);
                std::vector<double> dc(n * H, 0.0);
                for (std::size_t t = T; t-- > 0;) {
                    for (std::size_t s = 0; s < n; ++s) {
                        std::copy_n(x.begin() + static_cast<std::ptrdiff_t>((s * T + t) * F), F,
                                    xt.begin() + static_cast<std::ptrdiff_t>(s * F));
                        for (std::size_t u = 0; u < H; ++u) {
                            double from_output = 0.0;
                            if (spec.return_sequences) {
                                from_output = g[(s * T + t) * H + u];
                            } else if (t == T - 1) {
                                from_output = g[s * H + u];
                            }
                            dh[s * H + u] = dh_next[s * H + u] + from_output;
                        }
                    }
                    TRAFFICAST_DISPATCH(backend_, lstm_step_backward, d, xt,
                                        st.hidden.data().subspan(t * n * H, n * H),
                                        st.cells.data().subspan(t * n * H, n * H),
                                        st.gates.data().subspan(t * n * G, n * G),
                                        st.cells.data().subspan((t + 1) * n * H, n * H), wx, wh, dh, dc, dxt,
                                        dh_next, dwx, dwh, db);
                    if (need_dx) {
                        auto out = dx.data();
                        for (std::size_t s = 0; s < n; ++s) {
                            std::copy_n(dxt.begin() + static_cast<std::ptrdiff_t>(s * F), F,
                                        out.begin() + static_cast<std::ptrdiff_t>((s * T + t) * F));
                        }
                    }
                }
                break;
            }
        }
        grad = std::move(dx);
    }
    if (!want_input_grad) {
        return {};
    }
    return grad;
}

Network make_embedder(std::size_t resolution, std::size_t embedding_dim) {
    return Network({1, resolution, resolution},
                   {LayerSpec::conv(16, 5, 5, 1, Activation::relu), LayerSpec::maxpool(2, 2, 2),
                    LayerSpec::conv(32, 5, 5, 1, Activation::relu), LayerSpec::maxpool(2, 2, 2),
                    LayerSpec::dense(256, Activation::relu), LayerSpec::dense(embedding_dim, Activation::identity),
                    LayerSpec::l2norm()});
}

Network make_predictor(std::size_t steps) {
    return Network({steps, 1}, {LayerSpec::lstm(50, true), LayerSpec::lstm(25, false),
                                LayerSpec::dense(200, Activation::relu), LayerSpec::dense(1, Activation::identity)});
}

}  // namespace trafficast::nn
