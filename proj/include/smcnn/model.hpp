#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "smcnn/layers.hpp"
#include "smcnn/preprocess.hpp"
#include "smcnn/rng.hpp"
#include "smcnn/tensor.hpp"

namespace smcnn {

struct Shape3 {
    int t = 0, c = 0, f = 0;
    bool operator==(const Shape3&) const = default;
};

std::string to_string(const Shape3& s);

/// Ordered layer list plus the input shape it expects.
struct ArchDescriptor {
    std::vector<nn::LayerSpec> layers;
    Shape3 input{300, 16, 1};
};

/// The signal-matrix CNN: circular channel padding, five conv(2x2)+ReLU
/// stages with stripe pooling (2x1; the last stage pools 2x2), then
/// Flatten -> Dense 128 -> ReLU -> Dense 2 -> Softmax.
ArchDescriptor build_sm_cnn();

Shape3 layer_output_shape(const nn::LayerSpec& layer, const Shape3& in);

/// Shape before each layer plus the final output; entry 0 is the input shape.
std::vector<Shape3> shape_chain(const ArchDescriptor& arch);

std::int64_t param_count(const ArchDescriptor& arch);

struct FlopCount {
    std::int64_t macs = 0;         // conv + dense multiply-accumulates
    std::int64_t flops = 0;        // 2 * macs
    std::int64_t comparisons = 0;  // pool + relu comparisons, reported separately
};
FlopCount flop_count(const ArchDescriptor& arch);

/// Sizes (weights, bias) of each parametric layer in architecture order.
std::vector<std::pair<std::int64_t, std::int64_t>> param_block_shapes(const ArchDescriptor& arch);

template <typename S>
nn::Parameters<S> zero_params(const ArchDescriptor& arch) {
    nn::Parameters<S> p;
    for (auto [w, b] : param_block_shapes(arch)) {
        nn::ParamBlock<S> blk;
        blk.w.assign(std::size_t(w), S(0));
        blk.b.assign(std::size_t(b), S(0));
        p.blocks.push_back(std::move(blk));
    }
    return p;
}

/// Glorot-uniform weights (variance 2 / (fan_in + fan_out)), zero biases.
template <typename S>
nn::Parameters<S> init_params(const ArchDescriptor& arch, std::uint64_t seed) {
    nn::Parameters<S> p = zero_params<S>(arch);
    Rng rng(seed);
    std::size_t idx = 0;
    for (const auto& layer : arch.layers) {
        double fan_in = 0.0, fan_out = 0.0;
        if (const auto* conv = std::get_if<nn::Conv2D>(&layer)) {
            fan_in = double(conv->kh) * conv->kw * conv->c_in;
            fan_out = double(conv->kh) * conv->kw * conv->c_out;
        } else if (const auto* dense = std::get_if<nn::Dense>(&layer)) {
            fan_in = double(dense->d_in);
            fan_out = double(dense->d_out);
        } else {
            continue;
        }
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (auto& w : p.blocks[idx].w) w = S(rng.uniform(-limit, limit));
        ++idx;
    }
    return p;
}

/// Activations recorded during a forward pass: tensors[i] is the input to
/// layer i, tensors[layers.size()] the final output.
template <typename S>
struct ForwardTrace {
    std::vector<Tensor3<S>> tensors;
    std::vector<std::vector<std::int64_t>> pool_argmax;
};

namespace detail {
std::vector<int> param_index_per_layer(const ArchDescriptor& arch);
}

template <typename S>
const Tensor3<S>& forward_trace(const ArchDescriptor& arch, const nn::Parameters<S>& params,
                                const Tensor3<S>& x, ForwardTrace<S>& trace) {
    const std::size_t n = arch.layers.size();
    trace.tensors.resize(n + 1);
    trace.pool_argmax.resize(n);
    trace.tensors[0] = x;
    const auto pidx = detail::param_index_per_layer(arch);
    for (std::size_t i = 0; i < n; ++i) {
        const Tensor3<S>& in = trace.tensors[i];
        Tensor3<S>& out = trace.tensors[i + 1];
        std::visit(
            [&](const auto& layer) {
                using L = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<L, nn::CircularPadChannels>) {
                    if (layer.width != 1)
                        throw UsageError("forward: circular pad supports width 1 only");
                    nn::circular_pad_channels(in, out);
                } else if constexpr (std::is_same_v<L, nn::Conv2D>) {
                    nn::conv2d_forward(in, layer, params.blocks[std::size_t(pidx[i])], out);
                } else if constexpr (std::is_same_v<L, nn::MaxPool>) {
                    nn::maxpool_forward(in, layer, out, trace.pool_argmax[i]);
                } else if constexpr (std::is_same_v<L, nn::ReLU>) {
                    nn::relu_forward(in, out);
                } else if constexpr (std::is_same_v<L, nn::Flatten>) {
                    nn::flatten(in, out);
                } else if constexpr (std::is_same_v<L, nn::Dense>) {
                    nn::dense_forward(in, layer, params.blocks[std::size_t(pidx[i])], out);
                } else if constexpr (std::is_same_v<L, nn::Softmax>) {
                    auto probs = nn::softmax(std::span<const S>(in.data.data(), in.data.size()));
                    out.reshape(int(probs.size()), 1, 1);
                    std::copy(probs.begin(), probs.end(), out.data.begin());
                }
            },
            arch.layers[i]);
    }
    return trace.tensors[n];
}

/// Probability vector (class 0 = normal, class 1 = defect).
template <typename S>
std::vector<S> forward(const ArchDescriptor& arch, const nn::Parameters<S>& params,
                       const Tensor3<S>& x) {
    ForwardTrace<S> trace;
    const Tensor3<S>& out = forward_trace(arch, params, x, trace);
    return std::vector<S>(out.data.begin(), out.data.end());
}

/// Backpropagates a gradient w.r.t. the logits (the softmax input) through
/// all earlier layers, accumulating parameter gradients into `grads`.
/// The final layer must be Softmax.
template <typename S>
void backward_from_logit_grad(const ArchDescriptor& arch, const nn::Parameters<S>& params,
                              const ForwardTrace<S>& trace, std::span<const S> logit_grad,
                              nn::GradientBuffer<S>& grads) {
    const std::size_t n = arch.layers.size();
    if (n == 0 || !std::holds_alternative<nn::Softmax>(arch.layers[n - 1]))
        throw UsageError("backward_from_logit_grad: architecture must end in Softmax");
    const auto pidx = detail::param_index_per_layer(arch);
    Tensor3<S> up(int(logit_grad.size()), 1, 1);
    std::copy(logit_grad.begin(), logit_grad.end(), up.data.begin());
    for (std::size_t ri = n - 1; ri-- > 0;) {
        const Tensor3<S>& in = trace.tensors[ri];
        Tensor3<S> in_grad;
        std::visit(
            [&](const auto& layer) {
                using L = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<L, nn::CircularPadChannels>) {
                    nn::circular_pad_channels_backward(up, in_grad);
                } else if constexpr (std::is_same_v<L, nn::Conv2D>) {
                    in_grad.reshape(in.t, in.c, in.f);
                    in_grad.fill(S(0));
                    nn::conv2d_backward(in, layer, params.blocks[std::size_t(pidx[ri])], up,
                                        in_grad, grads.blocks[std::size_t(pidx[ri])]);
                } else if constexpr (std::is_same_v<L, nn::MaxPool>) {
                    nn::maxpool_backward(up, trace.pool_argmax[ri], in.t, in.c, in.f, in_grad);
                } else if constexpr (std::is_same_v<L, nn::ReLU>) {
                    nn::relu_backward(in, up, in_grad);
                } else if constexpr (std::is_same_v<L, nn::Flatten>) {
                    nn::unflatten(up, in.t, in.c, in.f, in_grad);
                } else if constexpr (std::is_same_v<L, nn::Dense>) {
                    in_grad.reshape(in.t, in.c, in.f);
                    in_grad.fill(S(0));
                    nn::dense_backward(in, layer, params.blocks[std::size_t(pidx[ri])], up,
                                       in_grad, grads.blocks[std::size_t(pidx[ri])]);
                } else if constexpr (std::is_same_v<L, nn::Softmax>) {
                    throw UsageError("backward_from_logit_grad: unexpected interior Softmax");
                }
            },
            arch.layers[ri]);
        up = std::move(in_grad);
    }
}

/// (p_defect, p_normal) for one window.
std::pair<float, float> classify(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                                 const WindowSample& sample);

// Checkpoints: magic "SMCK1", u16 version, layer list, input shape, float32
// little-endian payload, trailing CRC32. Round trips are bit-exact.
void save_checkpoint(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                     const std::string& path);
std::pair<ArchDescriptor, nn::Parameters<float>> load_checkpoint(const std::string& path);

}  // namespace smcnn
