#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "smcnn/tensor.hpp"

namespace smcnn::nn {

struct CircularPadChannels {
    int width = 1;
};
struct Conv2D {
    int kh = 0, kw = 0, c_in = 0, c_out = 0;
};
struct MaxPool {
    int ph = 0, pw = 0;
};
struct ReLU {};
struct Flatten {};
struct Dense {
    int d_in = 0, d_out = 0;
};
struct Softmax {};

using LayerSpec =
    std::variant<CircularPadChannels, Conv2D, MaxPool, ReLU, Flatten, Dense, Softmax>;

/// Weights + bias of one parametric layer. Conv weights are indexed
/// [kh][kw][c_in][c_out], dense weights [d_in][d_out]; bias is [c_out]/[d_out].
template <typename S>
struct ParamBlock {
    std::vector<S> w;
    std::vector<S> b;

    std::int64_t count() const { return std::int64_t(w.size()) + std::int64_t(b.size()); }
    void zero() {
        std::fill(w.begin(), w.end(), S(0));
        std::fill(b.begin(), b.end(), S(0));
    }
};

/// One block per parametric layer, in architecture order.
template <typename S>
struct Parameters {
    std::vector<ParamBlock<S>> blocks;

    std::int64_t count() const {
        std::int64_t n = 0;
        for (const auto& blk : blocks) n += blk.count();
        return n;
    }
    void zero() {
        for (auto& blk : blocks) blk.zero();
    }
};

template <typename S>
using GradientBuffer = Parameters<S>;

template <typename To, typename From>
Parameters<To> params_cast(const Parameters<From>& in) {
    Parameters<To> out;
    out.blocks.resize(in.blocks.size());
    for (std::size_t i = 0; i < in.blocks.size(); ++i) {
        out.blocks[i].w.assign(in.blocks[i].w.begin(), in.blocks[i].w.end());
        out.blocks[i].b.assign(in.blocks[i].b.begin(), in.blocks[i].b.end());
    }
    return out;
}

// ---- circular channel padding -------------------------------------------

template <typename S>
void circular_pad_channels(const Tensor3<S>& in, Tensor3<S>& out) {
    if (in.c < 2) throw UsageError("circular_pad_channels: need at least 2 channels");
    out.reshape(in.t, in.c + 2, in.f);
    const std::size_t row = std::size_t(in.f);
    for (int t = 0; t < in.t; ++t) {
        std::copy_n(in.row(t, in.c - 1), row, out.row(t, 0));
        std::copy_n(in.row(t, 0), row * std::size_t(in.c), out.row(t, 1));
        std::copy_n(in.row(t, 0), row, out.row(t, in.c + 1));
    }
}

template <typename S>
void circular_pad_channels_backward(const Tensor3<S>& up, Tensor3<S>& in_grad) {
    const int c_in = up.c - 2;
    if (c_in < 2) throw UsageError("circular_pad_channels_backward: bad upstream shape");
    in_grad.reshape(up.t, c_in, up.f);
    for (int t = 0; t < up.t; ++t) {
        for (int c = 0; c < c_in; ++c)
            for (int f = 0; f < up.f; ++f) in_grad.at(t, c, f) = up.at(t, c + 1, f);
        for (int f = 0; f < up.f; ++f) {
            in_grad.at(t, c_in - 1, f) += up.at(t, 0, f);
            in_grad.at(t, 0, f) += up.at(t, c_in + 1, f);
        }
    }
}

// ---- 2D valid convolution, stride 1 --------------------------------------

template <typename S>
void conv2d_forward(const Tensor3<S>& in, const Conv2D& spec, const ParamBlock<S>& p,
                    Tensor3<S>& out) {
    if (in.f != spec.c_in) throw UsageError("conv2d: input feature count mismatch");
    if (in.t < spec.kh || in.c < spec.kw) throw UsageError("conv2d: input smaller than kernel");
    if (std::int64_t(p.w.size()) != std::int64_t(spec.kh) * spec.kw * spec.c_in * spec.c_out ||
        std::int64_t(p.b.size()) != spec.c_out)
        throw UsageError("conv2d: parameter shape mismatch");
    const int To = in.t - spec.kh + 1, Co = in.c - spec.kw + 1, O = spec.c_out, F = spec.c_in;
    out.reshape(To, Co, O);
    std::vector<S> acc(static_cast<std::size_t>(O));
    for (int t = 0; t < To; ++t) {
        for (int c = 0; c < Co; ++c) {
            std::copy(p.b.begin(), p.b.end(), acc.begin());
            for (int i = 0; i < spec.kh; ++i) {
                for (int j = 0; j < spec.kw; ++j) {
                    const S* in_row = in.row(t + i, c + j);
                    const S* w_row = p.w.data() + std::size_t((i * spec.kw + j) * F) * O;
                    for (int f = 0; f < F; ++f) {
                        const S a = in_row[f];
                        const S* wp = w_row + std::size_t(f) * O;
                        for (int o = 0; o < O; ++o) acc[std::size_t(o)] += a * wp[o];
                    }
                }
            }
            std::copy(acc.begin(), acc.end(), out.row(t, c));
        }
    }
}

/// Adjoint of conv2d_forward; accumulates into in_grad / p_grad.
template <typename S>
void conv2d_backward(const Tensor3<S>& in, const Conv2D& spec, const ParamBlock<S>& p,
                     const Tensor3<S>& up, Tensor3<S>& in_grad, ParamBlock<S>& p_grad) {
    const int To = in.t - spec.kh + 1, Co = in.c - spec.kw + 1, O = spec.c_out, F = spec.c_in;
    if (up.t != To || up.c != Co || up.f != O)
        throw UsageError("conv2d_backward: upstream shape mismatch");
    if (!in_grad.same_shape(in)) throw UsageError("conv2d_backward: in_grad shape mismatch");
    if (p_grad.w.size() != p.w.size() || p_grad.b.size() != p.b.size())
        throw UsageError("conv2d_backward: p_grad shape mismatch");

    // Transposed weights [i][j][o][f] make the input-gradient inner loop a
    // contiguous saxpy instead of a strided reduction.
    std::vector<S> wt(p.w.size());
    for (int ij = 0; ij < spec.kh * spec.kw; ++ij)
        for (int f = 0; f < F; ++f)
            for (int o = 0; o < O; ++o)
                wt[(std::size_t(ij) * O + o) * F + f] = p.w[(std::size_t(ij) * F + f) * O + o];

    for (int t = 0; t < To; ++t) {
        for (int c = 0; c < Co; ++c) {
            const S* up_row = up.row(t, c);
            for (int o = 0; o < O; ++o) p_grad.b[std::size_t(o)] += up_row[o];
            for (int i = 0; i < spec.kh; ++i) {
                for (int j = 0; j < spec.kw; ++j) {
                    const int ij = i * spec.kw + j;
                    const S* in_row = in.row(t + i, c + j);
                    S* ig_row = in_grad.row(t + i, c + j);
                    S* wg_base = p_grad.w.data() + std::size_t(ij) * F * O;
                    for (int f = 0; f < F; ++f) {
                        const S a = in_row[f];
                        S* wg = wg_base + std::size_t(f) * O;
                        for (int o = 0; o < O; ++o) wg[o] += a * up_row[o];
                    }
                    const S* wt_base = wt.data() + std::size_t(ij) * O * F;
                    for (int o = 0; o < O; ++o) {
                        const S g = up_row[o];
                        const S* wrow = wt_base + std::size_t(o) * F;
                        for (int f = 0; f < F; ++f) ig_row[f] += g * wrow[f];
                    }
                }
            }
        }
    }
}

// ---- max pooling, stride = kernel, remainder dropped ----------------------

template <typename S>
void maxpool_forward(const Tensor3<S>& in, const MaxPool& spec, Tensor3<S>& out,
                     std::vector<std::int64_t>& argmax) {
    if (spec.ph < 1 || spec.pw < 1) throw UsageError("maxpool: pool dims must be >= 1");
    if (in.t < spec.ph || in.c < spec.pw) throw UsageError("maxpool: input smaller than pool");
    const int To = in.t / spec.ph, Co = in.c / spec.pw;
    out.reshape(To, Co, in.f);
    argmax.resize(std::size_t(out.size()));
    std::size_t cell = 0;
    for (int t = 0; t < To; ++t) {
        for (int c = 0; c < Co; ++c) {
            for (int f = 0; f < in.f; ++f, ++cell) {
                // ties keep the smallest flat index (strict > below)
                std::int64_t best_idx = (std::int64_t(t * spec.ph) * in.c + c * spec.pw) * in.f + f;
                S best = in.data[std::size_t(best_idx)];
                for (int i = 0; i < spec.ph; ++i) {
                    for (int j = 0; j < spec.pw; ++j) {
                        const std::int64_t idx =
                            (std::int64_t(t * spec.ph + i) * in.c + (c * spec.pw + j)) * in.f + f;
                        const S v = in.data[std::size_t(idx)];
                        if (v > best) {
                            best = v;
                            best_idx = idx;
                        }
                    }
                }
                out.at(t, c, f) = best;
                argmax[cell] = best_idx;
            }
        }
    }
}

/// Routes upstream gradient to the recorded argmax positions.
template <typename S>
void maxpool_backward(const Tensor3<S>& up, const std::vector<std::int64_t>& argmax,
                      int in_t, int in_c, int in_f, Tensor3<S>& in_grad) {
    if (argmax.size() != std::size_t(up.size()))
        throw UsageError("maxpool_backward: argmax map size mismatch");
    in_grad.reshape(in_t, in_c, in_f);
    in_grad.fill(S(0));
    for (std::size_t cell = 0; cell < argmax.size(); ++cell)
        in_grad.data[std::size_t(argmax[cell])] += up.data[cell];
}

// ---- elementwise ----------------------------------------------------------

template <typename S>
void relu_forward(const Tensor3<S>& in, Tensor3<S>& out) {
    out.reshape(in.t, in.c, in.f);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        out.data[i] = in.data[i] > S(0) ? in.data[i] : S(0);
}

/// Subgradient 0 at the kink.
template <typename S>
void relu_backward(const Tensor3<S>& in, const Tensor3<S>& up, Tensor3<S>& in_grad) {
    if (!in.same_shape(up)) throw UsageError("relu_backward: shape mismatch");
    in_grad.reshape(in.t, in.c, in.f);
    for (std::size_t i = 0; i < in.data.size(); ++i)
        in_grad.data[i] = in.data[i] > S(0) ? up.data[i] : S(0);
}

// ---- flatten ---------------------------------------------------------------

/// (T, C, F) -> (T*C*F, 1, 1); time-major order means the data is unchanged.
template <typename S>
void flatten(const Tensor3<S>& in, Tensor3<S>& out) {
    out.t = int(in.size());
    out.c = 1;
    out.f = 1;
    out.data = in.data;
}

template <typename S>
void unflatten(const Tensor3<S>& in, int t, int c, int f, Tensor3<S>& out) {
    if (in.size() != std::int64_t(t) * c * f) throw UsageError("unflatten: size mismatch");
    out.t = t;
    out.c = c;
    out.f = f;
    out.data = in.data;
}

// ---- dense -----------------------------------------------------------------

template <typename S>
void dense_forward(const Tensor3<S>& in, const Dense& spec, const ParamBlock<S>& p,
                   Tensor3<S>& out) {
    if (in.size() != spec.d_in) throw UsageError("dense: input size mismatch");
    if (std::int64_t(p.w.size()) != std::int64_t(spec.d_in) * spec.d_out ||
        std::int64_t(p.b.size()) != spec.d_out)
        throw UsageError("dense: parameter shape mismatch");
    out.reshape(spec.d_out, 1, 1);
    std::copy(p.b.begin(), p.b.end(), out.data.begin());
    for (int i = 0; i < spec.d_in; ++i) {
        const S a = in.data[std::size_t(i)];
        const S* wp = p.w.data() + std::size_t(i) * spec.d_out;
        for (int o = 0; o < spec.d_out; ++o) out.data[std::size_t(o)] += a * wp[o];
    }
}

template <typename S>
void dense_backward(const Tensor3<S>& in, const Dense& spec, const ParamBlock<S>& p,
                    const Tensor3<S>& up, Tensor3<S>& in_grad, ParamBlock<S>& p_grad) {
    if (up.size() != spec.d_out) throw UsageError("dense_backward: upstream size mismatch");
    if (in_grad.size() != spec.d_in) throw UsageError("dense_backward: in_grad size mismatch");
    for (int o = 0; o < spec.d_out; ++o) p_grad.b[std::size_t(o)] += up.data[std::size_t(o)];
    for (int i = 0; i < spec.d_in; ++i) {
        const S a = in.data[std::size_t(i)];
        const S* wp = p.w.data() + std::size_t(i) * spec.d_out;
        S* wg = p_grad.w.data() + std::size_t(i) * spec.d_out;
        S dot = S(0);
        for (int o = 0; o < spec.d_out; ++o) {
            wg[o] += a * up.data[std::size_t(o)];
            dot += wp[o] * up.data[std::size_t(o)];
        }
        in_grad.data[std::size_t(i)] += dot;
    }
}

// ---- softmax and fused loss ------------------------------------------------

/// Max-subtracted softmax; output is positive and sums to 1.
template <typename S>
std::vector<S> softmax(std::span<const S> logits) {
    if (logits.empty()) throw UsageError("softmax: empty logits");
    double hi = double(logits[0]);
    for (S z : logits) hi = std::max(hi, double(z));
    std::vector<double> e(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(double(logits[i]) - hi);
        sum += e[i];
    }
    std::vector<S> out(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) out[i] = S(e[i] / sum);
    return out;
}

template <typename S>
struct LossGrad {
    S loss = S(0);
    std::vector<S> logit_grad;
};

/// Cross-entropy fused with softmax: loss = logsumexp(z) - z[label],
/// logit gradient = softmax(z) - onehot(label). Class 1 is "defect".
template <typename S>
LossGrad<S> softmax_cross_entropy(std::span<const S> logits, int label) {
    if (label < 0 || std::size_t(label) >= logits.size())
        throw UsageError("softmax_cross_entropy: label out of range");
    double hi = double(logits[0]);
    for (S z : logits) hi = std::max(hi, double(z));
    double sum = 0.0;
    std::vector<double> e(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        e[i] = std::exp(double(logits[i]) - hi);
        sum += e[i];
    }
    LossGrad<S> out;
    out.loss = S(hi + std::log(sum) - double(logits[std::size_t(label)]));
    out.logit_grad.resize(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        const double p = e[i] / sum;
        out.logit_grad[i] = S(p - (std::size_t(label) == i ? 1.0 : 0.0));
    }
    return out;
}

}  // namespace smcnn::nn
