#pragma once

#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "smcnn/model.hpp"
#include "smcnn/preprocess.hpp"
#include "smcnn/rng.hpp"

namespace smcnn {

struct AugmentConfig {
    int channel_roll_max = 15;      // circular, < channel count
    int axial_shift_max = 50;       // circular, samples
    Range amplitude_scale{0.8, 1.2};
    double apply_probability = 1.0; // chance a sample gets a transformed copy per epoch
    std::uint64_t seed = 0;

    void validate(int channel_count) const;
};

struct TrainConfig {
    double learning_rate = 1e-4;
    int batch_size = 32;
    int epochs = 10;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t shuffle_seed = 0;
    std::optional<AugmentConfig> augmentation;
    // Per-batch gradients are reduced over a fixed number of worker strides so
    // results do not depend on the machine's core count.
    int workers = 8;

    void validate() const;
};

template <typename S>
struct AdamState {
    nn::Parameters<S> m;
    nn::Parameters<S> v;
    std::int64_t step = 0;
};

template <typename S>
AdamState<S> make_adam_state(const nn::Parameters<S>& params) {
    AdamState<S> st;
    st.m.blocks.resize(params.blocks.size());
    st.v.blocks.resize(params.blocks.size());
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        st.m.blocks[i].w.assign(params.blocks[i].w.size(), S(0));
        st.m.blocks[i].b.assign(params.blocks[i].b.size(), S(0));
        st.v.blocks[i].w.assign(params.blocks[i].w.size(), S(0));
        st.v.blocks[i].b.assign(params.blocks[i].b.size(), S(0));
    }
    return st;
}

/// Bias-corrected Adam update:
///   m <- b1*m + (1-b1)*g,  v <- b2*v + (1-b2)*g^2,
///   theta <- theta - lr * (m / (1-b1^t)) / (sqrt(v / (1-b2^t)) + eps).
template <typename S>
void adam_step(nn::Parameters<S>& params, const nn::GradientBuffer<S>& grads, AdamState<S>& state,
               const TrainConfig& cfg) {
    if (params.blocks.size() != grads.blocks.size() ||
        params.blocks.size() != state.m.blocks.size())
        throw UsageError("adam_step: parameter/gradient/state shape mismatch");
    state.step += 1;
    const double bc1 = 1.0 - std::pow(cfg.beta1, double(state.step));
    const double bc2 = 1.0 - std::pow(cfg.beta2, double(state.step));
    auto update = [&](std::vector<S>& theta, const std::vector<S>& g, std::vector<S>& m,
                      std::vector<S>& v) {
        if (theta.size() != g.size()) throw UsageError("adam_step: gradient size mismatch");
        for (std::size_t i = 0; i < theta.size(); ++i) {
            const double gi = double(g[i]);
            const double mi = cfg.beta1 * double(m[i]) + (1.0 - cfg.beta1) * gi;
            const double vi = cfg.beta2 * double(v[i]) + (1.0 - cfg.beta2) * gi * gi;
            m[i] = S(mi);
            v[i] = S(vi);
            theta[i] = S(double(theta[i]) -
                         cfg.learning_rate * (mi / bc1) / (std::sqrt(vi / bc2) + cfg.epsilon));
        }
    };
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        update(params.blocks[i].w, grads.blocks[i].w, state.m.blocks[i].w, state.v.blocks[i].w);
        update(params.blocks[i].b, grads.blocks[i].b, state.m.blocks[i].b, state.v.blocks[i].b);
    }
}

/// Stratified split; returns sorted (train, test) index lists.
std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::span<const Label> labels, double ratio, std::uint64_t seed);

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_dataset(
    const std::vector<WindowSample>& samples, double ratio, std::uint64_t seed);

/// Circular shifts along time and channel axes; pure index permutation.
Tensor3f roll_tensor(const Tensor3f& in, int time_shift, int channel_roll);

Tensor3f augment_tensor(const Tensor3f& in, const AugmentConfig& cfg, Rng& rng);

/// Random channel roll + axial shift + amplitude scaling; label preserved,
/// output renormalized into [-1, 1] when scaling pushes magnitude past 1.
WindowSample augment(const WindowSample& sample, const AugmentConfig& cfg, Rng& rng);

struct LabeledTensor {
    Tensor3f x;
    Label label = Label::Normal;
};

struct EpochStats {
    int epoch = 0;      // 1-based
    double loss = 0.0;
    double accuracy = 0.0;
};

/// Mean-of-batch gradient; per-sample float gradients are accumulated into
/// double partials (one per worker stride) and combined in a fixed order.
nn::GradientBuffer<float> compute_batch_gradient(const ArchDescriptor& arch,
                                                 const nn::Parameters<float>& params,
                                                 std::span<const LabeledTensor* const> batch,
                                                 int workers, double* loss_sum_out,
                                                 int* correct_out);

std::vector<EpochStats> train(const ArchDescriptor& arch, nn::Parameters<float>& params,
                              const std::vector<LabeledTensor>& samples, const TrainConfig& cfg);

std::vector<EpochStats> train(const ArchDescriptor& arch, nn::Parameters<float>& params,
                              const std::vector<WindowSample>& samples, const TrainConfig& cfg);

}  // namespace smcnn
