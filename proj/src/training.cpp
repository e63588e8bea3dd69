#include "smcnn/training.hpp"

#include <algorithm>
#include <thread>

namespace smcnn {

void AugmentConfig::validate(int channel_count) const {
    if (channel_roll_max < 0 || channel_roll_max >= channel_count)
        throw UsageError("augment config: channel_roll_max must be in [0, channel_count)");
    if (axial_shift_max < 0) throw UsageError("augment config: axial_shift_max must be >= 0");
    if (!(amplitude_scale.lo > 0.0) || !(amplitude_scale.lo <= amplitude_scale.hi))
        throw UsageError("augment config: amplitude_scale range must be positive with lo <= hi");
    if (apply_probability < 0.0 || apply_probability > 1.0)
        throw UsageError("augment config: apply_probability must be in [0, 1]");
}

void TrainConfig::validate() const {
    if (!(learning_rate > 0.0)) throw UsageError("train config: learning_rate must be > 0");
    if (batch_size < 1) throw UsageError("train config: batch_size must be >= 1");
    if (epochs < 0) throw UsageError("train config: epochs must be >= 0");
    if (beta1 < 0.0 || beta1 >= 1.0 || beta2 < 0.0 || beta2 >= 1.0)
        throw UsageError("train config: beta1/beta2 must be in [0, 1)");
    if (!(epsilon > 0.0)) throw UsageError("train config: epsilon must be > 0");
    if (workers < 1) throw UsageError("train config: workers must be >= 1");
}

namespace {

template <typename T>
void fisher_yates(std::vector<T>& v, Rng& rng) {
    for (std::size_t i = v.size(); i > 1; --i)
        std::swap(v[i - 1], v[std::size_t(rng.uniform_int(0, std::int64_t(i) - 1))]);
}

}  // namespace

std::pair<std::vector<std::size_t>, std::vector<std::size_t>> split_indices(
    std::span<const Label> labels, double ratio, std::uint64_t seed) {
    if (!(ratio > 0.0) || !(ratio < 1.0))
        throw UsageError("split: ratio must be in (0, 1)");
    std::vector<std::size_t> by_class[2];
    for (std::size_t i = 0; i < labels.size(); ++i)
        by_class[labels[i] == Label::Defect ? 1 : 0].push_back(i);
    if (by_class[0].empty() || by_class[1].empty())
        throw DataError("split: both classes must be present");
    Rng rng(seed);
    std::vector<std::size_t> train, test;
    for (auto& cls : by_class) {
        fisher_yates(cls, rng);
        const std::size_t n_train = std::size_t(std::floor(ratio * double(cls.size())));
        train.insert(train.end(), cls.begin(), cls.begin() + std::ptrdiff_t(n_train));
        test.insert(test.end(), cls.begin() + std::ptrdiff_t(n_train), cls.end());
    }
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    return {std::move(train), std::move(test)};
}

std::pair<std::vector<WindowSample>, std::vector<WindowSample>> split_dataset(
    const std::vector<WindowSample>& samples, double ratio, std::uint64_t seed) {
    std::vector<Label> labels(samples.size());
    for (std::size_t i = 0; i < samples.size(); ++i) labels[i] = samples[i].label;
    auto [train_idx, test_idx] = split_indices(labels, ratio, seed);
    std::pair<std::vector<WindowSample>, std::vector<WindowSample>> out;
    for (auto i : train_idx) out.first.push_back(samples[i]);
    for (auto i : test_idx) out.second.push_back(samples[i]);
    return out;
}

Tensor3f roll_tensor(const Tensor3f& in, int time_shift, int channel_roll) {
    Tensor3f out(in.t, in.c, in.f);
    const auto wrap = [](int x, int n) { return ((x % n) + n) % n; };
    for (int t = 0; t < in.t; ++t) {
        const int ts = wrap(t - time_shift, in.t);
        for (int c = 0; c < in.c; ++c) {
            const int cs = wrap(c - channel_roll, in.c);
            for (int f = 0; f < in.f; ++f) out.at(t, c, f) = in.at(ts, cs, f);
        }
    }
    return out;
}

Tensor3f augment_tensor(const Tensor3f& in, const AugmentConfig& cfg, Rng& rng) {
    const int roll = int(rng.uniform_int(0, cfg.channel_roll_max));
    const int shift = int(rng.uniform_int(-cfg.axial_shift_max, cfg.axial_shift_max));
    const double scale = rng.uniform(cfg.amplitude_scale.lo, cfg.amplitude_scale.hi);
    Tensor3f out = roll_tensor(in, shift, roll);
    float max_abs = 0.0f;
    for (auto& v : out.data) {
        v = float(double(v) * scale);
        max_abs = std::max(max_abs, std::fabs(v));
    }
    if (max_abs > 1.0f) {
        for (auto& v : out.data) v /= max_abs;
    }
    return out;
}

WindowSample augment(const WindowSample& sample, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate(sample.values.c);
    WindowSample out;
    out.values = augment_tensor(sample.values, cfg, rng);
    out.label = sample.label;
    out.source_offset = sample.source_offset;
    return out;
}

namespace {

struct WorkerResult {
    nn::GradientBuffer<double> accum;
    double loss_sum = 0.0;
    int correct = 0;
};

void accumulate(nn::GradientBuffer<double>& into, const nn::GradientBuffer<float>& grad) {
    for (std::size_t i = 0; i < into.blocks.size(); ++i) {
        for (std::size_t j = 0; j < into.blocks[i].w.size(); ++j)
            into.blocks[i].w[j] += double(grad.blocks[i].w[j]);
        for (std::size_t j = 0; j < into.blocks[i].b.size(); ++j)
            into.blocks[i].b[j] += double(grad.blocks[i].b[j]);
    }
}

}  // namespace

nn::GradientBuffer<float> compute_batch_gradient(const ArchDescriptor& arch,
                                                 const nn::Parameters<float>& params,
                                                 std::span<const LabeledTensor* const> batch,
                                                 int workers, double* loss_sum_out,
                                                 int* correct_out) {
    if (batch.empty()) throw UsageError("compute_batch_gradient: empty batch");
    const int n_workers = std::max(1, std::min<int>(workers, int(batch.size())));
    std::vector<WorkerResult> results(static_cast<std::size_t>(n_workers));

    auto run_worker = [&](int w) {
        WorkerResult& res = results[std::size_t(w)];
        for (const auto& blk : params.blocks) {
            nn::ParamBlock<double> z;
            z.w.assign(blk.w.size(), 0.0);
            z.b.assign(blk.b.size(), 0.0);
            res.accum.blocks.push_back(std::move(z));
        }
        ForwardTrace<float> trace;
        nn::GradientBuffer<float> sample_grad;
        sample_grad.blocks.resize(params.blocks.size());
        for (std::size_t i = 0; i < params.blocks.size(); ++i) {
            sample_grad.blocks[i].w.assign(params.blocks[i].w.size(), 0.0f);
            sample_grad.blocks[i].b.assign(params.blocks[i].b.size(), 0.0f);
        }
        for (std::size_t s = std::size_t(w); s < batch.size(); s += std::size_t(n_workers)) {
            const LabeledTensor& sample = *batch[s];
            forward_trace(arch, params, sample.x, trace);
            const Tensor3<float>& logits = trace.tensors[arch.layers.size() - 1];
            const auto lg = nn::softmax_cross_entropy(
                std::span<const float>(logits.data.data(), logits.data.size()),
                sample.label == Label::Defect ? 1 : 0);
            res.loss_sum += double(lg.loss);
            const bool predicted_defect = logits.data[1] >= logits.data[0];
            if (predicted_defect == (sample.label == Label::Defect)) res.correct += 1;
            sample_grad.zero();
            backward_from_logit_grad(arch, params, trace,
                                     std::span<const float>(lg.logit_grad), sample_grad);
            accumulate(res.accum, sample_grad);
        }
    };

    if (n_workers == 1) {
        run_worker(0);
    } else {
        std::vector<std::thread> threads;
        threads.reserve(std::size_t(n_workers));
        for (int w = 0; w < n_workers; ++w) threads.emplace_back(run_worker, w);
        for (auto& th : threads) th.join();
    }

    // Fixed-order reduction: worker partials combined in stride order.
    nn::GradientBuffer<float> mean;
    mean.blocks.resize(params.blocks.size());
    const double inv_n = 1.0 / double(batch.size());
    double loss_sum = 0.0;
    int correct = 0;
    for (std::size_t i = 0; i < params.blocks.size(); ++i) {
        mean.blocks[i].w.resize(params.blocks[i].w.size());
        mean.blocks[i].b.resize(params.blocks[i].b.size());
        for (std::size_t j = 0; j < mean.blocks[i].w.size(); ++j) {
            double sum = 0.0;
            for (const auto& res : results) sum += res.accum.blocks[i].w[j];
            mean.blocks[i].w[j] = float(sum * inv_n);
        }
        for (std::size_t j = 0; j < mean.blocks[i].b.size(); ++j) {
            double sum = 0.0;
            for (const auto& res : results) sum += res.accum.blocks[i].b[j];
            mean.blocks[i].b[j] = float(sum * inv_n);
        }
    }
    for (const auto& res : results) {
        loss_sum += res.loss_sum;
        correct += res.correct;
    }
    if (loss_sum_out) *loss_sum_out = loss_sum;
    if (correct_out) *correct_out = correct;
    return mean;
}

std::vector<EpochStats> train(const ArchDescriptor& arch, nn::Parameters<float>& params,
                              const std::vector<LabeledTensor>& samples, const TrainConfig& cfg) {
    cfg.validate();
    if (samples.empty()) throw DataError("train: empty training set");
    if (arch.layers.empty() || !std::holds_alternative<nn::Softmax>(arch.layers.back()))
        throw UsageError("train: architecture must end in Softmax");
    if (cfg.augmentation) cfg.augmentation->validate(samples.front().x.c);

    AdamState<float> state = make_adam_state(params);
    Rng shuffle_rng(cfg.shuffle_seed);
    Rng aug_rng(cfg.augmentation ? cfg.augmentation->seed : 0);
    std::vector<EpochStats> history;
    history.reserve(std::size_t(cfg.epochs));

    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<LabeledTensor> augmented;
        std::vector<const LabeledTensor*> epoch_set;
        augmented.reserve(samples.size());
        epoch_set.reserve(2 * samples.size());
        for (const auto& s : samples) {
            epoch_set.push_back(&s);
            if (cfg.augmentation && aug_rng.uniform() < cfg.augmentation->apply_probability) {
                augmented.push_back({augment_tensor(s.x, *cfg.augmentation, aug_rng), s.label});
                epoch_set.push_back(&augmented.back());
            }
        }
        fisher_yates(epoch_set, shuffle_rng);

        double loss_sum = 0.0;
        std::int64_t correct = 0;
        for (std::size_t start = 0; start < epoch_set.size(); start += std::size_t(cfg.batch_size)) {
            const std::size_t count = std::min(std::size_t(cfg.batch_size), epoch_set.size() - start);
            double batch_loss_sum = 0.0;
            int batch_correct = 0;
            auto grads = compute_batch_gradient(
                arch, params, std::span<const LabeledTensor* const>(epoch_set.data() + start, count),
                cfg.workers, &batch_loss_sum, &batch_correct);
            if (!std::isfinite(batch_loss_sum))
                throw NumericError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(start / std::size_t(cfg.batch_size)) +
                                   " (training diverged)");
            adam_step(params, grads, state, cfg);
            loss_sum += batch_loss_sum;
            correct += batch_correct;
        }
        history.push_back({epoch, loss_sum / double(epoch_set.size()),
                           double(correct) / double(epoch_set.size())});
    }
    return history;
}

std::vector<EpochStats> train(const ArchDescriptor& arch, nn::Parameters<float>& params,
                              const std::vector<WindowSample>& samples, const TrainConfig& cfg) {
    std::vector<LabeledTensor> tensors;
    tensors.reserve(samples.size());
    for (const auto& s : samples) tensors.push_back({s.values, s.label});
    return train(arch, params, tensors, cfg);
}

}  // namespace smcnn
