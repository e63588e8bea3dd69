#include "smcnn/baselines.hpp"

#include <algorithm>
#include <cmath>

namespace smcnn {

namespace {

// Cyclic Jacobi eigendecomposition of a symmetric matrix; plenty for the
// 16x16 channel covariance.
void jacobi_eigen(std::vector<double>& a, int n, std::vector<double>& eigenvalues,
                  std::vector<std::vector<double>>& eigenvectors) {
    std::vector<double> v(std::size_t(n) * n, 0.0);
    for (int i = 0; i < n; ++i) v[std::size_t(i) * n + i] = 1.0;

    auto at = [&](std::vector<double>& m, int r, int c) -> double& {
        return m[std::size_t(r) * n + c];
    };

    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (int p = 0; p < n; ++p)
            for (int q = p + 1; q < n; ++q) off += at(a, p, q) * at(a, p, q);
        if (off < 1e-24) break;
        for (int p = 0; p < n; ++p) {
            for (int q = p + 1; q < n; ++q) {
                const double apq = at(a, p, q);
                if (std::fabs(apq) < 1e-300) continue;
                const double theta = (at(a, q, q) - at(a, p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::fabs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (int k = 0; k < n; ++k) {
                    const double akp = at(a, k, p), akq = at(a, k, q);
                    at(a, k, p) = c * akp - s * akq;
                    at(a, k, q) = s * akp + c * akq;
                }
                for (int k = 0; k < n; ++k) {
                    const double apk = at(a, p, k), aqk = at(a, q, k);
                    at(a, p, k) = c * apk - s * aqk;
                    at(a, q, k) = s * apk + c * aqk;
                }
                for (int k = 0; k < n; ++k) {
                    const double vkp = at(v, k, p), vkq = at(v, k, q);
                    at(v, k, p) = c * vkp - s * vkq;
                    at(v, k, q) = s * vkp + c * vkq;
                }
            }
        }
    }

    std::vector<int> order(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) order[std::size_t(i)] = i;
    std::stable_sort(order.begin(), order.end(), [&](int x, int y) {
        return at(a, x, x) > at(a, y, y);
    });
    eigenvalues.resize(std::size_t(n));
    eigenvectors.assign(std::size_t(n), std::vector<double>(std::size_t(n)));
    for (int i = 0; i < n; ++i) {
        eigenvalues[std::size_t(i)] = at(a, order[std::size_t(i)], order[std::size_t(i)]);
        for (int k = 0; k < n; ++k)
            eigenvectors[std::size_t(i)][std::size_t(k)] = at(v, k, order[std::size_t(i)]);
    }
}

}  // namespace

PcaModel pca_fit(const std::vector<WindowSample>& windows, int n_components) {
    if (windows.empty()) throw DataError("pca_fit: no windows");
    const int n = windows.front().values.c;
    if (n_components < 1 || n_components > n)
        throw UsageError("pca_fit: n_components must be in [1, channel_count]");
    std::int64_t obs = 0;
    for (const auto& w : windows) {
        if (w.values.c != n) throw UsageError("pca_fit: inconsistent channel counts");
        obs += w.values.t;
    }
    if (obs < 2) throw DataError("pca_fit: need at least 2 observations");

    std::vector<double> mean(std::size_t(n), 0.0);
    for (const auto& w : windows)
        for (int t = 0; t < w.values.t; ++t)
            for (int c = 0; c < n; ++c) mean[std::size_t(c)] += double(w.values.at(t, c, 0));
    for (auto& m : mean) m /= double(obs);

    std::vector<double> cov(std::size_t(n) * n, 0.0);
    std::vector<double> centered(static_cast<std::size_t>(n));
    for (const auto& w : windows) {
        for (int t = 0; t < w.values.t; ++t) {
            for (int c = 0; c < n; ++c)
                centered[std::size_t(c)] = double(w.values.at(t, c, 0)) - mean[std::size_t(c)];
            for (int i = 0; i < n; ++i)
                for (int j = i; j < n; ++j)
                    cov[std::size_t(i) * n + j] += centered[std::size_t(i)] * centered[std::size_t(j)];
        }
    }
    for (int i = 0; i < n; ++i)
        for (int j = i; j < n; ++j) {
            cov[std::size_t(i) * n + j] /= double(obs - 1);
            cov[std::size_t(j) * n + i] = cov[std::size_t(i) * n + j];
        }

    double total_var = 0.0;
    for (int i = 0; i < n; ++i) total_var += cov[std::size_t(i) * n + i];
    if (total_var <= 1e-12) throw DataError("pca_fit: zero-variance input");

    PcaModel model;
    model.mean = std::move(mean);
    std::vector<std::vector<double>> vecs;
    jacobi_eigen(cov, n, model.eigenvalues, vecs);
    model.components.assign(vecs.begin(), vecs.begin() + n_components);
    model.eigenvalues.resize(std::size_t(n));  // keep the full spectrum for reporting
    return model;
}

std::vector<double> pca_project(const WindowSample& window, const PcaModel& model) {
    if (window.values.c != model.channel_count())
        throw UsageError("pca_project: channel count mismatch");
    if (model.components.empty()) throw UsageError("pca_project: model has no components");
    const auto& pc = model.components.front();
    std::vector<double> series(static_cast<std::size_t>(window.values.t));
    for (int t = 0; t < window.values.t; ++t) {
        double dot = 0.0;
        for (int c = 0; c < window.values.c; ++c)
            dot += (double(window.values.at(t, c, 0)) - model.mean[std::size_t(c)]) *
                   pc[std::size_t(c)];
        series[std::size_t(t)] = dot;
    }
    return series;
}

std::vector<double> pca_reconstruct(std::span<const double> observation, const PcaModel& model) {
    const int n = model.channel_count();
    if (int(observation.size()) != n) throw UsageError("pca_reconstruct: size mismatch");
    std::vector<double> out(model.mean);
    for (const auto& pc : model.components) {
        double dot = 0.0;
        for (int c = 0; c < n; ++c)
            dot += (observation[std::size_t(c)] - model.mean[std::size_t(c)]) * pc[std::size_t(c)];
        for (int c = 0; c < n; ++c) out[std::size_t(c)] += dot * pc[std::size_t(c)];
    }
    return out;
}

double detection_statistic(std::span<const double> projected) {
    double max_abs = 0.0;
    for (double v : projected) max_abs = std::max(max_abs, std::fabs(v));
    return max_abs;
}

ThresholdDetector threshold_calibrate(std::span<const double> stats,
                                      std::span<const Label> labels) {
    if (stats.size() != labels.size()) throw UsageError("threshold_calibrate: length mismatch");
    bool has_defect = false, has_normal = false;
    for (Label l : labels) (l == Label::Defect ? has_defect : has_normal) = true;
    if (!has_defect || !has_normal)
        throw DataError("threshold_calibrate: both classes must be present");

    std::vector<double> candidates(stats.begin(), stats.end());
    std::sort(candidates.begin(), candidates.end());
    candidates.erase(std::unique(candidates.begin(), candidates.end()), candidates.end());

    ThresholdDetector best;
    if (candidates.size() == 1) {
        best.threshold = candidates.front();
        best.degenerate = true;
    }

    double best_f1 = -1.0;
    double best_tau = candidates.front();
    for (double tau : candidates) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const bool pred = stats[i] >= tau;
            const bool truth = labels[i] == Label::Defect;
            tp += pred && truth;
            fp += pred && !truth;
            fn += !pred && truth;
        }
        const double denom = 2.0 * double(tp) + double(fp) + double(fn);
        const double f1 = denom > 0.0 ? 2.0 * double(tp) / denom : 0.0;
        if (f1 > best_f1) {  // strict: ties keep the smaller tau already found
            best_f1 = f1;
            best_tau = tau;
        }
    }
    best.threshold = best_tau;
    best.train_f1 = best_f1;
    return best;
}

ArchDescriptor build_1d_cnn() {
    ArchDescriptor arch;
    arch.input = {300, 1, 1};
    auto& L = arch.layers;
    const int filters[5] = {16, 32, 64, 128, 256};
    int c_in = 1;
    for (int stage = 0; stage < 5; ++stage) {
        L.push_back(nn::Conv2D{2, 1, c_in, filters[stage]});
        L.push_back(nn::ReLU{});
        L.push_back(nn::MaxPool{2, 1});
        c_in = filters[stage];
    }
    L.push_back(nn::Flatten{});
    const Shape3 flat = shape_chain(arch).back();
    L.push_back(nn::Dense{flat.t, 128});
    L.push_back(nn::ReLU{});
    L.push_back(nn::Dense{128, 2});
    L.push_back(nn::Softmax{});
    return arch;
}

Tensor3f extract_channel(const WindowSample& window, int channel) {
    if (channel < 0 || channel >= window.values.c)
        throw UsageError("extract_channel: channel out of range");
    Tensor3f out(window.values.t, 1, 1);
    float max_abs = 0.0f;
    for (int t = 0; t < window.values.t; ++t) {
        out.at(t, 0, 0) = window.values.at(t, channel, 0);
        max_abs = std::max(max_abs, std::fabs(out.at(t, 0, 0)));
    }
    // a single-channel pipeline only ever sees its own channel, so the scale
    // is per channel; window-level max-abs would leak cross-channel energy
    if (max_abs > 0.0f)
        for (int t = 0; t < window.values.t; ++t) out.at(t, 0, 0) /= max_abs;
    return out;
}

std::vector<LabeledTensor> channels_as_samples(const std::vector<WindowSample>& windows) {
    std::vector<LabeledTensor> out;
    out.reserve(windows.size() * 16);
    for (const auto& w : windows)
        for (int c = 0; c < w.values.c; ++c) out.push_back({extract_channel(w, c), w.label});
    return out;
}

Label classify_1d_window(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                         const WindowSample& window, double* mean_p_defect) {
    double sum = 0.0;
    for (int c = 0; c < window.values.c; ++c) {
        const auto probs = forward(arch, params, extract_channel(window, c));
        sum += double(probs[1]);
    }
    const double mean = sum / double(window.values.c);
    if (mean_p_defect) *mean_p_defect = mean;
    return mean >= 0.5 ? Label::Defect : Label::Normal;
}

}  // namespace smcnn
