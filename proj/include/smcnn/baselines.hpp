#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "smcnn/model.hpp"
#include "smcnn/preprocess.hpp"
#include "smcnn/training.hpp"

namespace smcnn {

/// Channel-space PCA: every time sample of every window is one observation
/// of channel_count values.
struct PcaModel {
    std::vector<double> mean;                     // per channel
    std::vector<std::vector<double>> components;  // orthonormal, descending eigenvalue
    std::vector<double> eigenvalues;

    int channel_count() const { return int(mean.size()); }
};

PcaModel pca_fit(const std::vector<WindowSample>& windows, int n_components);

/// Mean-centered projection onto the first component; one value per time sample.
std::vector<double> pca_project(const WindowSample& window, const PcaModel& model);

/// Reconstruction from all retained components (mean + sum of projections).
std::vector<double> pca_reconstruct(std::span<const double> observation, const PcaModel& model);

struct ThresholdDetector {
    double threshold = 0.0;  // statistic >= threshold -> defect
    double train_f1 = 0.0;
    bool degenerate = false;
};

/// Max absolute value of a projected series.
double detection_statistic(std::span<const double> projected);

/// Sweeps candidate thresholds over the sorted unique train statistics and
/// keeps the smallest one maximizing train F1.
ThresholdDetector threshold_calibrate(std::span<const double> stats, std::span<const Label> labels);

/// Time-axis-only counterpart of the signal-matrix net for single-channel
/// input (300, 1, 1): five conv(2x1)+ReLU+pool(2x1) stages with filters
/// 16..256, then Dense 128 -> ReLU -> Dense 2 -> Softmax.
ArchDescriptor build_1d_cnn();

/// Splits each window into 16 single-channel samples carrying the window label.
std::vector<LabeledTensor> channels_as_samples(const std::vector<WindowSample>& windows);

/// One channel as its own max-abs-normalized (W, 1, 1) series; a
/// single-channel pipeline has no access to the other channels' scale.
Tensor3f extract_channel(const WindowSample& window, int channel);

/// Runs every channel independently and averages the defect probabilities;
/// mean >= 0.5 classifies as defect.
Label classify_1d_window(const ArchDescriptor& arch, const nn::Parameters<float>& params,
                         const WindowSample& window, double* mean_p_defect = nullptr);

}  // namespace smcnn
