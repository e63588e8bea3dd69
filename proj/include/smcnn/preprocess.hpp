#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "smcnn/synthgen.hpp"
#include "smcnn/tensor.hpp"

namespace smcnn {

enum class Label : std::uint8_t { Normal = 0, Defect = 1 };

struct SmoothingKernel {
    int half_width = 5;            // K
    std::vector<double> weights;   // 2K+1 taps, summing to 1

    static SmoothingKernel uniform(int half_width);
    static SmoothingKernel gaussian(int half_width, double sigma);
    void validate() const;  // throws UsageError
};

enum class KernelType { Uniform, Gaussian };
enum class Normalization { MaxAbs };

struct PreprocessConfig {
    int kernel_half_width = 5;
    KernelType kernel_type = KernelType::Uniform;
    double gaussian_sigma = 2.5;
    int trend_degree = 1;
    int residual_mean_window = 300;  // R, samples
    int window_length = 300;         // W, samples
    int stride = 300;
    Normalization normalization = Normalization::MaxAbs;

    void validate() const;
    SmoothingKernel make_kernel() const;
};

/// Per-channel polynomial trend coefficients, constant term first.
struct TrendModel {
    std::vector<std::vector<double>> coeffs;  // [channel][degree + 1]
};

/// Normalized window ready for classification; values in [-1, 1].
struct WindowSample {
    Tensor3f values;  // (W, N, 1)
    Label label = Label::Normal;
    std::int64_t source_offset = 0;
};

/// Unnormalized window cut from a preprocessed record.
struct RawWindow {
    int rows = 0;
    int cols = 0;
    std::vector<double> values;  // [m * cols + n]
    Label label = Label::Normal;
    std::int64_t offset = 0;
};

/// Per-channel weighted moving average; the kernel is truncated to in-range
/// taps at the record ends and renormalized to sum 1.
SignalMatrix smooth(const SignalMatrix& x, const SmoothingKernel& kernel);

/// Per-channel least-squares polynomial fit over the full record, subtracted.
std::pair<SignalMatrix, TrendModel> detrend(const SignalMatrix& x, int degree = 1);

/// Subtracts the centered moving mean of width R, truncated at record ends.
SignalMatrix remove_residual_mean(const SignalMatrix& x, int window);

/// Cuts windows at offsets 0, stride, 2*stride, ...; a trailing partial window
/// is dropped. A window is labeled defect iff some defect center lies in
/// [offset, offset + W).
std::vector<RawWindow> make_windows(const SignalMatrix& x, int window_length, int stride);

/// Max-abs scaling to [-1, 1]; an all-zero window stays all zero.
WindowSample normalize(const RawWindow& window);

/// Full chain: smooth -> detrend -> residual mean removal -> window -> normalize.
std::vector<WindowSample> preprocess_record(const SignalMatrix& x, const PreprocessConfig& cfg);

}  // namespace smcnn
