#include "smcnn/preprocess.hpp"

#include <cmath>
#include <string>

namespace smcnn {

SmoothingKernel SmoothingKernel::uniform(int half_width) {
    if (half_width < 0) throw UsageError("smoothing kernel: half_width must be >= 0");
    SmoothingKernel k;
    k.half_width = half_width;
    k.weights.assign(std::size_t(2 * half_width + 1), 1.0 / double(2 * half_width + 1));
    return k;
}

SmoothingKernel SmoothingKernel::gaussian(int half_width, double sigma) {
    if (half_width < 0) throw UsageError("smoothing kernel: half_width must be >= 0");
    if (!(sigma > 0.0)) throw UsageError("smoothing kernel: sigma must be > 0");
    SmoothingKernel k;
    k.half_width = half_width;
    k.weights.resize(std::size_t(2 * half_width + 1));
    double sum = 0.0;
    for (int i = -half_width; i <= half_width; ++i) {
        const double w = std::exp(-0.5 * double(i) * double(i) / (sigma * sigma));
        k.weights[std::size_t(i + half_width)] = w;
        sum += w;
    }
    for (auto& w : k.weights) w /= sum;
    return k;
}

void SmoothingKernel::validate() const {
    if (half_width < 0) throw UsageError("smoothing kernel: half_width must be >= 0");
    if (weights.size() != std::size_t(2 * half_width + 1))
        throw UsageError("smoothing kernel: expected 2K+1 weights");
    double sum = 0.0;
    for (double w : weights) sum += w;
    if (std::fabs(sum - 1.0) > 1e-12)
        throw UsageError("smoothing kernel: weights must sum to 1");
}

void PreprocessConfig::validate() const {
    if (kernel_half_width < 0) throw UsageError("preprocess config: kernel half-width must be >= 0");
    if (trend_degree < 0 || trend_degree > 4)
        throw UsageError("preprocess config: trend_degree must be in [0, 4]");
    if (residual_mean_window < 1) throw UsageError("preprocess config: residual_mean_window must be >= 1");
    if (window_length < 1) throw UsageError("preprocess config: window_length must be >= 1");
    if (stride < 1) throw UsageError("preprocess config: stride must be >= 1");
    if (kernel_type == KernelType::Gaussian && !(gaussian_sigma > 0.0))
        throw UsageError("preprocess config: gaussian_sigma must be > 0");
}

SmoothingKernel PreprocessConfig::make_kernel() const {
    return kernel_type == KernelType::Uniform
               ? SmoothingKernel::uniform(kernel_half_width)
               : SmoothingKernel::gaussian(kernel_half_width, gaussian_sigma);
}

SignalMatrix smooth(const SignalMatrix& x, const SmoothingKernel& kernel) {
    kernel.validate();
    const int M = x.rows, N = x.cols, K = kernel.half_width;
    SignalMatrix out(M, N);
    out.seed = x.seed;
    out.defects = x.defects;
    for (int n = 0; n < N; ++n) {
        for (int m = 0; m < M; ++m) {
            double acc = 0.0, wsum = 0.0;
            const int klo = std::max(-K, -m);
            const int khi = std::min(K, M - 1 - m);
            for (int k = klo; k <= khi; ++k) {
                const double w = kernel.weights[std::size_t(k + K)];
                acc += w * x.at(m + k, n);
                wsum += w;
            }
            out.at(m, n) = acc / wsum;
        }
    }
    return out;
}

namespace {

// Least-squares polynomial fit via the normal equations; degree stays <= 4,
// solved with partial-pivot elimination.
std::vector<double> polyfit_channel(const SignalMatrix& x, int n, int degree) {
    const int M = x.rows;
    const int d = degree + 1;
    std::vector<double> moments(std::size_t(2 * degree + 1), 0.0);  // sum of m^k
    std::vector<double> rhs(std::size_t(d), 0.0);
    for (int m = 0; m < M; ++m) {
        double p = 1.0;
        const double v = x.at(m, n);
        for (int k = 0; k <= 2 * degree; ++k) {
            moments[std::size_t(k)] += p;
            if (k < d) rhs[std::size_t(k)] += p * v;
            p *= double(m);
        }
    }
    std::vector<double> a(std::size_t(d) * d);
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) a[std::size_t(i) * d + j] = moments[std::size_t(i + j)];

    std::vector<double> coef = rhs;
    for (int col = 0; col < d; ++col) {
        int pivot = col;
        for (int r = col + 1; r < d; ++r)
            if (std::fabs(a[std::size_t(r) * d + col]) > std::fabs(a[std::size_t(pivot) * d + col]))
                pivot = r;
        if (pivot != col) {
            for (int j = 0; j < d; ++j)
                std::swap(a[std::size_t(col) * d + j], a[std::size_t(pivot) * d + j]);
            std::swap(coef[std::size_t(col)], coef[std::size_t(pivot)]);
        }
        const double diag = a[std::size_t(col) * d + col];
        if (diag == 0.0) throw DataError("detrend: singular normal equations");
        for (int r = col + 1; r < d; ++r) {
            const double factor = a[std::size_t(r) * d + col] / diag;
            for (int j = col; j < d; ++j)
                a[std::size_t(r) * d + j] -= factor * a[std::size_t(col) * d + j];
            coef[std::size_t(r)] -= factor * coef[std::size_t(col)];
        }
    }
    for (int r = d - 1; r >= 0; --r) {
        double s = coef[std::size_t(r)];
        for (int j = r + 1; j < d; ++j) s -= a[std::size_t(r) * d + j] * coef[std::size_t(j)];
        coef[std::size_t(r)] = s / a[std::size_t(r) * d + r];
    }
    return coef;
}

}  // namespace

std::pair<SignalMatrix, TrendModel> detrend(const SignalMatrix& x, int degree) {
    if (x.rows < 2) throw DataError("detrend: record length must be >= 2");
    if (degree < 0 || degree > 4) throw UsageError("detrend: degree must be in [0, 4]");
    SignalMatrix out(x.rows, x.cols);
    out.seed = x.seed;
    out.defects = x.defects;
    TrendModel model;
    model.coeffs.resize(std::size_t(x.cols));
    for (int n = 0; n < x.cols; ++n) {
        const auto coef = polyfit_channel(x, n, degree);
        for (int m = 0; m < x.rows; ++m) {
            double trend = 0.0, p = 1.0;
            for (double c : coef) {
                trend += c * p;
                p *= double(m);
            }
            out.at(m, n) = x.at(m, n) - trend;
        }
        model.coeffs[std::size_t(n)] = coef;
    }
    return {std::move(out), std::move(model)};
}

SignalMatrix remove_residual_mean(const SignalMatrix& x, int window) {
    if (window < 1) throw UsageError("remove_residual_mean: window must be >= 1");
    const int M = x.rows, N = x.cols;
    SignalMatrix out(M, N);
    out.seed = x.seed;
    out.defects = x.defects;
    const int back = (window - 1) / 2;
    const int fwd = window - 1 - back;
    std::vector<double> prefix(std::size_t(M) + 1);
    for (int n = 0; n < N; ++n) {
        prefix[0] = 0.0;
        for (int m = 0; m < M; ++m) prefix[std::size_t(m) + 1] = prefix[std::size_t(m)] + x.at(m, n);
        for (int m = 0; m < M; ++m) {
            const int lo = std::max(0, m - back);
            const int hi = std::min(M - 1, m + fwd);
            // single-sample windows subtract the sample itself, exactly
            const double mean =
                lo == hi ? x.at(lo, n)
                         : (prefix[std::size_t(hi) + 1] - prefix[std::size_t(lo)]) /
                               double(hi - lo + 1);
            out.at(m, n) = x.at(m, n) - mean;
        }
    }
    return out;
}

std::vector<RawWindow> make_windows(const SignalMatrix& x, int window_length, int stride) {
    if (window_length < 1 || stride < 1)
        throw UsageError("make_windows: window_length and stride must be >= 1");
    if (x.rows < window_length)
        throw DataError("make_windows: record shorter than one window (" +
                        std::to_string(x.rows) + " < " + std::to_string(window_length) + ")");
    std::vector<RawWindow> out;
    for (std::int64_t offset = 0; offset + window_length <= x.rows; offset += stride) {
        RawWindow w;
        w.rows = window_length;
        w.cols = x.cols;
        w.offset = offset;
        w.values.resize(std::size_t(window_length) * x.cols);
        for (int m = 0; m < window_length; ++m)
            for (int n = 0; n < x.cols; ++n)
                w.values[std::size_t(m) * x.cols + n] = x.at(int(offset) + m, n);
        w.label = Label::Normal;
        for (const auto& d : x.defects) {
            if (d.axial_center >= double(offset) && d.axial_center < double(offset + window_length)) {
                w.label = Label::Defect;
                break;
            }
        }
        out.push_back(std::move(w));
    }
    return out;
}

WindowSample normalize(const RawWindow& window) {
    double max_abs = 0.0;
    for (double v : window.values) {
        if (!std::isfinite(v)) throw NumericError("normalize: non-finite input value");
        max_abs = std::max(max_abs, std::fabs(v));
    }
    WindowSample s;
    s.values = Tensor3f(window.rows, window.cols, 1);
    s.label = window.label;
    s.source_offset = window.offset;
    if (max_abs > 0.0) {
        for (std::size_t i = 0; i < window.values.size(); ++i)
            s.values.data[i] = float(window.values[i] / max_abs);
    }
    return s;
}

std::vector<WindowSample> preprocess_record(const SignalMatrix& x, const PreprocessConfig& cfg) {
    cfg.validate();
    const SignalMatrix smoothed = smooth(x, cfg.make_kernel());
    auto [detrended, model] = detrend(smoothed, cfg.trend_degree);
    (void)model;
    const SignalMatrix centered = remove_residual_mean(detrended, cfg.residual_mean_window);
    std::vector<WindowSample> out;
    for (const auto& w : make_windows(centered, cfg.window_length, cfg.stride))
        out.push_back(normalize(w));
    return out;
}

}  // namespace smcnn
