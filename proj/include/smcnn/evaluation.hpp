#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "smcnn/model.hpp"
#include "smcnn/preprocess.hpp"
#include "smcnn/synthgen.hpp"

namespace smcnn {

struct ConfusionMatrix {
    std::int64_t tp = 0, fp = 0, fn = 0, tn = 0;
    std::int64_t total() const { return tp + fp + fn + tn; }
};

/// Defect is the positive class.
ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels);

/// Zero denominators yield value 0 with the matching defined-flag cleared,
/// so batch sweeps never abort on degenerate folds.
struct MetricSet {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    bool precision_defined = true;
    bool recall_defined = true;
    bool f1_defined = true;
};

MetricSet metrics(const ConfusionMatrix& cm);

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
};

struct RocResult {
    std::vector<RocPoint> points;  // from (0,0) to (1,1)
    double auc = 0.0;              // trapezoidal
};

/// Threshold sweep over the unique scores; tied scores advance as one step.
RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels);

struct EvalReport {
    ConfusionMatrix cm;
    MetricSet m;
    RocResult roc;
};

EvalReport evaluate(std::span<const double> scores, std::span<const Label> predictions,
                    std::span<const Label> labels);

struct BenchReport {
    double preprocess_ms_per_window = 0.0;
    double inference_ms_per_window = 0.0;
    double fps = 0.0;      // 1000 / inference_ms
    double fps_e2e = 0.0;  // 1000 / (preprocess_ms + inference_ms)
    std::int64_t param_count = 0;
    std::int64_t mac_count = 0;
    std::int64_t flop_count = 0;
    std::int64_t comparison_count = 0;
    std::string environment;
};

/// Median wall-clock milliseconds of fn over `repeats` timed runs after
/// `warmup` untimed ones. Spans near the timer resolution are rejected.
double time_median_ms(const std::function<void()>& fn, int warmup, int repeats);

/// Single-threaded timing of the preprocessing chain and of one forward pass
/// per window. Count-based fields come from the architecture; absolute
/// timings depend on the hardware recorded in `environment`.
BenchReport bench(const GeneratorConfig& gen_cfg, const PreprocessConfig& prep_cfg,
                  const ArchDescriptor& arch, const nn::Parameters<float>& params, int n_windows,
                  int repeats, int warmup = 10);

std::string environment_descriptor();

}  // namespace smcnn
