#include "smcnn/evaluation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

namespace smcnn {

ConfusionMatrix confusion(std::span<const Label> predictions, std::span<const Label> labels) {
    if (predictions.size() != labels.size())
        throw UsageError("confusion: prediction/label length mismatch");
    if (predictions.empty()) throw UsageError("confusion: empty input");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        const bool pred = predictions[i] == Label::Defect;
        const bool truth = labels[i] == Label::Defect;
        if (pred && truth)
            ++cm.tp;
        else if (pred && !truth)
            ++cm.fp;
        else if (!pred && truth)
            ++cm.fn;
        else
            ++cm.tn;
    }
    return cm;
}

MetricSet metrics(const ConfusionMatrix& cm) {
    if (cm.total() <= 0) throw UsageError("metrics: empty confusion matrix");
    MetricSet m;
    m.accuracy = double(cm.tp + cm.tn) / double(cm.total());
    if (cm.tp + cm.fp > 0) {
        m.precision = double(cm.tp) / double(cm.tp + cm.fp);
    } else {
        m.precision_defined = false;
    }
    if (cm.tp + cm.fn > 0) {
        m.recall = double(cm.tp) / double(cm.tp + cm.fn);
    } else {
        m.recall_defined = false;
    }
    if (m.precision + m.recall > 0.0) {
        m.f1 = 2.0 * m.precision * m.recall / (m.precision + m.recall);
    } else {
        m.f1_defined = false;
    }
    return m;
}

RocResult roc_auc(std::span<const double> scores, std::span<const Label> labels) {
    if (scores.size() != labels.size()) throw UsageError("roc_auc: score/label length mismatch");
    std::int64_t n_pos = 0, n_neg = 0;
    for (Label l : labels) (l == Label::Defect ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) throw DataError("roc_auc: both classes must be present");

    std::vector<std::size_t> order(scores.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });

    RocResult res;
    res.points.push_back({0.0, 0.0});
    std::int64_t tp = 0, fp = 0;
    double auc = 0.0;
    std::size_t i = 0;
    while (i < order.size()) {
        const double s = scores[order[i]];
        // all samples sharing this score advance as a single threshold step
        std::int64_t d_tp = 0, d_fp = 0;
        while (i < order.size() && scores[order[i]] == s) {
            (labels[order[i]] == Label::Defect ? d_tp : d_fp) += 1;
            ++i;
        }
        const double prev_fpr = double(fp) / double(n_neg);
        const double prev_tpr = double(tp) / double(n_pos);
        tp += d_tp;
        fp += d_fp;
        const double fpr = double(fp) / double(n_neg);
        const double tpr = double(tp) / double(n_pos);
        auc += (fpr - prev_fpr) * (tpr + prev_tpr) * 0.5;
        res.points.push_back({fpr, tpr});
    }
    res.auc = auc;
    return res;
}

EvalReport evaluate(std::span<const double> scores, std::span<const Label> predictions,
                    std::span<const Label> labels) {
    EvalReport report;
    report.cm = confusion(predictions, labels);
    report.m = metrics(report.cm);
    report.roc = roc_auc(scores, labels);
    return report;
}

double time_median_ms(const std::function<void()>& fn, int warmup, int repeats) {
    if (repeats < 1) throw UsageError("time_median_ms: repeats must be >= 1");
    using clock = std::chrono::steady_clock;
    for (int i = 0; i < warmup; ++i) fn();
    std::vector<double> samples(static_cast<std::size_t>(repeats));
    for (int i = 0; i < repeats; ++i) {
        const auto t0 = clock::now();
        fn();
        const auto t1 = clock::now();
        samples[std::size_t(i)] =
            std::chrono::duration_cast<std::chrono::duration<double, std::milli>>(t1 - t0).count();
    }
    std::sort(samples.begin(), samples.end());
    const double median = samples[samples.size() / 2];
    // steady_clock resolution is nanoseconds here; spans under ~100ns are noise
    if (median < 1e-4)
        throw UsageError("time_median_ms: measured span below timer resolution; "
                         "repeat the workload more times per measurement");
    return median;
}

std::string environment_descriptor() {
    std::string cpu = "unknown CPU";
    std::ifstream info("/proc/cpuinfo");
    std::string line;
    while (std::getline(info, line)) {
        if (line.rfind("model name", 0) == 0) {
            const auto pos = line.find(':');
            if (pos != std::string::npos) {
                cpu = line.substr(pos + 1);
                while (!cpu.empty() && cpu.front() == ' ') cpu.erase(cpu.begin());
            }
            break;
        }
    }
#ifdef NDEBUG
    const char* build = "release";
#else
    const char* build = "debug";
#endif
    return cpu + "; " + build + " build; compiler " + __VERSION__;
}

BenchReport bench(const GeneratorConfig& gen_cfg, const PreprocessConfig& prep_cfg,
                  const ArchDescriptor& arch, const nn::Parameters<float>& params, int n_windows,
                  int repeats, int warmup) {
    if (n_windows < 1) throw UsageError("bench: n_windows must be >= 1");
    if (repeats < 1) throw UsageError("bench: repeats must be >= 1");

    // One raw record long enough to yield n_windows windows.
    GeneratorConfig cfg = gen_cfg;
    cfg.record_length = prep_cfg.window_length * n_windows;
    std::vector<DefectSpec> defects;
    defects.push_back({cfg.record_length / 2.0, cfg.channel_count / 2.0,
                       cfg.defect_amplitude.mid(), cfg.defect_axial_width.mid(),
                       cfg.defect_circ_spread.mid()});
    const SignalMatrix record = generate_record(cfg, defects, cfg.seed);

    std::vector<WindowSample> windows = preprocess_record(record, prep_cfg);

    BenchReport report;
    report.preprocess_ms_per_window =
        time_median_ms([&] { preprocess_record(record, prep_cfg); }, warmup, repeats) /
        double(windows.size());

    ForwardTrace<float> trace;
    std::size_t next = 0;
    report.inference_ms_per_window = time_median_ms(
        [&] {
            forward_trace(arch, params, windows[next % windows.size()].values, trace);
            ++next;
        },
        warmup, repeats);

    report.fps = 1000.0 / report.inference_ms_per_window;
    report.fps_e2e = 1000.0 / (report.preprocess_ms_per_window + report.inference_ms_per_window);
    report.param_count = param_count(arch);
    const FlopCount fc = flop_count(arch);
    report.mac_count = fc.macs;
    report.flop_count = fc.flops;
    report.comparison_count = fc.comparisons;
    report.environment = environment_descriptor();
    return report;
}

}  // namespace smcnn
