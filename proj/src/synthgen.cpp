#include "smcnn/synthgen.hpp"

#include <cmath>
#include <limits>
#include <string>

#include "smcnn/rng.hpp"

namespace smcnn {

namespace {

constexpr double kTwoPi = 2.0 * 3.14159265358979323846;

void check_range(const Range& r, const char* name) {
    if (!(r.lo <= r.hi))
        throw UsageError(std::string("generator config: ") + name + " range has lo > hi");
}

}  // namespace

void GeneratorConfig::validate() const {
    if (channel_count < 2) throw UsageError("generator config: channel_count must be >= 2");
    if (record_length < 2) throw UsageError("generator config: record_length must be >= 2");
    if (strand_period <= 0.0) throw UsageError("generator config: strand_period must be > 0");
    check_range(strand_amplitude, "strand_amplitude");
    check_range(drift_coeffs, "drift_coeffs");
    check_range(defect_amplitude, "defect_amplitude");
    check_range(defect_axial_width, "defect_axial_width");
    check_range(defect_circ_spread, "defect_circ_spread");
    if (strand_amplitude.lo < 0.0) throw UsageError("generator config: strand_amplitude must be >= 0");
    if (white_noise_std < 0.0) throw UsageError("generator config: white_noise_std must be >= 0");
    if (defect_amplitude.lo < 0.0) throw UsageError("generator config: defect_amplitude must be >= 0");
    if (defect_axial_width.lo <= 0.0)
        throw UsageError("generator config: defect_axial_width must be > 0");
    if (defect_circ_spread.lo <= 0.0)
        throw UsageError("generator config: defect_circ_spread must be > 0");
    if (strand_phase_jitter < 0.0)
        throw UsageError("generator config: strand_phase_jitter must be >= 0");
}

double defect_profile(double t, double axial_width) {
    if (!(axial_width > 0.0)) throw UsageError("defect_profile: axial_width must be > 0");
    const double q = (t * t) / (axial_width * axial_width);
    return -(1.0 - q) * std::exp(-0.5 * q);
}

double circular_channel_distance(double a, double b, int channel_count) {
    double d = std::fabs(a - b);
    d = std::fmod(d, double(channel_count));
    return std::min(d, double(channel_count) - d);
}

SignalMatrix generate_record(const GeneratorConfig& cfg, const std::vector<DefectSpec>& defects,
                             std::uint64_t rng_seed) {
    cfg.validate();
    const int M = cfg.record_length;
    const int N = cfg.channel_count;

    for (const auto& d : defects) {
        if (d.axial_center < 0.0 || d.axial_center >= double(M))
            throw UsageError("defect axial_center " + std::to_string(d.axial_center) +
                             " outside record [0, " + std::to_string(M) + ")");
        if (d.channel_center < 0.0 || d.channel_center >= double(N))
            throw UsageError("defect channel_center " + std::to_string(d.channel_center) +
                             " outside ring [0, " + std::to_string(N) + ")");
        if (!(d.amplitude > 0.0) || !(d.axial_width > 0.0) || !(d.circ_spread > 0.0))
            throw UsageError("defect amplitude, axial_width and circ_spread must be > 0");
    }

    SignalMatrix rec(M, N);
    rec.seed = rng_seed;
    rec.defects = defects;

    // Defect field, accumulated in list order. Two-defect records are the
    // elementwise sum of the single-defect fields by construction.
    for (const auto& d : defects) {
        const double inv2sc2 = 1.0 / (2.0 * d.circ_spread * d.circ_spread);
        std::vector<double> decay(N);
        for (int n = 0; n < N; ++n) {
            const double dist = circular_channel_distance(double(n), d.channel_center, N);
            decay[n] = std::exp(-dist * dist * inv2sc2);
        }
        for (int m = 0; m < M; ++m) {
            const double pulse = d.amplitude * defect_profile(double(m) - d.axial_center, d.axial_width);
            for (int n = 0; n < N; ++n) rec.at(m, n) += pulse * decay[n];
        }
    }

    // Background (strand + drift + white) into its own buffer, added to the
    // defect field with a single elementwise addition. The draws do not depend
    // on the defect list, so equal seeds share one noise realization.
    std::vector<double> bg(std::size_t(M) * N, 0.0);
    Rng rng(rng_seed);
    const double base_phase = rng.uniform(0.0, kTwoPi);
    std::vector<double> amp(N), phase(N), drift1(N), drift2(N);
    for (int n = 0; n < N; ++n) {
        amp[n] = rng.uniform(cfg.strand_amplitude.lo, cfg.strand_amplitude.hi);
        phase[n] = base_phase + rng.uniform(-cfg.strand_phase_jitter, cfg.strand_phase_jitter);
        drift1[n] = rng.uniform(cfg.drift_coeffs.lo, cfg.drift_coeffs.hi);
        drift2[n] = rng.uniform(cfg.drift_coeffs.lo, cfg.drift_coeffs.hi);
    }
    const double omega = kTwoPi / cfg.strand_period;
    const double inv_span = 1.0 / double(M - 1);
    for (int m = 0; m < M; ++m) {
        const double u = double(m) * inv_span;
        for (int n = 0; n < N; ++n)
            bg[std::size_t(m) * N + n] = amp[n] * std::sin(omega * double(m) + phase[n]) +
                                         drift1[n] * u + drift2[n] * u * u;
    }
    if (cfg.white_noise_std > 0.0) {
        for (std::size_t i = 0; i < bg.size(); ++i) bg[i] += rng.normal(0.0, cfg.white_noise_std);
    }
    for (std::size_t i = 0; i < rec.values.size(); ++i) rec.values[i] += bg[i];
    return rec;
}

namespace {

std::vector<DefectSpec> draw_defects(const GeneratorConfig& cfg, Rng& rng) {
    const int count = 1 + (rng.uniform() < 0.25 ? 1 : 0);
    std::vector<DefectSpec> specs;
    specs.reserve(count);
    for (int i = 0; i < count; ++i) {
        DefectSpec d;
        d.axial_width = rng.uniform(cfg.defect_axial_width.lo, cfg.defect_axial_width.hi);
        const double margin = 3.0 * d.axial_width;
        if (2.0 * margin >= double(cfg.record_length))
            throw UsageError("generator config: record_length too short for configured defect widths");
        d.axial_center = rng.uniform(margin, double(cfg.record_length) - margin);
        d.channel_center = rng.uniform(0.0, double(cfg.channel_count));
        d.amplitude = rng.uniform(cfg.defect_amplitude.lo, cfg.defect_amplitude.hi);
        d.circ_spread = rng.uniform(cfg.defect_circ_spread.lo, cfg.defect_circ_spread.hi);
        specs.push_back(d);
    }
    return specs;
}

}  // namespace

std::vector<SignalMatrix> generate_dataset(const GeneratorConfig& cfg, int n_defect, int n_normal,
                                           std::uint64_t seed) {
    cfg.validate();
    if (n_defect < 0 || n_normal < 0)
        throw UsageError("generate_dataset: record counts must be >= 0");
    std::vector<SignalMatrix> out;
    out.reserve(std::size_t(n_defect) + n_normal);
    const int total = n_defect + n_normal;
    for (int i = 0; i < total; ++i) {
        const std::uint64_t record_seed = derive_seed(seed, 2 * std::uint64_t(i));
        std::vector<DefectSpec> defects;
        if (i < n_defect) {
            Rng spec_rng(derive_seed(seed, 2 * std::uint64_t(i) + 1));
            defects = draw_defects(cfg, spec_rng);
        }
        out.push_back(generate_record(cfg, defects, record_seed));
    }
    return out;
}

double dataset_snr(const GeneratorConfig& cfg) {
    const double strand = cfg.strand_amplitude.mid();
    if (strand <= 0.0) return std::numeric_limits<double>::infinity();
    return cfg.defect_amplitude.mid() / strand;
}

}  // namespace smcnn
