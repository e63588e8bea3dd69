#pragma once

#include <cstdint>
#include <vector>

#include "smcnn/errors.hpp"

namespace smcnn {

struct Range {
    double lo = 0.0;
    double hi = 0.0;
    double mid() const { return 0.5 * (lo + hi); }
};

/// One localized flaw: a bipolar axial pulse with circumferential Gaussian decay.
struct DefectSpec {
    double axial_center = 0.0;    // m0, samples
    double channel_center = 0.0;  // c0 in [0, channel_count), circular
    double amplitude = 0.0;       // A > 0
    double axial_width = 0.0;     // sigma_a, samples
    double circ_spread = 0.0;     // sigma_c, channels
};

struct GeneratorConfig {
    int channel_count = 16;
    int record_length = 300;      // M, samples
    double strand_period = 60.0;  // samples per strand cycle
    Range strand_amplitude{0.15, 0.35};
    double strand_phase_jitter = 0.8;  // radians, per channel
    Range drift_coeffs{-0.4, 0.4};     // linear + quadratic coefficient range
    double white_noise_std = 0.05;
    Range defect_amplitude{0.9, 1.6};
    Range defect_axial_width{6.0, 14.0};  // samples
    Range defect_circ_spread{1.0, 2.2};   // channels
    std::uint64_t seed = 0;

    void validate() const;  // throws UsageError
};

/// Raw multi-channel record, values[m * cols + n], plus its ground truth.
struct SignalMatrix {
    int rows = 0;  // M, axial samples
    int cols = 0;  // N, channels
    std::vector<double> values;
    std::uint64_t seed = 0;
    std::vector<DefectSpec> defects;

    SignalMatrix() = default;
    SignalMatrix(int m, int n) : rows(m), cols(n), values(std::size_t(m) * n, 0.0) {}

    double& at(int m, int n) { return values[std::size_t(m) * cols + n]; }
    const double& at(int m, int n) const { return values[std::size_t(m) * cols + n]; }

    bool has_defect() const { return !defects.empty(); }
};

/// Negated Ricker wavelet: one central valley of depth 1 at t = 0 with two
/// symmetric side peaks at t = +-sigma_a*sqrt(3).
double defect_profile(double t, double axial_width);

/// Shortest distance between channel positions a and b on a ring of n channels.
double circular_channel_distance(double a, double b, int channel_count);

/// Superposes the given defects on strand noise, polynomial drift and white
/// noise. With all noise amplitudes zero the result is exactly the sum of the
/// defect contributions.
SignalMatrix generate_record(const GeneratorConfig& cfg, const std::vector<DefectSpec>& defects,
                             std::uint64_t rng_seed);

/// n_defect records with randomized flaws followed by n_normal clean records.
/// Identical (cfg, seed) reproduce the collection element-exactly.
std::vector<SignalMatrix> generate_dataset(const GeneratorConfig& cfg, int n_defect, int n_normal,
                                           std::uint64_t seed);

/// Configured defect amplitude midpoint over strand amplitude midpoint.
double dataset_snr(const GeneratorConfig& cfg);

}  // namespace smcnn
