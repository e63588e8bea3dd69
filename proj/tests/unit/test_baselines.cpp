#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smcnn/baselines.hpp"
#include "smcnn/rng.hpp"

using namespace smcnn;

namespace {

WindowSample make_window(int t, int c, std::uint64_t seed, Label label = Label::Normal) {
    WindowSample w;
    w.values = Tensor3f(t, c, 1);
    Rng rng(seed);
    for (auto& v : w.values.data) v = float(rng.uniform(-1.0, 1.0));
    w.label = label;
    return w;
}

// Covariance of the window observations, computed independently.
std::vector<double> covariance_oracle(const std::vector<WindowSample>& windows,
                                      std::vector<double>& mean_out) {
    const int n = windows.front().values.c;
    std::int64_t obs = 0;
    mean_out.assign(std::size_t(n), 0.0);
    for (const auto& w : windows) {
        obs += w.values.t;
        for (int t = 0; t < w.values.t; ++t)
            for (int c = 0; c < n; ++c) mean_out[std::size_t(c)] += double(w.values.at(t, c, 0));
    }
    for (auto& m : mean_out) m /= double(obs);
    std::vector<double> cov(std::size_t(n) * n, 0.0);
    for (const auto& w : windows)
        for (int t = 0; t < w.values.t; ++t)
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    cov[std::size_t(i) * n + j] +=
                        (double(w.values.at(t, i, 0)) - mean_out[std::size_t(i)]) *
                        (double(w.values.at(t, j, 0)) - mean_out[std::size_t(j)]);
    for (auto& v : cov) v /= double(obs - 1);
    return cov;
}

}  // namespace

TEST_CASE("rank-1 data recovers the line direction") {
    WindowSample w;
    w.values = Tensor3f(100, 2, 1);
    Rng rng(1);
    for (int t = 0; t < 100; ++t) {
        const float a = float(rng.uniform(-1.0, 1.0)) * 0.5f;
        w.values.at(t, 0, 0) = a;
        w.values.at(t, 1, 0) = 2.0f * a;
    }
    const PcaModel model = pca_fit({w}, 2);
    const double inv_sqrt5 = 1.0 / std::sqrt(5.0);
    const double align =
        model.components[0][0] * inv_sqrt5 + model.components[0][1] * 2.0 * inv_sqrt5;
    CHECK(std::fabs(align) == doctest::Approx(1.0).epsilon(1e-8));
    CHECK(model.eigenvalues[1] == doctest::Approx(0.0).epsilon(1e-10));
}

TEST_CASE("eigenpairs satisfy the eigen equation on random data") {
    std::vector<WindowSample> windows;
    for (int i = 0; i < 4; ++i) windows.push_back(make_window(50, 16, 100 + std::uint64_t(i)));
    const PcaModel model = pca_fit(windows, 16);

    std::vector<double> mean;
    const auto cov = covariance_oracle(windows, mean);
    for (int c = 0; c < 16; ++c)
        CHECK(model.mean[std::size_t(c)] == doctest::Approx(mean[std::size_t(c)]).epsilon(1e-10));

    REQUIRE(model.components.size() == 16);
    for (int k = 0; k < 16; ++k) {
        const auto& v = model.components[std::size_t(k)];
        for (int i = 0; i < 16; ++i) {
            double cv = 0.0;
            for (int j = 0; j < 16; ++j) cv += cov[std::size_t(i) * 16 + j] * v[std::size_t(j)];
            REQUIRE(std::fabs(cv - model.eigenvalues[std::size_t(k)] * v[std::size_t(i)]) <= 1e-8);
        }
    }
    // descending spectrum, orthonormal components
    for (int k = 1; k < 16; ++k)
        CHECK(model.eigenvalues[std::size_t(k)] <= model.eigenvalues[std::size_t(k - 1)]);
    for (int a = 0; a < 16; ++a)
        for (int b = 0; b < 16; ++b) {
            double dot = 0.0;
            for (int j = 0; j < 16; ++j)
                dot += model.components[std::size_t(a)][std::size_t(j)] *
                       model.components[std::size_t(b)][std::size_t(j)];
            CHECK(std::fabs(dot - (a == b ? 1.0 : 0.0)) <= 1e-9);
        }
}

TEST_CASE("projections onto distinct components are uncorrelated") {
    std::vector<WindowSample> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(make_window(80, 16, 200 + std::uint64_t(i)));
    const PcaModel model = pca_fit(windows, 16);
    std::vector<double> p0, p1;
    for (const auto& w : windows)
        for (int t = 0; t < w.values.t; ++t) {
            double d0 = 0.0, d1 = 0.0;
            for (int c = 0; c < 16; ++c) {
                const double centered = double(w.values.at(t, c, 0)) - model.mean[std::size_t(c)];
                d0 += centered * model.components[0][std::size_t(c)];
                d1 += centered * model.components[1][std::size_t(c)];
            }
            p0.push_back(d0);
            p1.push_back(d1);
        }
    double m0 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i) {
        m0 += p0[i];
        m1 += p1[i];
    }
    m0 /= double(p0.size());
    m1 /= double(p1.size());
    double cov01 = 0.0;
    for (std::size_t i = 0; i < p0.size(); ++i) cov01 += (p0[i] - m0) * (p1[i] - m1);
    cov01 /= double(p0.size() - 1);
    CHECK(std::fabs(cov01) <= 1e-8);
}

TEST_CASE("projection basics") {
    std::vector<WindowSample> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(make_window(60, 16, 300 + std::uint64_t(i)));
    const PcaModel model = pca_fit(windows, 1);

    // window equal to the mean everywhere projects to (nearly) zero
    WindowSample mean_w;
    mean_w.values = Tensor3f(60, 16, 1);
    for (int t = 0; t < 60; ++t)
        for (int c = 0; c < 16; ++c) mean_w.values.at(t, c, 0) = float(model.mean[std::size_t(c)]);
    for (double v : pca_project(mean_w, model)) CHECK(std::fabs(v) <= 1e-6);

    // mean + component projects to (nearly) one
    WindowSample unit_w = mean_w;
    for (int t = 0; t < 60; ++t)
        for (int c = 0; c < 16; ++c)
            unit_w.values.at(t, c, 0) =
                float(model.mean[std::size_t(c)] + model.components[0][std::size_t(c)]);
    for (double v : pca_project(unit_w, model)) CHECK(v == doctest::Approx(1.0).epsilon(1e-6));

    // random window matches the direct dot-product oracle
    const WindowSample rand_w = make_window(60, 16, 999);
    const auto series = pca_project(rand_w, model);
    for (int t = 0; t < 60; ++t) {
        double dot = 0.0;
        for (int c = 0; c < 16; ++c)
            dot += (double(rand_w.values.at(t, c, 0)) - model.mean[std::size_t(c)]) *
                   model.components[0][std::size_t(c)];
        REQUIRE(std::fabs(series[std::size_t(t)] - dot) <= 1e-12);
    }

    WindowSample bad = make_window(60, 8, 1);
    CHECK_THROWS_AS(pca_project(bad, model), UsageError);
}

TEST_CASE("reconstruction from all components is lossless") {
    std::vector<WindowSample> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(make_window(40, 16, 400 + std::uint64_t(i)));
    const PcaModel model = pca_fit(windows, 16);
    for (int t = 0; t < 40; ++t) {
        std::vector<double> obs(16);
        for (int c = 0; c < 16; ++c) obs[std::size_t(c)] = double(windows[0].values.at(t, c, 0));
        const auto rec = pca_reconstruct(obs, model);
        for (int c = 0; c < 16; ++c)
            REQUIRE(std::fabs(rec[std::size_t(c)] - obs[std::size_t(c)]) <= 1e-8);
    }
}

TEST_CASE("first component maximizes projected variance") {
    std::vector<WindowSample> windows;
    for (int i = 0; i < 3; ++i) windows.push_back(make_window(70, 16, 500 + std::uint64_t(i)));
    const PcaModel model = pca_fit(windows, 1);

    auto direction_variance = [&](const std::vector<double>& dir) {
        std::vector<double> proj;
        for (const auto& w : windows)
            for (int t = 0; t < w.values.t; ++t) {
                double d = 0.0;
                for (int c = 0; c < 16; ++c)
                    d += (double(w.values.at(t, c, 0)) - model.mean[std::size_t(c)]) *
                         dir[std::size_t(c)];
                proj.push_back(d);
            }
        double m = 0.0;
        for (double v : proj) m += v;
        m /= double(proj.size());
        double var = 0.0;
        for (double v : proj) var += (v - m) * (v - m);
        return var / double(proj.size() - 1);
    };

    const double pc_var = direction_variance(model.components[0]);
    Rng rng(77);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> dir(16);
        double norm = 0.0;
        for (auto& d : dir) {
            d = rng.normal();
            norm += d * d;
        }
        norm = std::sqrt(norm);
        for (auto& d : dir) d /= norm;
        CHECK(direction_variance(dir) <= pc_var + 1e-9);
    }
}

TEST_CASE("degenerate pca inputs are rejected") {
    std::vector<WindowSample> flat{make_window(10, 4, 1)};
    flat[0].values.fill(0.25f);
    CHECK_THROWS_AS(pca_fit(flat, 1), DataError);
    CHECK_THROWS_AS(pca_fit({}, 1), DataError);
    CHECK_THROWS_AS(pca_fit({make_window(10, 4, 1)}, 5), UsageError);
}

TEST_CASE("threshold calibration on separated statistics") {
    const std::vector<double> stats{0.1, 0.2, 0.8, 0.9};
    const std::vector<Label> labels{Label::Normal, Label::Normal, Label::Defect, Label::Defect};
    const ThresholdDetector det = threshold_calibrate(stats, labels);
    CHECK(det.threshold == 0.8);  // smallest candidate reaching F1 = 1
    CHECK(det.train_f1 == 1.0);
    CHECK(!det.degenerate);
}

TEST_CASE("threshold calibration handles duplicates and degenerate input") {
    const std::vector<double> equal{0.5, 0.5, 0.5, 0.5};
    const std::vector<Label> labels{Label::Normal, Label::Defect, Label::Normal, Label::Defect};
    const ThresholdDetector det = threshold_calibrate(equal, labels);
    CHECK(det.degenerate);
    CHECK(det.threshold == 0.5);

    const std::vector<double> one_class_stats{0.1, 0.9};
    const std::vector<Label> one_class{Label::Defect, Label::Defect};
    CHECK_THROWS_AS(threshold_calibrate(one_class_stats, one_class), DataError);
}

TEST_CASE("threshold sweep matches an exhaustive oracle") {
    Rng rng(31);
    std::vector<double> stats;
    std::vector<Label> labels;
    for (int i = 0; i < 200; ++i) {
        stats.push_back(rng.uniform(0.0, 1.0));
        labels.push_back(rng.uniform() < 0.4 ? Label::Defect : Label::Normal);
    }
    const ThresholdDetector det = threshold_calibrate(stats, labels);

    double best_f1 = -1.0;
    for (double tau : stats) {
        std::int64_t tp = 0, fp = 0, fn = 0;
        for (std::size_t i = 0; i < stats.size(); ++i) {
            const bool pred = stats[i] >= tau;
            const bool truth = labels[i] == Label::Defect;
            tp += pred && truth;
            fp += pred && !truth;
            fn += !pred && truth;
        }
        const double denom = 2.0 * double(tp) + double(fp) + double(fn);
        best_f1 = std::max(best_f1, denom > 0.0 ? 2.0 * double(tp) / denom : 0.0);
    }
    CHECK(det.train_f1 == best_f1);
}

TEST_CASE("threshold decisions are scale-consistent") {
    Rng rng(37);
    std::vector<double> stats;
    for (int i = 0; i < 50; ++i) stats.push_back(rng.uniform(0.0, 2.0));
    const double tau = 0.9, scale = 3.7;
    for (double s : stats) CHECK((s >= tau) == (s * scale >= tau * scale));
}

TEST_CASE("1d baseline architecture") {
    const ArchDescriptor arch = build_1d_cnn();
    CHECK(arch.input == Shape3{300, 1, 1});
    const auto chain = shape_chain(arch);
    CHECK(chain[3] == Shape3{149, 1, 16});   // after the first conv+relu+pool stage
    CHECK(chain[16] == Shape3{2048, 1, 1});  // flattened width
    CHECK(chain.back() == Shape3{2, 1, 1});

    const auto params = init_params<float>(arch, 1);
    Tensor3f x(300, 1, 1);
    Rng rng(3);
    for (auto& v : x.data) v = float(rng.uniform(-1.0, 1.0));
    const auto probs = forward(arch, params, x);
    CHECK(probs[0] + probs[1] == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("channel splitting and averaged classification") {
    const WindowSample w = make_window(300, 16, 61, Label::Defect);
    const auto samples = channels_as_samples({w});
    REQUIRE(samples.size() == 16);
    for (int c = 0; c < 16; ++c) {
        CHECK(samples[std::size_t(c)].label == Label::Defect);
        float max_abs = 0.0f;
        for (int t = 0; t < 300; ++t) max_abs = std::max(max_abs, std::fabs(w.values.at(t, c, 0)));
        for (int t = 0; t < 300; ++t)
            REQUIRE(samples[std::size_t(c)].x.at(t, 0, 0) == w.values.at(t, c, 0) / max_abs);
    }

    const ArchDescriptor arch = build_1d_cnn();
    const auto params = init_params<float>(arch, 5);
    double mean_p = 0.0;
    classify_1d_window(arch, params, w, &mean_p);
    double oracle = 0.0;
    for (int c = 0; c < 16; ++c) oracle += double(forward(arch, params, extract_channel(w, c))[1]);
    oracle /= 16.0;
    CHECK(std::fabs(mean_p - oracle) <= 1e-9);

    // zero parameters give p = 0.5 on every channel; the boundary is defect
    const auto zero = zero_params<float>(arch);
    double half = 0.0;
    CHECK(classify_1d_window(arch, zero, w, &half) == Label::Defect);
    CHECK(half == 0.5);
}
