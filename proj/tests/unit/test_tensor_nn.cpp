#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "smcnn/layers.hpp"
#include "smcnn/rng.hpp"
#include "support/grad_check.hpp"

using namespace smcnn;
using namespace smcnn::nn;
using namespace smcnn_test;

TEST_CASE("circular padding wraps the ring") {
    Tensor3d in(300, 16, 1);
    Tensor3d out;
    circular_pad_channels(in, out);
    CHECK(out.t == 300);
    CHECK(out.c == 18);
    CHECK(out.f == 1);

    Tensor3d x(4, 16, 2);
    for (int t = 0; t < 4; ++t)
        for (int c = 0; c < 16; ++c)
            for (int f = 0; f < 2; ++f) x.at(t, c, f) = double(c);
    circular_pad_channels(x, out);
    for (int t = 0; t < 4; ++t)
        for (int f = 0; f < 2; ++f) {
            CHECK(out.at(t, 0, f) == 15.0);
            CHECK(out.at(t, 17, f) == 0.0);
        }
    for (int t = 0; t < 4; ++t)
        for (int c = 0; c < 16; ++c)
            for (int f = 0; f < 2; ++f) REQUIRE(out.at(t, c + 1, f) == x.at(t, c, f));

    Tensor3d tiny(2, 1, 1);
    CHECK_THROWS_AS(circular_pad_channels(tiny, out), UsageError);
}

TEST_CASE("circular padding backward is the exact adjoint") {
    Rng rng(1);
    const Tensor3d x = random_tensor(3, 5, 2, rng);
    Tensor3d y;
    circular_pad_channels(x, y);
    const Tensor3d up = random_tensor(3, 7, 2, rng);
    Tensor3d xg;
    circular_pad_channels_backward(up, xg);
    CHECK(std::fabs(dot(up.data, y.data) - dot(xg.data, x.data)) <= 1e-12);
}

TEST_CASE("conv2d shapes and constant example") {
    nn::Conv2D spec{2, 2, 1, 16};
    nn::ParamBlock<double> p;
    p.w.assign(std::size_t(2 * 2 * 1 * 16), 0.0);
    p.b.assign(16, 0.0);
    Tensor3d in(300, 18, 1), out;
    conv2d_forward(in, spec, p, out);
    CHECK(out.t == 299);
    CHECK(out.c == 17);
    CHECK(out.f == 16);

    nn::Conv2D one{2, 2, 1, 1};
    nn::ParamBlock<double> pw;
    pw.w.assign(4, 1.0);
    pw.b.assign(1, 0.5);
    Tensor3d c3(10, 8, 1);
    c3.fill(3.0);
    conv2d_forward(c3, one, pw, out);
    for (double v : out.data) CHECK(v == doctest::Approx(12.5).epsilon(1e-12));
}

TEST_CASE("conv2d matches the six-loop oracle") {
    Rng rng(7);
    const Tensor3d in = random_tensor(10, 8, 3, rng);
    nn::Conv2D spec{2, 2, 3, 4};  // (10,8,3) -> (9,7,4); includes the spec'd (2,2) case
    nn::ParamBlock<double> p;
    p.w.resize(std::size_t(2 * 2 * 3 * 4));
    p.b.resize(4);
    for (auto& w : p.w) w = rng.uniform(-1.0, 1.0);
    for (auto& b : p.b) b = rng.uniform(-1.0, 1.0);
    Tensor3d out;
    conv2d_forward(in, spec, p, out);
    for (int t = 0; t < out.t; ++t)
        for (int c = 0; c < out.c; ++c)
            for (int o = 0; o < out.f; ++o) {
                double acc = p.b[std::size_t(o)];
                for (int i = 0; i < spec.kh; ++i)
                    for (int j = 0; j < spec.kw; ++j)
                        for (int f = 0; f < spec.c_in; ++f)
                            acc += in.at(t + i, c + j, f) *
                                   p.w[std::size_t(((i * spec.kw + j) * spec.c_in + f) *
                                                   spec.c_out + o)];
                REQUIRE(std::fabs(out.at(t, c, o) - acc) <= 1e-10);
            }
}

TEST_CASE("conv2d gradients match finite differences") {
    Rng rng(13);
    Tensor3d in = random_tensor(6, 5, 3, rng);
    nn::Conv2D spec{2, 2, 3, 4};
    nn::ParamBlock<double> p;
    p.w.resize(std::size_t(2 * 2 * 3 * 4));
    p.b.resize(4);
    for (auto& w : p.w) w = rng.uniform(-1.0, 1.0);
    for (auto& b : p.b) b = rng.uniform(-1.0, 1.0);
    Tensor3d out;
    conv2d_forward(in, spec, p, out);
    const Tensor3d up = random_tensor(out.t, out.c, out.f, rng);

    Tensor3d in_grad(in.t, in.c, in.f);
    nn::ParamBlock<double> p_grad;
    p_grad.w.assign(p.w.size(), 0.0);
    p_grad.b.assign(p.b.size(), 0.0);
    conv2d_backward(in, spec, p, up, in_grad, p_grad);

    auto loss = [&] {
        Tensor3d o;
        conv2d_forward(in, spec, p, o);
        return dot(up.data, o.data);
    };
    CHECK(max_fd_error(p.w, loss, p_grad.w) < 1e-4);
    CHECK(max_fd_error(p.b, loss, p_grad.b) < 1e-4);
    CHECK(max_fd_error(in.data, loss, in_grad.data) < 1e-4);
}

TEST_CASE("conv2d is bilinear in input and weights") {
    Rng rng(53);
    nn::Conv2D spec{2, 2, 2, 3};
    auto rand_params = [&] {
        nn::ParamBlock<double> p;
        p.w.resize(std::size_t(2 * 2 * 2 * 3));
        p.b.assign(3, 0.0);
        for (auto& w : p.w) w = rng.uniform(-1.0, 1.0);
        return p;
    };
    const Tensor3d x = random_tensor(5, 4, 2, rng);
    const Tensor3d y = random_tensor(5, 4, 2, rng);
    const nn::ParamBlock<double> p = rand_params();
    const nn::ParamBlock<double> q = rand_params();
    const double a = 1.3, b = -0.7;

    Tensor3d combo(5, 4, 2);
    for (std::size_t i = 0; i < combo.data.size(); ++i)
        combo.data[i] = a * x.data[i] + b * y.data[i];
    Tensor3d ox, oy, oc;
    conv2d_forward(x, spec, p, ox);
    conv2d_forward(y, spec, p, oy);
    conv2d_forward(combo, spec, p, oc);
    for (std::size_t i = 0; i < oc.data.size(); ++i)
        REQUIRE(std::fabs(oc.data[i] - (a * ox.data[i] + b * oy.data[i])) <= 1e-12);

    nn::ParamBlock<double> pq = p;
    for (std::size_t i = 0; i < pq.w.size(); ++i) pq.w[i] = a * p.w[i] + b * q.w[i];
    Tensor3d op, oq, opq;
    conv2d_forward(x, spec, p, op);
    conv2d_forward(x, spec, q, oq);
    conv2d_forward(x, spec, pq, opq);
    for (std::size_t i = 0; i < opq.data.size(); ++i)
        REQUIRE(std::fabs(opq.data[i] - (a * op.data[i] + b * oq.data[i])) <= 1e-12);
}

TEST_CASE("conv2d backward trivial identities") {
    Rng rng(17);
    const Tensor3d in = random_tensor(5, 4, 2, rng);
    nn::Conv2D spec{2, 2, 2, 3};
    nn::ParamBlock<double> p;
    p.w.resize(std::size_t(2 * 2 * 2 * 3));
    for (auto& w : p.w) w = rng.uniform(-1.0, 1.0);
    p.b.assign(3, 0.0);
    Tensor3d out;
    conv2d_forward(in, spec, p, out);

    Tensor3d in_grad(in.t, in.c, in.f);
    nn::ParamBlock<double> p_grad;
    p_grad.w.assign(p.w.size(), 0.0);
    p_grad.b.assign(p.b.size(), 0.0);
    Tensor3d zero_up(out.t, out.c, out.f);
    conv2d_backward(in, spec, p, zero_up, in_grad, p_grad);
    for (double v : in_grad.data) CHECK(v == 0.0);
    for (double v : p_grad.w) CHECK(v == 0.0);

    const Tensor3d up = random_tensor(out.t, out.c, out.f, rng);
    p_grad.zero();
    in_grad.fill(0.0);
    conv2d_backward(in, spec, p, up, in_grad, p_grad);
    for (int o = 0; o < 3; ++o) {
        double sum = 0.0;
        for (int t = 0; t < up.t; ++t)
            for (int c = 0; c < up.c; ++c) sum += up.at(t, c, o);
        CHECK(p_grad.b[std::size_t(o)] == doctest::Approx(sum).epsilon(1e-12));
    }
}

TEST_CASE("maxpool shapes follow floor semantics") {
    Tensor3d a(299, 17, 16), out;
    std::vector<std::int64_t> idx;
    maxpool_forward(a, nn::MaxPool{2, 1}, out, idx);
    CHECK(out.t == 149);
    CHECK(out.c == 17);
    CHECK(out.f == 16);

    Tensor3d b(16, 13, 256);
    maxpool_forward(b, nn::MaxPool{2, 2}, out, idx);
    CHECK(out.t == 8);
    CHECK(out.c == 6);
    CHECK(out.f == 256);
}

TEST_CASE("maxpool picks the max and records its index") {
    Tensor3d in(2, 1, 1);
    in.at(0, 0, 0) = 1.0;
    in.at(1, 0, 0) = 5.0;
    Tensor3d out;
    std::vector<std::int64_t> idx;
    maxpool_forward(in, nn::MaxPool{2, 1}, out, idx);
    CHECK(out.at(0, 0, 0) == 5.0);
    CHECK(idx[0] == 1);

    in.at(1, 0, 0) = 1.0;  // tie -> smallest flat index
    maxpool_forward(in, nn::MaxPool{2, 1}, out, idx);
    CHECK(idx[0] == 0);
}

TEST_CASE("maxpool backward routes gradient mass") {
    Rng rng(23);
    const Tensor3d in = random_tensor(6, 4, 3, rng, true);
    Tensor3d out;
    std::vector<std::int64_t> idx;
    maxpool_forward(in, nn::MaxPool{2, 2}, out, idx);
    const Tensor3d up = random_tensor(out.t, out.c, out.f, rng);
    Tensor3d in_grad;
    maxpool_backward(up, idx, in.t, in.c, in.f, in_grad);
    double up_sum = 0.0, grad_sum = 0.0;
    for (double v : up.data) up_sum += v;
    for (double v : in_grad.data) grad_sum += v;
    CHECK(grad_sum == doctest::Approx(up_sum).epsilon(1e-12));

    Tensor3d tie(2, 1, 1);
    tie.fill(3.0);
    maxpool_forward(tie, nn::MaxPool{2, 1}, out, idx);
    Tensor3d tie_up(1, 1, 1);
    tie_up.at(0, 0, 0) = 1.0;
    maxpool_backward(tie_up, idx, 2, 1, 1, in_grad);
    CHECK(in_grad.at(0, 0, 0) == 1.0);
    CHECK(in_grad.at(1, 0, 0) == 0.0);
}

TEST_CASE("maxpool gradient matches finite differences away from ties") {
    Rng rng(29);
    Tensor3d in = random_tensor(6, 4, 2, rng, true);
    Tensor3d out;
    std::vector<std::int64_t> idx;
    maxpool_forward(in, nn::MaxPool{2, 2}, out, idx);
    const Tensor3d up = random_tensor(out.t, out.c, out.f, rng);
    Tensor3d in_grad;
    maxpool_backward(up, idx, in.t, in.c, in.f, in_grad);
    auto loss = [&] {
        Tensor3d o;
        std::vector<std::int64_t> scratch;
        maxpool_forward(in, nn::MaxPool{2, 2}, o, scratch);
        return dot(up.data, o.data);
    };
    CHECK(max_fd_error(in.data, loss, in_grad.data) < 1e-4);
}

TEST_CASE("relu basics and gradient") {
    Tensor3d in(3, 1, 1);
    in.data = {-1.0, 0.0, 2.0};
    Tensor3d out;
    relu_forward(in, out);
    CHECK(out.data == std::vector<double>{0.0, 0.0, 2.0});

    Tensor3d up(3, 1, 1);
    up.data = {5.0, 7.0, 9.0};
    Tensor3d grad;
    relu_backward(in, up, grad);
    CHECK(grad.data == std::vector<double>{0.0, 0.0, 9.0});  // subgradient 0 at 0

    Rng rng(31);
    Tensor3d x = random_tensor(4, 3, 2, rng, true);
    relu_forward(x, out);
    const Tensor3d u = random_tensor(4, 3, 2, rng);
    relu_backward(x, u, grad);
    auto loss = [&] {
        Tensor3d o;
        relu_forward(x, o);
        return dot(u.data, o.data);
    };
    CHECK(max_fd_error(x.data, loss, grad.data) < 1e-4);
}

TEST_CASE("flatten keeps time-major order") {
    Tensor3d big(8, 6, 256);
    Tensor3d flat;
    flatten(big, flat);
    CHECK(flat.t == 12288);
    CHECK(flat.c == 1);
    CHECK(flat.f == 1);

    Rng rng(37);
    const Tensor3d x = random_tensor(3, 4, 5, rng);
    flatten(x, flat);
    CHECK(flat.data == x.data);
    Tensor3d back;
    unflatten(flat, 3, 4, 5, back);
    CHECK(back.data == x.data);
    CHECK_THROWS_AS(unflatten(flat, 3, 4, 4, back), UsageError);
}

TEST_CASE("dense forward and gradients") {
    Rng rng(41);
    Tensor3d in = random_tensor(10, 1, 1, rng);
    nn::Dense spec{10, 7};
    nn::ParamBlock<double> p;
    p.w.resize(70);
    p.b.resize(7);
    for (auto& w : p.w) w = rng.uniform(-1.0, 1.0);
    for (auto& b : p.b) b = rng.uniform(-1.0, 1.0);
    Tensor3d out;
    dense_forward(in, spec, p, out);
    for (int o = 0; o < 7; ++o) {
        double acc = p.b[std::size_t(o)];
        for (int i = 0; i < 10; ++i) acc += in.data[std::size_t(i)] * p.w[std::size_t(i * 7 + o)];
        REQUIRE(std::fabs(out.data[std::size_t(o)] - acc) <= 1e-12);
    }

    const Tensor3d up = random_tensor(7, 1, 1, rng);
    Tensor3d in_grad(10, 1, 1);
    nn::ParamBlock<double> p_grad;
    p_grad.w.assign(70, 0.0);
    p_grad.b.assign(7, 0.0);
    dense_backward(in, spec, p, up, in_grad, p_grad);
    auto loss = [&] {
        Tensor3d o;
        dense_forward(in, spec, p, o);
        return dot(up.data, o.data);
    };
    CHECK(max_fd_error(p.w, loss, p_grad.w) < 1e-4);
    CHECK(max_fd_error(p.b, loss, p_grad.b) < 1e-4);
    CHECK(max_fd_error(in.data, loss, in_grad.data) < 1e-4);
}

TEST_CASE("softmax basics") {
    const std::vector<double> z{0.0, 0.0};
    const auto p = nn::softmax(std::span<const double>(z));
    CHECK(p[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(p[1] == doctest::Approx(0.5).epsilon(1e-12));

    const std::vector<double> big{1000.0, 0.0};
    const auto q = nn::softmax(std::span<const double>(big));
    CHECK(std::isfinite(q[0]));
    CHECK(q[0] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(q[1] == doctest::Approx(0.0).epsilon(1e-12));

    Rng rng(43);
    for (int i = 0; i < 20; ++i) {
        const std::vector<double> a{rng.uniform(-5.0, 5.0), rng.uniform(-5.0, 5.0)};
        const double c = rng.uniform(-100.0, 100.0);
        const std::vector<double> b{a[0] + c, a[1] + c};
        const auto pa = nn::softmax(std::span<const double>(a));
        const auto pb = nn::softmax(std::span<const double>(b));
        CHECK(std::fabs(pa[0] - pb[0]) <= 1e-12);
        CHECK(pa[0] + pa[1] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("fused softmax cross-entropy") {
    const std::vector<double> z{0.0, 0.0};
    const auto lg = nn::softmax_cross_entropy(std::span<const double>(z), 1);
    CHECK(lg.loss == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(lg.logit_grad[0] == doctest::Approx(0.5).epsilon(1e-12));
    CHECK(lg.logit_grad[1] == doctest::Approx(-0.5).epsilon(1e-12));

    Rng rng(47);
    for (int label = 0; label <= 1; ++label) {
        std::vector<double> logits{rng.uniform(-2.0, 2.0), rng.uniform(-2.0, 2.0)};
        auto out = nn::softmax_cross_entropy(std::span<const double>(logits), label);
        CHECK(out.loss >= 0.0);
        auto loss = [&] {
            return double(nn::softmax_cross_entropy(std::span<const double>(logits), label).loss);
        };
        CHECK(max_fd_error(logits, loss, out.logit_grad) < 1e-4);

        // loss strictly decreases in the true-class logit
        std::vector<double> bumped = logits;
        bumped[std::size_t(label)] += 0.1;
        CHECK(nn::softmax_cross_entropy(std::span<const double>(bumped), label).loss < out.loss);
    }
}
