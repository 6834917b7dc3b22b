#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>

#include "detailnet/errors.hpp"
#include "detailnet/ops.hpp"
#include "detailnet/tensor.hpp"
#include "oracles.hpp"

using namespace detailnet;

namespace {

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    if (a.dims() != b.dims()) {
        return false;
    }
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        if (std::memcmp(&a.values()[i], &b.values()[i], sizeof(double)) != 0) {
            return false;
        }
    }
    return true;
}

double max_abs_diff(const Tensor& a, const Tensor& b) {
    REQUIRE(a.dims() == b.dims());
    double m = 0.0;
    for (std::size_t i = 0; i < a.values().size(); ++i) {
        m = std::max(m, std::abs(a.values()[i] - b.values()[i]));
    }
    return m;
}

}  // namespace

TEST_CASE("conv2d: r=1 equals the standard convolution oracle bitwise") {
    Rng rng(7);
    for (int trial = 0; trial < 10; ++trial) {
        ConvSpec spec;
        spec.in_channels = 1 + static_cast<int>(rng.uniform_int(3));
        spec.out_channels = 1 + static_cast<int>(rng.uniform_int(3));
        spec.kernel_h = spec.kernel_w = 1 + 2 * static_cast<int>(rng.uniform_int(2));
        spec.stride = 1 + static_cast<int>(rng.uniform_int(2));
        spec.dilation = 1;
        spec.padding = trial % 2 == 0 ? Padding::kSame : Padding::kValid;

        Tensor x = oracle::random_tensor(rng, {1, spec.in_channels, 8, 9}, -1.0, 1.0);
        Tensor w = oracle::random_tensor(
            rng, {spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w}, -1.0, 1.0);
        Tensor b = oracle::random_tensor(rng, {spec.out_channels}, -0.5, 0.5);

        Tensor fast = conv2d(x, spec, w, b);
        Tensor ref = oracle::conv2d_standard(x, spec, w, b);
        CHECK(bitwise_equal(fast, ref));
    }
}

TEST_CASE("conv2d: 1x1 identity kernel passes input through") {
    ConvSpec spec;
    spec.in_channels = spec.out_channels = 1;
    Rng rng(3);
    Tensor x = oracle::random_tensor(rng, {1, 1, 4, 4}, -2.0, 2.0);
    Tensor w = Tensor::full({1, 1, 1, 1}, 1.0);
    Tensor b = Tensor::zeros({1});
    Tensor y = conv2d(x, spec, w, b);
    CHECK(bitwise_equal(y, x));
}

TEST_CASE("conv2d: dilated same-padding matches the direct-summation oracle") {
    Rng rng(11);
    ConvSpec spec;
    spec.in_channels = 3;
    spec.out_channels = 2;
    spec.kernel_h = spec.kernel_w = 3;
    spec.dilation = 2;
    spec.padding = Padding::kSame;
    Tensor x = oracle::random_tensor(rng, {1, 3, 8, 8}, -1.0, 1.0);
    Tensor w = oracle::random_tensor(rng, {2, 3, 3, 3}, -1.0, 1.0);
    Tensor b = oracle::random_tensor(rng, {2}, -0.5, 0.5);
    Tensor y = conv2d(x, spec, w, b);
    Tensor ref = oracle::conv2d_direct(x, spec, w, b);
    CHECK(max_abs_diff(y, ref) <= 1e-6);
}

TEST_CASE("conv2d: same padding at stride 1 preserves spatial dims for r in {1,2,4,8}") {
    Rng rng(13);
    for (int trial = 0; trial < 20; ++trial) {
        const int r = 1 << rng.uniform_int(4);
        const int h = 3 + static_cast<int>(rng.uniform_int(14));
        const int w = 3 + static_cast<int>(rng.uniform_int(14));
        ConvSpec spec;
        spec.in_channels = 2;
        spec.out_channels = 3;
        spec.kernel_h = spec.kernel_w = 3;
        spec.dilation = r;
        spec.padding = Padding::kSame;
        Tensor x = oracle::random_tensor(rng, {1, 2, h, w}, -1.0, 1.0);
        Tensor w_t = oracle::random_tensor(rng, {3, 2, 3, 3}, -1.0, 1.0);
        Tensor y = conv2d(x, spec, w_t, Tensor::zeros({3}));
        CHECK(y.dim(2) == h);
        CHECK(y.dim(3) == w);
        CHECK(max_abs_diff(y, oracle::conv2d_direct(x, spec, w_t, Tensor::zeros({3}))) <= 1e-6);
    }
}

TEST_CASE("conv2d: linear in the input for fixed weights and zero bias") {
    Rng rng(17);
    ConvSpec spec;
    spec.in_channels = 2;
    spec.out_channels = 2;
    spec.kernel_h = spec.kernel_w = 3;
    spec.dilation = 2;
    Tensor w = oracle::random_tensor(rng, {2, 2, 3, 3}, -1.0, 1.0);
    Tensor b = Tensor::zeros({2});
    Tensor x1 = oracle::random_tensor(rng, {1, 2, 6, 6}, -1.0, 1.0);
    Tensor x2 = oracle::random_tensor(rng, {1, 2, 6, 6}, -1.0, 1.0);
    const double a = 0.7, c = -1.3;
    std::vector<double> mixed(x1.values().size());
    for (std::size_t i = 0; i < mixed.size(); ++i) {
        mixed[i] = a * x1.values()[i] + c * x2.values()[i];
    }
    Tensor xm = Tensor::from_values(x1.dims(), std::move(mixed));
    Tensor lhs = conv2d(xm, spec, w, b);
    Tensor y1 = conv2d(x1, spec, w, b);
    Tensor y2 = conv2d(x2, spec, w, b);
    for (std::size_t i = 0; i < lhs.values().size(); ++i) {
        CHECK(lhs.values()[i] ==
              doctest::Approx(a * y1.values()[i] + c * y2.values()[i]).epsilon(1e-6));
    }
}

TEST_CASE("conv2d: shape and config errors") {
    ConvSpec spec;
    spec.in_channels = 2;
    spec.out_channels = 1;
    spec.kernel_h = spec.kernel_w = 3;
    Tensor x = Tensor::zeros({1, 2, 4, 4});
    CHECK_THROWS_AS(conv2d(x, spec, Tensor::zeros({1, 3, 3, 3}), Tensor::zeros({1})), ShapeError);
    CHECK_THROWS_AS(conv2d(x, spec, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({2})), ShapeError);

    ConvSpec bad = spec;
    bad.stride = 0;
    CHECK_THROWS_AS(conv2d(x, bad, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({1})), ConfigError);
    bad = spec;
    bad.dilation = 0;
    CHECK_THROWS_AS(conv2d(x, bad, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({1})), ConfigError);

    ConvSpec valid = spec;
    valid.padding = Padding::kValid;
    valid.dilation = 2;  // effective kernel 5 > input 4
    CHECK_THROWS_AS(conv2d(x, valid, Tensor::zeros({1, 2, 3, 3}), Tensor::zeros({1})), ShapeError);
}

TEST_CASE("conv2d: deterministic across repeated evaluation") {
    Rng rng(23);
    ConvSpec spec;
    spec.in_channels = 3;
    spec.out_channels = 4;
    spec.kernel_h = spec.kernel_w = 3;
    spec.dilation = 4;
    Tensor x = oracle::random_tensor(rng, {2, 3, 10, 10}, -1.0, 1.0);
    Tensor w = oracle::random_tensor(rng, {4, 3, 3, 3}, -1.0, 1.0);
    Tensor b = oracle::random_tensor(rng, {4}, -1.0, 1.0);
    CHECK(bitwise_equal(conv2d(x, spec, w, b), conv2d(x, spec, w, b)));
}

TEST_CASE("global_avg_pool: means and uniform gradient") {
    Tensor c = Tensor::full({1, 2, 3, 3}, 4.25);
    Tensor yc = global_avg_pool(c);
    CHECK(yc.dims() == Shape{1, 2, 1, 1});
    CHECK(yc.value_at(0) == 4.25);

    Tensor q = Tensor::from_values({1, 1, 2, 2}, {1.0, 2.0, 3.0, 4.0});
    CHECK(global_avg_pool(q).item() == 2.5);

    Rng rng(5);
    Tensor x = oracle::random_tensor(rng, {1, 1, 3, 4}, -1.0, 1.0, true);
    auto report = oracle::check_gradients([&] { return sum(global_avg_pool(x)); }, {{"x", x}}, rng);
    CHECK(report.pass);
    x.zero_grad();
    Tensor loss = sum(global_avg_pool(x));
    backward(loss);
    for (double g : x.grad()) {
        CHECK(g == doctest::Approx(1.0 / 12.0).epsilon(1e-12));
    }
}

TEST_CASE("bilinear_upsample: constants, single sample, ramp oracle") {
    Tensor c = Tensor::full({1, 1, 3, 3}, 0.731);
    Tensor up = bilinear_upsample(c, 2);
    CHECK(up.dims() == Shape{1, 1, 6, 6});
    for (double v : up.values()) {
        CHECK(v == 0.731);
    }

    Tensor single = Tensor::from_values({1, 1, 1, 1}, {2.5});
    Tensor rep = bilinear_upsample(single, 2);
    CHECK(rep.dims() == Shape{1, 1, 2, 2});
    for (double v : rep.values()) {
        CHECK(v == 2.5);
    }

    // Horizontal ramp against the closed-form sampler.
    const int h = 3, w = 5, f = 2;
    std::vector<double> ramp(static_cast<std::size_t>(h) * w);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            ramp[static_cast<std::size_t>(y) * w + x] = 0.25 * x;
        }
    }
    Tensor rt = Tensor::from_values({1, 1, h, w}, ramp);
    Tensor ru = bilinear_upsample(rt, f);
    for (int oy = 0; oy < h * f; ++oy) {
        for (int ox = 0; ox < w * f; ++ox) {
            const double want = oracle::bilinear_sample(ramp, h, w, (oy + 0.5) / f - 0.5,
                                                        (ox + 0.5) / f - 0.5);
            CHECK(ru.value_at(static_cast<std::int64_t>(oy) * w * f + ox) ==
                  doctest::Approx(want).epsilon(1e-6));
        }
    }

    CHECK_THROWS_AS(bilinear_upsample(c, 0), ConfigError);
    // factor 1 is the identity, same underlying tensor
    CHECK(bilinear_upsample(c, 1).impl() == c.impl());
}

TEST_CASE("elementwise: definitions") {
    Tensor x = Tensor::from_values({1, 1, 1, 2}, {-1.0, 2.5});
    Tensor r = relu(x);
    CHECK(r.value_at(0) == 0.0);
    CHECK(r.value_at(1) == 2.5);

    CHECK(sigmoid(Tensor::scalar(0.0)).item() == 0.5);
    CHECK(sigmoid(Tensor::scalar(-1000.0)).item() == 0.0);
    CHECK(sigmoid(Tensor::scalar(1000.0)).item() == 1.0);

    CHECK(softplus(Tensor::scalar(0.0)).item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
    CHECK(softplus(Tensor::scalar(50.0)).item() > 0.0);
    CHECK(softplus(Tensor::scalar(-50.0)).item() > 0.0);

    Rng rng(29);
    Tensor map = oracle::random_tensor(rng, {2, 3, 4, 4}, -1.0, 1.0);
    Tensor ones = Tensor::full({2, 3, 1, 1}, 1.0);
    CHECK(bitwise_equal(channel_scale(map, ones), map));
    CHECK_THROWS_AS(channel_scale(map, Tensor::full({2, 2, 1, 1}, 1.0)), ShapeError);

    Tensor a = oracle::random_tensor(rng, {1, 2, 3, 3}, -1.0, 1.0);
    Tensor b = oracle::random_tensor(rng, {1, 3, 3, 3}, -1.0, 1.0);
    Tensor cat = concat_channels(a, b);
    CHECK(cat.dims() == Shape{1, 5, 3, 3});
    CHECK(cat.value_at(0) == a.value_at(0));
    CHECK(cat.value_at(2 * 9) == b.value_at(0));
    CHECK_THROWS_AS(concat_channels(a, oracle::random_tensor(rng, {1, 2, 4, 3}, 0, 1)), ShapeError);
    CHECK_THROWS_AS(add(a, b), ShapeError);
}

TEST_CASE("batchnorm_frozen: identity, zero scale, scalar oracle") {
    Rng rng(31);
    const double eps = 1e-5;
    Tensor x = oracle::random_tensor(rng, {1, 2, 3, 3}, -2.0, 2.0);

    Tensor gamma = Tensor::full({2}, 1.0);
    Tensor beta = Tensor::zeros({2});
    Tensor mean = Tensor::zeros({2});
    Tensor var = Tensor::full({2}, 1.0 - eps);
    Tensor y = batchnorm_frozen(x, gamma, beta, mean, var, eps);
    for (std::size_t i = 0; i < y.values().size(); ++i) {
        CHECK(y.values()[i] == x.values()[i]);
    }

    Tensor beta2 = Tensor::from_values({2}, {0.7, -0.3});
    Tensor y2 = batchnorm_frozen(x, Tensor::zeros({2}), beta2, mean, var, eps);
    for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < 9; ++j) {
            CHECK(y2.value_at(c * 9 + j) == beta2.value_at(c));
        }
    }

    Tensor g = oracle::random_tensor(rng, {2}, 0.5, 1.5);
    Tensor be = oracle::random_tensor(rng, {2}, -1.0, 1.0);
    Tensor mu = oracle::random_tensor(rng, {2}, -1.0, 1.0);
    Tensor va = oracle::random_tensor(rng, {2}, 0.1, 2.0);
    Tensor y3 = batchnorm_frozen(x, g, be, mu, va, eps);
    for (int c = 0; c < 2; ++c) {
        for (int j = 0; j < 9; ++j) {
            const double xin = x.value_at(c * 9 + j);
            const double want = (xin - mu.value_at(c)) / std::sqrt(va.value_at(c) + eps) *
                                    g.value_at(c) +
                                be.value_at(c);
            CHECK(y3.value_at(c * 9 + j) == doctest::Approx(want).epsilon(1e-6));
        }
    }

    CHECK_THROWS_AS(batchnorm_frozen(x, g, be, mu, Tensor::full({2}, -0.1), eps), DataError);
    CHECK_THROWS_AS(batchnorm_frozen(x, g, be, mu, va, 0.0), ConfigError);
    Tensor g_grad = Tensor::full({2}, 1.0, true);
    CHECK_THROWS_AS(batchnorm_frozen(x, g_grad, be, mu, va, eps), UsageError);
}

TEST_CASE("max_pool2d: values and shapes") {
    Tensor x = Tensor::from_values({1, 1, 4, 4}, {1, 2, 3, 4,    //
                                                  5, 6, 7, 8,    //
                                                  9, 10, 11, 12,  //
                                                  13, 14, 15, 16});
    Tensor y = max_pool2d(x, 3, 2);
    CHECK(y.dims() == Shape{1, 1, 2, 2});
    CHECK(y.value_at(0) == 11.0);  // 3x3 window centred by same-padding
    CHECK(y.value_at(3) == 16.0);
}

TEST_CASE("backward: relu slope, conv finite differences, usage errors") {
    Tensor x = Tensor::scalar(3.0, true);
    Tensor loss = sum(relu(x));
    backward(loss);
    CHECK(x.grad()[0] == 1.0);

    CHECK_THROWS_AS(backward(loss), UsageError);  // consumed tape

    Tensor nx = Tensor::from_values({1, 1, 1, 2}, {1.0, 2.0}, true);
    Tensor ny = relu(nx);
    CHECK_THROWS_AS(backward(ny), UsageError);  // non-scalar

    Rng rng(37);
    ConvSpec spec;
    spec.in_channels = 2;
    spec.out_channels = 2;
    spec.kernel_h = spec.kernel_w = 3;
    spec.dilation = 2;
    Tensor input = oracle::random_tensor(rng, {1, 2, 5, 5}, -1.0, 1.0, true);
    Tensor w = oracle::random_tensor(rng, {2, 2, 3, 3}, -1.0, 1.0, true);
    Tensor b = oracle::random_tensor(rng, {2}, -0.5, 0.5, true);
    auto report = oracle::check_gradients(
        [&] { return sum(conv2d(input, spec, w, b)); },
        {{"input", input}, {"weights", w}, {"bias", b}}, rng);
    INFO(report.worst, " rel err ", report.max_rel_err);
    CHECK(report.pass);
}

TEST_CASE("gradients: pooling, resize, activations, scale") {
    Rng rng(41);
    for (int trial = 0; trial < 3; ++trial) {
        Tensor x = oracle::random_tensor(rng, {1, 2, 5, 6}, 0.2, 1.8, true);

        auto rep = oracle::check_gradients([&] { return sum(max_pool2d(x, 3, 2)); }, {{"mp", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        rep = oracle::check_gradients([&] { return sum(bilinear_resize(x, 8, 9)); }, {{"rs", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        rep = oracle::check_gradients([&] { return sum(sigmoid(x)); }, {{"sg", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        rep = oracle::check_gradients([&] { return sum(softplus(x)); }, {{"sp", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        rep = oracle::check_gradients([&] { return sum(relu(x)); }, {{"rl", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        Tensor wts = oracle::random_tensor(rng, {1, 2, 1, 1}, -1.0, 1.0, true);
        rep = oracle::check_gradients([&] { return sum(channel_scale(x, wts)); },
                                      {{"map", x}, {"wts", wts}}, rng);
        CHECK(rep.pass);
        x.zero_grad();
        wts.zero_grad();

        Tensor g = oracle::random_tensor(rng, {2}, 0.5, 1.5);
        Tensor be = oracle::random_tensor(rng, {2}, -0.5, 0.5);
        Tensor mu = oracle::random_tensor(rng, {2}, -0.5, 0.5);
        Tensor va = oracle::random_tensor(rng, {2}, 0.5, 1.5);
        rep = oracle::check_gradients([&] { return sum(batchnorm_frozen(x, g, be, mu, va)); },
                                      {{"bn", x}}, rng);
        CHECK(rep.pass);
        x.zero_grad();

        Tensor other = oracle::random_tensor(rng, {1, 2, 5, 6}, -1.0, 1.0, true);
        rep = oracle::check_gradients([&] { return sum(add(x, other)); },
                                      {{"a", x}, {"b", other}}, rng);
        CHECK(rep.pass);
        x.zero_grad();
        other.zero_grad();

        rep = oracle::check_gradients([&] { return sum(concat_channels(x, other)); },
                                      {{"ca", x}, {"cb", other}}, rng);
        CHECK(rep.pass);
    }
}

TEST_CASE("no-grad mode suppresses tape construction") {
    Tensor x = Tensor::scalar(1.5, true);
    NoGradGuard guard;
    Tensor y = sum(relu(x));
    CHECK_FALSE(y.requires_grad());
}

TEST_CASE("finite forward outputs on finite inputs") {
    Rng rng(43);
    ConvSpec spec;
    spec.in_channels = 3;
    spec.out_channels = 5;
    spec.kernel_h = spec.kernel_w = 3;
    spec.dilation = 8;
    Tensor x = oracle::random_tensor(rng, {1, 3, 12, 12}, -10.0, 10.0);
    Tensor w = oracle::random_tensor(rng, {5, 3, 3, 3}, -3.0, 3.0);
    Tensor y = conv2d(x, spec, w, Tensor::zeros({5}));
    CHECK(y.all_finite());
    CHECK(softplus(relu(sigmoid(y))).all_finite());
}
