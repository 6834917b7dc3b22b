#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "detailnet/errors.hpp"
#include "detailnet/metrics.hpp"
#include "detailnet/network.hpp"
#include "detailnet/ops.hpp"
#include "oracles.hpp"

using namespace detailnet;

namespace {

Tensor flip_last(const Tensor& t) {
    const int w = t.dim(t.ndim() - 1);
    std::vector<double> out(t.values().size());
    const std::int64_t rows = t.numel() / w;
    for (std::int64_t r = 0; r < rows; ++r) {
        for (int x = 0; x < w; ++x) {
            out[static_cast<std::size_t>(r * w + x)] = t.value_at(r * w + (w - 1 - x));
        }
    }
    return Tensor::from_values(t.dims(), std::move(out));
}

NetworkConfig tiny_config() {
    NetworkConfig cfg;
    cfg.stem_channels = 8;
    cfg.stage_channels = {8, 12, 16, 24};
    cfg.stage_blocks = {1, 1, 1, 1};
    cfg.reduced_channels = 8;
    cfg.preset = "tiny-test";
    return cfg;
}

RgbdSample sample_from(const Tensor& rgb, const Tensor& depth) {
    RgbdSample s;
    s.rgb = rgb;
    s.depth = depth;
    s.mask = Tensor::full(depth.dims(), 1.0);
    s.intrinsics = {static_cast<double>(depth.dim(2)), static_cast<double>(depth.dim(2)),
                    depth.dim(2) / 2.0, depth.dim(1) / 2.0};
    s.id = "m";
    return s;
}

}  // namespace

TEST_CASE("compute_metrics: closed forms") {
    Rng rng(1);
    Tensor truth = oracle::random_tensor(rng, {1, 1, 4, 5}, 0.5, 4.0);
    Tensor ones = Tensor::full({1, 1, 4, 5}, 1.0);

    MetricsReport perfect = compute_metrics(truth, truth, ones);
    CHECK(perfect.rel == 0.0);
    CHECK(perfect.rms == 0.0);
    CHECK(perfect.log10 == 0.0);
    CHECK(perfect.delta1 == 1.0);
    CHECK(perfect.delta2 == 1.0);
    CHECK(perfect.delta3 == 1.0);
    CHECK(perfect.pixel_count == 20);

    Tensor t2 = Tensor::full({1, 1, 1, 1}, 2.0);
    Tensor p1 = Tensor::full({1, 1, 1, 1}, 1.0);
    Tensor m1 = Tensor::full({1, 1, 1, 1}, 1.0);
    MetricsReport r = compute_metrics(p1, t2, m1);
    CHECK(r.rel == 0.5);
    CHECK(r.rms == 1.0);
    CHECK(std::abs(r.log10 - std::log10(2.0)) <= 1e-15);
    // ratio 2 exceeds 1.25^3 = 1.953125, so every threshold misses
    CHECK(r.delta1 == 0.0);
    CHECK(r.delta2 == 0.0);
    CHECK(r.delta3 == 0.0);

    std::vector<double> scaled(truth.values().size());
    for (std::size_t i = 0; i < scaled.size(); ++i) {
        scaled[i] = 1.2 * truth.values()[i];
    }
    MetricsReport s = compute_metrics(Tensor::from_values(truth.dims(), std::move(scaled)), truth,
                                      ones);
    CHECK(std::abs(s.rel - 0.2) <= 1e-12);
    CHECK(s.delta1 == 1.0);
}

TEST_CASE("compute_metrics: scale sensitivity, nesting, flip equivariance") {
    Rng rng(2);
    for (int trial = 0; trial < 20; ++trial) {
        Tensor truth = oracle::random_tensor(rng, {1, 1, 6, 7}, 0.3, 5.0);
        Tensor pred = oracle::random_tensor(rng, {1, 1, 6, 7}, 0.3, 5.0);
        Tensor mask = Tensor::full({1, 1, 6, 7}, 1.0);

        MetricsReport r = compute_metrics(pred, truth, mask);
        CHECK(r.delta1 <= r.delta2);
        CHECK(r.delta2 <= r.delta3);
        CHECK(r.delta3 <= 1.0);
        CHECK(r.rel >= 0.0);

        // pixel visit order changes, so sums agree only to rounding
        MetricsReport flipped = compute_metrics(flip_last(pred), flip_last(truth),
                                                flip_last(mask));
        CHECK(std::abs(flipped.rel - r.rel) <= 1e-12);
        CHECK(std::abs(flipped.rms - r.rms) <= 1e-12);
        CHECK(std::abs(flipped.log10 - r.log10) <= 1e-12);
        CHECK(flipped.delta1 == r.delta1);
        CHECK(flipped.delta2 == r.delta2);
        CHECK(flipped.delta3 == r.delta3);
    }

    Tensor truth = oracle::random_tensor(rng, {1, 1, 3, 3}, 0.5, 2.0);
    Tensor mask = Tensor::full({1, 1, 3, 3}, 1.0);
    std::vector<double> c15(truth.values().size());
    for (std::size_t i = 0; i < c15.size(); ++i) {
        c15[i] = 1.5 * truth.values()[i];
    }
    MetricsReport scaled = compute_metrics(Tensor::from_values(truth.dims(), std::move(c15)),
                                           truth, mask);
    CHECK(scaled.rel > 0.0);
}

TEST_CASE("compute_metrics: resizing and errors") {
    Rng rng(3);
    Tensor truth = oracle::random_tensor(rng, {1, 1, 8, 8}, 0.5, 3.0);
    Tensor mask = Tensor::full({1, 1, 8, 8}, 1.0);
    Tensor pred_half = oracle::random_tensor(rng, {1, 1, 4, 4}, 0.5, 3.0);

    MetricsReport auto_resized = compute_metrics(pred_half, truth, mask);
    MetricsReport manual = compute_metrics(bilinear_resize(pred_half, 8, 8), truth, mask);
    CHECK(auto_resized.rel == manual.rel);
    CHECK(auto_resized.rms == manual.rms);

    CHECK_THROWS_AS(compute_metrics(pred_half, truth, Tensor::full({1, 1, 4, 4}, 1.0)),
                    ShapeError);
    CHECK_THROWS_AS(compute_metrics(truth, truth, Tensor::zeros({1, 1, 8, 8})), DataError);
    Tensor bad = truth.clone();
    bad.mutable_values()[3] = -0.5;
    CHECK_THROWS_AS(compute_metrics(bad, truth, mask), DataError);
    CHECK_THROWS_AS(compute_metrics(truth, bad, mask), DataError);
}

TEST_CASE("report serialization carries every field") {
    MetricsReport r;
    r.rel = 0.125;
    r.rms = 0.5;
    r.log10 = 0.0625;
    r.delta1 = 0.75;
    r.delta2 = 0.875;
    r.delta3 = 1.0;
    r.pixel_count = 42;
    const std::string text = r.to_text();
    CHECK(text.find("rel=0.125\n") != std::string::npos);
    CHECK(text.find("rms=0.5\n") != std::string::npos);
    CHECK(text.find("log10=0.0625\n") != std::string::npos);
    CHECK(text.find("delta1=0.75\n") != std::string::npos);
    CHECK(text.find("pixel_count=42\n") != std::string::npos);
    CHECK(MetricsReport::csv_header() == "rel,rms,log10,delta1,delta2,delta3,pixel_count");
    CHECK(r.to_csv_row() == "0.125,0.5,0.0625,0.75,0.875,1,42");
}

TEST_CASE("evaluate_dataset: singleton, duplication invariance, two-sample oracle") {
    Rng rng(4);
    Network net = build_network(tiny_config(), 5);
    Tensor rgb1 = oracle::random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    Tensor d1 = oracle::random_tensor(rng, {1, 16, 16}, 0.5, 4.0);
    Tensor rgb2 = oracle::random_tensor(rng, {3, 16, 16}, 0.0, 1.0);
    Tensor d2 = oracle::random_tensor(rng, {1, 16, 16}, 0.5, 4.0);
    RgbdSample s1 = sample_from(rgb1, d1);
    RgbdSample s2 = sample_from(rgb2, d2);

    MetricsReport single = evaluate_dataset({s1}, net);
    {
        NoGradGuard guard;
        Tensor image = Tensor::from_values({1, 3, 16, 16}, std::vector<double>(rgb1.values()));
        Tensor pred = predict(image, net.params, net.config, false);
        Tensor truth = Tensor::from_values({1, 1, 16, 16}, std::vector<double>(d1.values()));
        MetricsReport direct = compute_metrics(pred, truth, Tensor::full({1, 1, 16, 16}, 1.0));
        CHECK(single.rel == direct.rel);
        CHECK(single.rms == direct.rms);
        CHECK(single.pixel_count == direct.pixel_count);
    }

    MetricsReport duplicated = evaluate_dataset({s1, s1, s1}, net);
    CHECK(std::abs(duplicated.rel - single.rel) <= 1e-14);
    CHECK(std::abs(duplicated.rms - single.rms) <= 1e-14);
    CHECK(duplicated.delta1 == single.delta1);

    MetricsReport both = evaluate_dataset({s1, s2}, net);
    MetricsReport other = evaluate_dataset({s2}, net);
    const double n1 = static_cast<double>(single.pixel_count);
    const double n2 = static_cast<double>(other.pixel_count);
    CHECK(std::abs(both.rel - (single.rel * n1 + other.rel * n2) / (n1 + n2)) <= 1e-12);
    CHECK(std::abs(both.rms - std::sqrt((single.rms * single.rms * n1 +
                                         other.rms * other.rms * n2) /
                                        (n1 + n2))) <= 1e-12);
    CHECK(both.pixel_count == single.pixel_count + other.pixel_count);

    CHECK_THROWS_AS(evaluate_dataset({}, net), DataError);
}

TEST_CASE("evaluate_dataset: image-averaged mode") {
    Rng rng(6);
    Network net = build_network(tiny_config(), 7);
    RgbdSample s1 = sample_from(oracle::random_tensor(rng, {3, 16, 16}, 0.0, 1.0),
                                oracle::random_tensor(rng, {1, 16, 16}, 0.5, 4.0));
    RgbdSample s2 = sample_from(oracle::random_tensor(rng, {3, 16, 16}, 0.0, 1.0),
                                oracle::random_tensor(rng, {1, 16, 16}, 0.5, 4.0));
    MetricsReport a = evaluate_dataset({s1}, net, Aggregation::kImageAveraged);
    MetricsReport b = evaluate_dataset({s2}, net, Aggregation::kImageAveraged);
    MetricsReport both = evaluate_dataset({s1, s2}, net, Aggregation::kImageAveraged);
    CHECK(std::abs(both.rel - (a.rel + b.rel) / 2.0) <= 1e-14);
    CHECK(std::abs(both.rms - (a.rms + b.rms) / 2.0) <= 1e-14);
}
