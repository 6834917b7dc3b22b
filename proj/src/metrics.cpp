#include "detailnet/metrics.hpp"

#include <cmath>
#include <cstdio>

#include "detailnet/errors.hpp"
#include "detailnet/ops.hpp"

namespace detailnet {

namespace {

struct Accumulator {
    double rel_sum = 0.0;
    double sq_sum = 0.0;
    double log10_sum = 0.0;
    std::int64_t within_1 = 0;
    std::int64_t within_2 = 0;
    std::int64_t within_3 = 0;
    std::int64_t count = 0;

    void accumulate(double pred, double truth) {
        rel_sum += std::abs(truth - pred) / truth;
        sq_sum += (truth - pred) * (truth - pred);
        log10_sum += std::abs(std::log10(truth) - std::log10(pred));
        const double ratio = std::max(truth / pred, pred / truth);
        within_1 += ratio < 1.25 ? 1 : 0;
        within_2 += ratio < 1.25 * 1.25 ? 1 : 0;
        within_3 += ratio < 1.25 * 1.25 * 1.25 ? 1 : 0;
        ++count;
    }

    MetricsReport report() const {
        if (count == 0) {
            throw DataError("metrics: no valid pixels");
        }
        MetricsReport r;
        const double n = static_cast<double>(count);
        r.rel = rel_sum / n;
        r.rms = std::sqrt(sq_sum / n);
        r.log10 = log10_sum / n;
        r.delta1 = static_cast<double>(within_1) / n;
        r.delta2 = static_cast<double>(within_2) / n;
        r.delta3 = static_cast<double>(within_3) / n;
        r.pixel_count = count;
        return r;
    }
};

std::string format_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

}  // namespace

std::string MetricsReport::to_text() const {
    std::string out;
    out += "rel=" + format_value(rel) + "\n";
    out += "rms=" + format_value(rms) + "\n";
    out += "log10=" + format_value(log10) + "\n";
    out += "delta1=" + format_value(delta1) + "\n";
    out += "delta2=" + format_value(delta2) + "\n";
    out += "delta3=" + format_value(delta3) + "\n";
    out += "pixel_count=" + std::to_string(pixel_count) + "\n";
    return out;
}

std::string MetricsReport::csv_header() {
    return "rel,rms,log10,delta1,delta2,delta3,pixel_count";
}

std::string MetricsReport::to_csv_row() const {
    return format_value(rel) + "," + format_value(rms) + "," + format_value(log10) + "," +
           format_value(delta1) + "," + format_value(delta2) + "," + format_value(delta3) + "," +
           std::to_string(pixel_count);
}

MetricsReport compute_metrics(const Tensor& pred, const Tensor& truth, const Tensor& mask) {
    if (truth.ndim() != 4 || pred.ndim() != 4) {
        throw ShapeError("compute_metrics expects [N,1,H,W] tensors");
    }
    if (mask.dims() != truth.dims()) {
        throw ShapeError("compute_metrics: mask dims must match truth");
    }
    if (pred.dim(0) != truth.dim(0) || pred.dim(1) != truth.dim(1)) {
        throw ShapeError("compute_metrics: pred/truth disagree outside the spatial dims");
    }
    Tensor resized = pred;
    if (pred.dim(2) != truth.dim(2) || pred.dim(3) != truth.dim(3)) {
        NoGradGuard guard;
        resized = bilinear_resize(pred, truth.dim(2), truth.dim(3));
    }

    Accumulator acc;
    for (std::int64_t i = 0; i < truth.numel(); ++i) {
        if (mask.value_at(i) == 0.0) {
            continue;
        }
        const double t = truth.value_at(i);
        const double p = resized.value_at(i);
        if (t <= 0.0 || p <= 0.0) {
            throw DataError("metrics: non-positive depth on a valid pixel");
        }
        acc.accumulate(p, t);
    }
    return acc.report();
}

MetricsReport evaluate_dataset(const std::vector<RgbdSample>& dataset, const Network& net,
                               Aggregation aggregation) {
    if (dataset.empty()) {
        throw DataError("evaluate_dataset: empty dataset");
    }
    NoGradGuard guard;
    Accumulator pooled;
    MetricsReport averaged;
    for (const RgbdSample& sample : dataset) {
        try {
            sample.validate();
            const int h = sample.height();
            const int w = sample.width();
            Tensor image = Tensor::from_values({1, 3, h, w}, std::vector<double>(sample.rgb.values()));
            Tensor pred = predict(image, net.params, net.config, false);
            Tensor truth =
                Tensor::from_values({1, 1, h, w}, std::vector<double>(sample.depth.values()));
            Tensor mask =
                Tensor::from_values({1, 1, h, w}, std::vector<double>(sample.mask.values()));
            if (aggregation == Aggregation::kPixelWeighted) {
                Tensor resized = bilinear_resize(pred, h, w);
                for (std::int64_t i = 0; i < truth.numel(); ++i) {
                    if (mask.value_at(i) == 0.0) {
                        continue;
                    }
                    const double t = truth.value_at(i);
                    const double p = resized.value_at(i);
                    if (t <= 0.0 || p <= 0.0) {
                        throw DataError("metrics: non-positive depth on a valid pixel");
                    }
                    pooled.accumulate(p, t);
                }
            } else {
                MetricsReport r = compute_metrics(pred, truth, mask);
                averaged.rel += r.rel;
                averaged.rms += r.rms;
                averaged.log10 += r.log10;
                averaged.delta1 += r.delta1;
                averaged.delta2 += r.delta2;
                averaged.delta3 += r.delta3;
                averaged.pixel_count += r.pixel_count;
            }
        } catch (const DataError& e) {
            throw DataError("sample " + sample.id + ": " + e.what());
        } catch (const ShapeError& e) {
            throw ShapeError("sample " + sample.id + ": " + e.what());
        }
    }
    if (aggregation == Aggregation::kPixelWeighted) {
        return pooled.report();
    }
    const double n = static_cast<double>(dataset.size());
    averaged.rel /= n;
    averaged.rms /= n;
    averaged.log10 /= n;
    averaged.delta1 /= n;
    averaged.delta2 /= n;
    averaged.delta3 /= n;
    return averaged;
}

}  // namespace detailnet
