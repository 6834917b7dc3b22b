#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detailnet/network.hpp"
#include "detailnet/sample.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

struct MetricsReport {
    double rel = 0.0;
    double rms = 0.0;
    double log10 = 0.0;
    double delta1 = 0.0;
    double delta2 = 0.0;
    double delta3 = 0.0;
    std::int64_t pixel_count = 0;

    std::string to_text() const;
    static std::string csv_header();
    std::string to_csv_row() const;
};

// rel, rms, log10 and the three 1.25^k threshold accuracies over valid
// pixels. The prediction is bilinearly resized to the truth dims first.
MetricsReport compute_metrics(const Tensor& pred, const Tensor& truth, const Tensor& mask);

enum class Aggregation { kPixelWeighted, kImageAveraged };

MetricsReport evaluate_dataset(const std::vector<RgbdSample>& dataset, const Network& net,
                               Aggregation aggregation = Aggregation::kPixelWeighted);

}  // namespace detailnet
