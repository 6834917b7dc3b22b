#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "detailnet/checkpoint.hpp"
#include "detailnet/network.hpp"
#include "detailnet/params.hpp"
#include "detailnet/rng.hpp"
#include "detailnet/sample.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

struct LrSchedule {
    double l_init = 1e-4;
    double l_end = 1e-6;
    std::int64_t decay_steps = 1;
    double power = 1.0;

    void validate() const;
};

// l = (l_init - l_end) * (1 - min(step, decay)/decay)^power + l_end
double poly_lr(const LrSchedule& schedule, std::int64_t global_step);

struct AdamConfig {
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::map<std::string, Checkpoint::Moments> slots;
};

// Bias-corrected Adam over the named tensors, reading each tensor's
// accumulated gradient and updating values in place. step counts from 1.
void adam_step(ParamStore& params, const std::vector<std::string>& names, AdamState& state,
               double lr, std::int64_t step, const AdamConfig& cfg = {});

enum class ContrastPivot { kImageMean, kHalf };

struct AugmentConfig {
    double brightness_lo = -0.2;
    double brightness_hi = 0.2;
    double contrast_lo = 0.8;
    double contrast_hi = 1.2;
    double flip_probability = 0.5;
    ContrastPivot contrast_pivot = ContrastPivot::kImageMean;

    void validate() const;
};

// Photometric jitter on RGB plus a joint horizontal flip; depth values are
// never altered photometrically. Draw order: brightness, contrast, flip.
RgbdSample augment_sample(const RgbdSample& sample, const AugmentConfig& cfg, Rng& rng);

// (1/n) * sum over valid pixels of |ln(truth+1) - ln(pred+1)|.
Tensor log_l1_loss(const Tensor& pred, const Tensor& truth, const Tensor& mask);

struct TrainConfig {
    int batch_size = 3;
    int epochs = 20;
    double dfe_l_init = 1e-5;
    double dfe_l_end = 1e-7;
    double dmg_l_init = 1e-4;
    double dmg_l_end = 1e-6;
    double power = 1.0;
    int decay_epochs = 16;
    std::int64_t decay_steps_override = 0;  // 0: decay_epochs * steps per epoch
    std::int64_t total_steps_override = 0;  // 0: epochs * steps per epoch
    bool freeze_first_two_stages = true;
    bool augment_enabled = true;
    AugmentConfig augment;
    AdamConfig adam;
    std::uint64_t seed = 0;

    void validate() const;
};

struct TrainOptions {
    std::string checkpoint_path;
    std::int64_t checkpoint_every = 0;  // 0: final checkpoint only
    std::string resume_from;
    std::function<void(std::int64_t step, double loss)> on_step;
};

struct TrainResult {
    std::vector<double> loss_history;
    std::int64_t steps = 0;
};

// One shuffled pass over the dataset per epoch; per step: batch, augment,
// forward, loss, backward, two Adam groups on their own schedules.
TrainResult train(const std::vector<RgbdSample>& dataset, Network& net, const TrainConfig& cfg,
                  const TrainOptions& opts = {});

}  // namespace detailnet
