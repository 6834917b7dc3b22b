#include "detailnet/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "detailnet/errors.hpp"
#include "detailnet/ops.hpp"

namespace detailnet {

namespace {

bool zero_schedule(const LrSchedule& s) { return s.l_init == 0.0 && s.l_end == 0.0; }

Tensor flip_horizontal(const Tensor& t) {
    const int w = t.dim(t.ndim() - 1);
    std::int64_t rows = t.numel() / w;
    std::vector<double> out(t.values().size());
    for (std::int64_t r = 0; r < rows; ++r) {
        const double* src = t.values().data() + r * w;
        double* dst = out.data() + r * w;
        for (int x = 0; x < w; ++x) {
            dst[x] = src[w - 1 - x];
        }
    }
    return Tensor::from_values(t.dims(), std::move(out));
}

Tensor stack_images(const std::vector<RgbdSample>& batch) {
    const int h = batch.front().height();
    const int w = batch.front().width();
    std::vector<double> values;
    values.reserve(batch.size() * 3 * static_cast<std::size_t>(h) * w);
    for (const RgbdSample& s : batch) {
        values.insert(values.end(), s.rgb.values().begin(), s.rgb.values().end());
    }
    return Tensor::from_values({static_cast<int>(batch.size()), 3, h, w}, std::move(values));
}

// Ground truth and masks brought to the network's output resolution.
std::pair<Tensor, Tensor> stack_targets(const std::vector<RgbdSample>& batch, int out_h,
                                        int out_w) {
    std::vector<double> depth;
    std::vector<double> mask;
    depth.reserve(batch.size() * static_cast<std::size_t>(out_h) * out_w);
    mask.reserve(depth.capacity());
    for (const RgbdSample& s : batch) {
        Tensor d = nearest_resize(s.depth, out_h, out_w);
        Tensor m = nearest_resize(s.mask, out_h, out_w);
        depth.insert(depth.end(), d.values().begin(), d.values().end());
        mask.insert(mask.end(), m.values().begin(), m.values().end());
    }
    const Shape dims{static_cast<int>(batch.size()), 1, out_h, out_w};
    return {Tensor::from_values(dims, std::move(depth)),
            Tensor::from_values(dims, std::move(mask))};
}

}  // namespace

void LrSchedule::validate() const {
    if (zero_schedule(*this)) {
        return;  // explicit no-update schedule
    }
    if (!(l_init > l_end && l_end > 0.0)) {
        throw ConfigError("learning-rate schedule needs l_init > l_end > 0");
    }
    if (power <= 0.0) {
        throw ConfigError("schedule power must be positive");
    }
    if (decay_steps < 1) {
        throw ConfigError("decay_steps must be positive");
    }
}

double poly_lr(const LrSchedule& schedule, std::int64_t global_step) {
    if (global_step < 0) {
        throw UsageError("poly_lr step must be non-negative");
    }
    schedule.validate();
    const double clamped =
        static_cast<double>(std::min(global_step, schedule.decay_steps)) /
        static_cast<double>(schedule.decay_steps);
    return (schedule.l_init - schedule.l_end) * std::pow(1.0 - clamped, schedule.power) +
           schedule.l_end;
}

void adam_step(ParamStore& params, const std::vector<std::string>& names, AdamState& state,
               double lr, std::int64_t step, const AdamConfig& cfg) {
    if (step < 1) {
        throw UsageError("adam step counts from 1");
    }
    const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
    const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
    for (const std::string& name : names) {
        if (!params.has(name)) {
            throw UsageError("adam_step: unknown parameter " + name);
        }
        if (params.frozen(name)) {
            throw UsageError("adam_step: gradient offered for frozen parameter " + name);
        }
        Tensor& t = params.at(name);
        if (!t.has_grad()) {
            throw UsageError("adam_step: no gradient accumulated for " + name);
        }
        const std::vector<double>& g = t.grad();
        Checkpoint::Moments& mv = state.slots[name];
        if (mv.m.empty()) {
            mv.m.assign(g.size(), 0.0);
            mv.v.assign(g.size(), 0.0);
        } else if (mv.m.size() != g.size()) {
            throw UsageError("adam_step: stale moment dims for " + name);
        }
        std::vector<double>& vals = t.mutable_values();
        for (std::size_t i = 0; i < g.size(); ++i) {
            mv.m[i] = cfg.beta1 * mv.m[i] + (1.0 - cfg.beta1) * g[i];
            mv.v[i] = cfg.beta2 * mv.v[i] + (1.0 - cfg.beta2) * g[i] * g[i];
            vals[i] -= lr * (mv.m[i] / c1) / (std::sqrt(mv.v[i] / c2) + cfg.eps);
        }
    }
}

void AugmentConfig::validate() const {
    if (brightness_lo > brightness_hi || contrast_lo > contrast_hi) {
        throw ConfigError("augmentation range bounds inverted");
    }
    if (contrast_lo < 0.0) {
        throw ConfigError("contrast factor cannot be negative");
    }
    if (flip_probability < 0.0 || flip_probability > 1.0) {
        throw ConfigError("flip probability must lie in [0,1]");
    }
}

RgbdSample augment_sample(const RgbdSample& sample, const AugmentConfig& cfg, Rng& rng) {
    cfg.validate();
    const double delta = rng.uniform(cfg.brightness_lo, cfg.brightness_hi);
    const double factor = rng.uniform(cfg.contrast_lo, cfg.contrast_hi);
    const bool flip = rng.bernoulli(cfg.flip_probability);

    RgbdSample out = sample;
    std::vector<double> rgb(sample.rgb.values());
    if (delta != 0.0) {
        for (double& v : rgb) {
            v += delta;
        }
    }
    if (factor != 1.0) {
        const double pivot =
            cfg.contrast_pivot == ContrastPivot::kImageMean
                ? std::accumulate(rgb.begin(), rgb.end(), 0.0) / static_cast<double>(rgb.size())
                : 0.5;
        for (double& v : rgb) {
            v = pivot + factor * (v - pivot);
        }
    }
    if (delta != 0.0 || factor != 1.0) {
        for (double& v : rgb) {
            v = std::clamp(v, 0.0, 1.0);
        }
    }
    out.rgb = Tensor::from_values(sample.rgb.dims(), std::move(rgb));
    if (flip) {
        out.rgb = flip_horizontal(out.rgb);
        out.depth = flip_horizontal(sample.depth);
        out.mask = flip_horizontal(sample.mask);
    }
    return out;
}

Tensor log_l1_loss(const Tensor& pred, const Tensor& truth, const Tensor& mask) {
    if (pred.dims() != truth.dims() || pred.dims() != mask.dims()) {
        throw ShapeError("log_l1_loss operands must share dims");
    }
    const std::vector<double>& p = pred.values();
    const std::vector<double>& t = truth.values();
    const std::vector<double>& m = mask.values();

    std::int64_t n = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        if (m[i] != 0.0) {
            if (t[i] < 0.0) {
                throw DataError("negative ground-truth depth on a valid pixel");
            }
            if (p[i] <= -1.0) {
                throw DataError("prediction at or below -1 makes log1p undefined");
            }
            ++n;
        }
    }
    if (n == 0) {
        throw DataError("log_l1_loss: no valid pixels");
    }

    double total = 0.0;
    std::vector<double> coeff(p.size(), 0.0);
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (m[i] == 0.0) {
            continue;
        }
        const double diff = std::log1p(t[i]) - std::log1p(p[i]);
        total += std::abs(diff);
        const double sign = diff > 0.0 ? 1.0 : (diff < 0.0 ? -1.0 : 0.0);
        coeff[i] = -sign / (static_cast<double>(n) * (1.0 + p[i]));
    }
    const double value = total / static_cast<double>(n);

    return Tensor::make_node(
        {1}, {value}, {pred},
        [coeff = std::move(coeff)](const detail::TensorImpl& self) {
            const double go = self.grad[0];
            std::vector<double> dp(coeff.size());
            for (std::size_t i = 0; i < coeff.size(); ++i) {
                dp[i] = go * coeff[i];
            }
            self.parents[0].impl()->accumulate_grad(dp);
        });
}

void TrainConfig::validate() const {
    if (batch_size < 1) {
        throw ConfigError("batch_size must be positive");
    }
    if (epochs < 1 && total_steps_override < 1) {
        throw ConfigError("training needs epochs or an explicit step count");
    }
    if (decay_epochs < 1 && decay_steps_override < 1) {
        throw ConfigError("decay_epochs must be positive");
    }
    const bool both_zero = dfe_l_init == 0.0 && dfe_l_end == 0.0 && dmg_l_init == 0.0 &&
                           dmg_l_end == 0.0;
    if (!both_zero && !(dfe_l_init < dmg_l_init)) {
        throw ConfigError("DFE learning rate must stay below the DMG rate");
    }
    augment.validate();
}

TrainResult train(const std::vector<RgbdSample>& dataset, Network& net, const TrainConfig& cfg,
                  const TrainOptions& opts) {
    cfg.validate();
    if (dataset.empty()) {
        throw DataError("train: empty dataset");
    }
    const int h = dataset.front().height();
    const int w = dataset.front().width();
    for (const RgbdSample& s : dataset) {
        s.validate();
        if (s.height() != h || s.width() != w) {
            throw ShapeError("train: samples disagree on dims (sample " + s.id + ")");
        }
    }

    const std::int64_t n = static_cast<std::int64_t>(dataset.size());
    const std::int64_t steps_per_epoch = (n + cfg.batch_size - 1) / cfg.batch_size;
    const std::int64_t total_steps = cfg.total_steps_override > 0
                                         ? cfg.total_steps_override
                                         : static_cast<std::int64_t>(cfg.epochs) * steps_per_epoch;
    const std::int64_t decay_steps =
        cfg.decay_steps_override > 0 ? cfg.decay_steps_override
                                     : static_cast<std::int64_t>(cfg.decay_epochs) * steps_per_epoch;

    LrSchedule dfe_sched{cfg.dfe_l_init, cfg.dfe_l_end, decay_steps, cfg.power};
    LrSchedule dmg_sched{cfg.dmg_l_init, cfg.dmg_l_end, decay_steps, cfg.power};
    dfe_sched.validate();
    dmg_sched.validate();

    if (cfg.freeze_first_two_stages) {
        freeze_first_two_stages(net.params);
    }
    std::vector<std::string> dfe_names;
    std::vector<std::string> dmg_names;
    for (const std::string& name : net.params.trainable_names()) {
        (name.rfind("dfe.", 0) == 0 ? dfe_names : dmg_names).push_back(name);
    }

    Rng rng(cfg.seed);
    AdamState adam;
    std::uint64_t step = 0;
    std::vector<std::uint64_t> order;
    std::uint64_t pos = 0;

    if (!opts.resume_from.empty()) {
        Checkpoint ckpt = checkpoint_load(opts.resume_from);
        apply_checkpoint(ckpt, net.params);
        rng.deserialize(ckpt.rng_state);
        step = ckpt.step;
        order = ckpt.epoch_order;
        pos = ckpt.epoch_pos;
        adam.slots = ckpt.moments;
    }

    auto make_checkpoint = [&]() {
        Checkpoint ckpt = snapshot_params(net.params);
        ckpt.step = step;
        ckpt.rng_state = rng.serialize();
        ckpt.epoch_order = order;
        ckpt.epoch_pos = pos;
        ckpt.moments = adam.slots;
        return ckpt;
    };

    TrainResult result;
    while (step < static_cast<std::uint64_t>(total_steps)) {
        if (pos >= order.size()) {
            order.resize(static_cast<std::size_t>(n));
            std::iota(order.begin(), order.end(), 0);
            rng.shuffle(order);
            pos = 0;
        }
        std::vector<RgbdSample> batch;
        while (static_cast<int>(batch.size()) < cfg.batch_size && pos < order.size()) {
            const RgbdSample& src = dataset[static_cast<std::size_t>(order[pos++])];
            batch.push_back(cfg.augment_enabled ? augment_sample(src, cfg.augment, rng) : src);
        }

        Tensor images = stack_images(batch);
        auto [truth, mask] = stack_targets(batch, h / 2, w / 2);

        net.params.zero_grads();
        Tensor pred = dmg_forward(dfe_forward(images, net.params, net.config), net.params,
                                  net.config);
        Tensor loss = log_l1_loss(pred, truth, mask);
        const double loss_value = loss.item();

        const double lr_dfe = poly_lr(dfe_sched, static_cast<std::int64_t>(step));
        const double lr_dmg = poly_lr(dmg_sched, static_cast<std::int64_t>(step));
        if (!std::isfinite(loss_value)) {
            std::ostringstream msg;
            msg << "NaN/Inf loss at step " << step + 1 << " (lr_dfe=" << lr_dfe
                << ", lr_dmg=" << lr_dmg << ")";
            if (!opts.checkpoint_path.empty()) {
                const std::string dump = opts.checkpoint_path + ".diverged";
                checkpoint_save(make_checkpoint(), dump);
                msg << "; state dumped to " << dump;
            }
            throw DataError(msg.str());
        }

        backward(loss);
        step += 1;
        adam_step(net.params, dfe_names, adam, lr_dfe, static_cast<std::int64_t>(step), cfg.adam);
        adam_step(net.params, dmg_names, adam, lr_dmg, static_cast<std::int64_t>(step), cfg.adam);

        result.loss_history.push_back(loss_value);
        if (opts.on_step) {
            opts.on_step(static_cast<std::int64_t>(step), loss_value);
        }
        if (!opts.checkpoint_path.empty() && opts.checkpoint_every > 0 &&
            step % static_cast<std::uint64_t>(opts.checkpoint_every) == 0 &&
            step < static_cast<std::uint64_t>(total_steps)) {
            checkpoint_save(make_checkpoint(), opts.checkpoint_path);
        }
    }

    if (!opts.checkpoint_path.empty()) {
        checkpoint_save(make_checkpoint(), opts.checkpoint_path);
    }
    result.steps = static_cast<std::int64_t>(step);
    return result;
}

}  // namespace detailnet
