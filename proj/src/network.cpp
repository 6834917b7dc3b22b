#include "detailnet/network.hpp"

#include "detailnet/errors.hpp"
#include "detailnet/ops.hpp"
#include "detailnet/rng.hpp"

namespace detailnet {

NetworkConfig NetworkConfig::toy() { return NetworkConfig{}; }

NetworkConfig NetworkConfig::full() {
    NetworkConfig cfg;
    cfg.stem_channels = 64;
    cfg.stage_channels = {256, 512, 1024, 2048};
    cfg.stage_blocks = {3, 4, 23, 3};
    cfg.reduced_channels = 256;
    cfg.attention_ratio = 4;
    cfg.preset = "full";
    return cfg;
}

NetworkConfig NetworkConfig::from_preset(const std::string& name) {
    if (name == "toy") {
        return toy();
    }
    if (name == "full") {
        return full();
    }
    throw ConfigError("unknown preset: " + name);
}

void NetworkConfig::validate() const {
    if (dilation_rates != std::array<int, 4>{1, 2, 4, 8}) {
        throw ConfigError("dilation rates are fixed to [1,2,4,8]");
    }
    if (stem_channels < 1) {
        throw ConfigError("stem_channels must be positive");
    }
    for (std::size_t s = 0; s < 4; ++s) {
        if (stage_channels[s] < 4) {
            throw ConfigError("stage channels must be at least 4 (bottleneck width)");
        }
        if (s > 0 && stage_channels[s] <= stage_channels[s - 1]) {
            throw ConfigError("stage channels must be strictly increasing");
        }
        if (stage_blocks[s] < 1) {
            throw ConfigError("each stage needs at least one bottleneck");
        }
    }
    if (reduced_channels < 1 || reduced_channels > stage_channels[0]) {
        throw ConfigError("reduced_channels must fit within the narrowest stage");
    }
    if (attention_ratio < 1 || reduced_channels / attention_ratio < 1) {
        throw ConfigError("attention_ratio leaves no hidden channels");
    }
}

Network build_network(const NetworkConfig& config, std::uint64_t seed) {
    config.validate();
    Network net;
    net.config = config;
    Rng rng(seed);

    build_stem(net.params, "dfe.stem", 3, config.stem_channels, InitKind::kHeNormal, rng);
    int in_c = config.stem_channels;
    for (int s = 0; s < 4; ++s) {
        const int out_c = config.stage_channels[static_cast<std::size_t>(s)];
        build_resblock(net.params, "dfe.stage" + std::to_string(s + 1), in_c, out_c,
                       config.bottleneck_mid(s), config.stage_blocks[static_cast<std::size_t>(s)],
                       InitKind::kHeNormal, rng);
        in_c = out_c;
    }

    const int cr = config.reduced_channels;
    build_crb(net.params, "dmg.crb4", config.stage_channels[3], cr, InitKind::kXavierUniform, rng);
    for (int s = 3; s >= 1; --s) {
        const std::string stage = std::to_string(s);
        build_crb(net.params, "dmg.crb" + stage, config.stage_channels[static_cast<std::size_t>(s - 1)],
                  cr, InitKind::kXavierUniform, rng);
        build_afb(net.params, "dmg.afb" + stage, cr, config.attention_ratio,
                  InitKind::kXavierUniform, rng);
        build_crb(net.params, "dmg.post" + stage, cr, cr, InitKind::kXavierUniform, rng);
    }
    init_conv(net.params, "dmg.head.conv", 1, cr, 3, 3, InitKind::kXavierUniform, rng);
    return net;
}

void freeze_first_two_stages(ParamStore& params) {
    params.set_frozen_prefix("dfe.stem");
    params.set_frozen_prefix("dfe.stage1");
}

SideOutputs dfe_forward(const Tensor& image, const ParamStore& p, const NetworkConfig& config) {
    Tensor y = stem_forward(image, p, "dfe.stem");
    SideOutputs sides;
    for (int s = 0; s < 4; ++s) {
        y = resblock_forward(y, p, "dfe.stage" + std::to_string(s + 1),
                             config.dilation_rates[static_cast<std::size_t>(s)],
                             config.stage_blocks[static_cast<std::size_t>(s)]);
        sides.maps[static_cast<std::size_t>(s)] = y;
    }
    return sides;
}

Tensor dmg_forward(const SideOutputs& sides, const ParamStore& p, const NetworkConfig& config) {
    Tensor solid = crb_forward(sides.maps[3], p, "dmg.crb4", config.dilation_rates[3]);
    for (int s = 3; s >= 1; --s) {
        const std::string stage = std::to_string(s);
        const int rate = config.dilation_rates[static_cast<std::size_t>(s - 1)];
        Tensor dotted = crb_forward(sides.maps[static_cast<std::size_t>(s - 1)], p,
                                    "dmg.crb" + stage, rate);
        Tensor fused = afb_forward(dotted, solid, p, "dmg.afb" + stage);
        solid = crb_forward(fused, p, "dmg.post" + stage, rate);
    }
    const Tensor& head_w = p.at("dmg.head.conv.w");
    ConvSpec head;
    head.out_channels = 1;
    head.in_channels = head_w.dim(1);
    head.kernel_h = head.kernel_w = 3;
    Tensor depth = softplus(conv2d(solid, head, head_w, p.at("dmg.head.conv.b")));
    return bilinear_upsample(depth, 2);
}

Tensor predict(const Tensor& image, const ParamStore& p, const NetworkConfig& config,
               bool resize_to_input) {
    Tensor depth = dmg_forward(dfe_forward(image, p, config), p, config);
    if (resize_to_input) {
        depth = bilinear_resize(depth, image.dim(2), image.dim(3));
    }
    return depth;
}

}  // namespace detailnet
