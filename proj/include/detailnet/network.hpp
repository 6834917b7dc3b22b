#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "detailnet/blocks.hpp"
#include "detailnet/params.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

struct NetworkConfig {
    int stem_channels = 32;
    std::array<int, 4> stage_channels{32, 48, 64, 96};
    std::array<int, 4> stage_blocks{2, 2, 2, 2};
    std::array<int, 4> dilation_rates{1, 2, 4, 8};
    int reduced_channels = 32;
    int attention_ratio = 4;
    std::string preset = "toy";

    static NetworkConfig toy();
    static NetworkConfig full();
    static NetworkConfig from_preset(const std::string& name);
    void validate() const;
    int bottleneck_mid(int stage) const { return stage_channels[static_cast<std::size_t>(stage)] / 4; }
};

// One feature map per Res-Block stage, all at 1/4 input resolution.
struct SideOutputs {
    std::array<Tensor, 4> maps;
};

struct Network {
    NetworkConfig config;
    ParamStore params;
};

// Seeded parameter construction: DFE convs He-initialized, DMG convs
// Xavier-initialized, BN statistics identity and frozen.
Network build_network(const NetworkConfig& config, std::uint64_t seed);

// Marks the stem and the first Res-Block untrainable.
void freeze_first_two_stages(ParamStore& params);

SideOutputs dfe_forward(const Tensor& image, const ParamStore& p, const NetworkConfig& config);

// Fusion chain deep to shallow, prediction head, one 2x upsample. Output dims
// are half the network input's.
Tensor dmg_forward(const SideOutputs& sides, const ParamStore& p, const NetworkConfig& config);

Tensor predict(const Tensor& image, const ParamStore& p, const NetworkConfig& config,
               bool resize_to_input);

}  // namespace detailnet
