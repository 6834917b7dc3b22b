#pragma once

#include <string>

#include "detailnet/ops.hpp"
#include "detailnet/params.hpp"
#include "detailnet/rng.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

enum class InitKind { kHeNormal, kXavierUniform };

// Registers `prefix.w` / `prefix.b` (bias zeroed) drawn from the given scheme.
void init_conv(ParamStore& store, const std::string& prefix, int out_c, int in_c, int kh, int kw,
               InitKind kind, Rng& rng);
// Registers identity statistics under `prefix.{gamma,beta,mean,var}`, frozen.
void init_bn(ParamStore& store, const std::string& prefix, int channels);

void build_stem(ParamStore& store, const std::string& prefix, int in_c, int out_c, InitKind kind,
                Rng& rng);
void build_bottleneck(ParamStore& store, const std::string& prefix, int in_c, int out_c, int mid_c,
                      InitKind kind, Rng& rng);
void build_resblock(ParamStore& store, const std::string& prefix, int in_c, int out_c, int mid_c,
                    int units, InitKind kind, Rng& rng);
void build_crb(ParamStore& store, const std::string& prefix, int in_c, int reduced_c, InitKind kind,
               Rng& rng);
void build_afb(ParamStore& store, const std::string& prefix, int reduced_c, int ratio,
               InitKind kind, Rng& rng);

// 7x7 stride-2 conv + frozen BN + relu + 3x3 stride-2 max pool: exactly 1/4
// resolution. H and W must be divisible by 4.
Tensor stem_forward(const Tensor& image, const ParamStore& p, const std::string& prefix);

// One bottleneck unit: 1x1 reduce, 3x3 dilated, 1x1 expand, each with frozen
// BN; projection skip when the stored weights change the channel count; relu
// after the addition. Stride 1 throughout.
Tensor bottleneck_forward(const Tensor& x, const ParamStore& p, const std::string& prefix,
                          int dilation);

// A stage: `units` stacked bottlenecks sharing one dilation rate.
Tensor resblock_forward(const Tensor& x, const ParamStore& p, const std::string& prefix,
                        int dilation, int units);

// 1x1 reduction to C_r followed by one basic residual block of two 3x3
// dilated convs; skip taken from the 1x1 output.
Tensor crb_forward(const Tensor& x, const ParamStore& p, const std::string& prefix, int dilation);

// Squeeze-excitation style channel weights from the concatenated inputs.
Tensor attention_weights(const Tensor& dotted, const Tensor& solid, const ParamStore& p,
                         const std::string& prefix);

// output = solid + attention-weighted dotted.
Tensor afb_forward(const Tensor& dotted, const Tensor& solid, const ParamStore& p,
                   const std::string& prefix);

}  // namespace detailnet
