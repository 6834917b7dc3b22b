#pragma once

#include "detailnet/tensor.hpp"

namespace detailnet {

enum class Padding { kSame, kValid };

// Convolution geometry. `same` pads with zeros so stride-1 output keeps the
// input's spatial dims for any dilation; stride>1 uses ceil(H/stride).
struct ConvSpec {
    int out_channels = 1;
    int in_channels = 1;
    int kernel_h = 1;
    int kernel_w = 1;
    int stride = 1;
    int dilation = 1;
    Padding padding = Padding::kSame;

    void validate() const;
    int effective_kh() const { return dilation * (kernel_h - 1) + 1; }
    int effective_kw() const { return dilation * (kernel_w - 1) + 1; }
    // Output extent and leading pad along one axis.
    void out_extent(int in, int eff_k, int* out, int* pad_beg) const;
};

// y[n,co,i,j] = bias[co] + sum over (c,kh,kw) of x[n,c,i*s - pad + r*kh, ...] * w[co,c,kh,kw],
// accumulated in (c,kh,kw) order with padded taps contributing explicit zeros.
// weights dims [C_out,C,kh,kw], bias dims [C_out].
Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weights, const Tensor& bias);

// Max pooling with `same` geometry (ceil(H/stride) output). Out-of-range
// taps are skipped, so border maxima come from real samples only.
Tensor max_pool2d(const Tensor& input, int kernel, int stride);

// [N,C,H,W] -> [N,C,1,1], mean over each spatial plane.
Tensor global_avg_pool(const Tensor& input);

// align_corners=false bilinear interpolation to an arbitrary size.
// out==in returns the input tensor unchanged.
Tensor bilinear_resize(const Tensor& input, int out_h, int out_w);

// Nearest-neighbour resize with center sampling. Carries no gradient; meant
// for ground-truth depth and masks where interpolation would invent values.
Tensor nearest_resize(const Tensor& input, int out_h, int out_w);

// Integer-factor upsample; factor=1 is the identity.
Tensor bilinear_upsample(const Tensor& input, int factor);

Tensor relu(const Tensor& x);
Tensor sigmoid(const Tensor& x);
Tensor softplus(const Tensor& x);
Tensor add(const Tensor& a, const Tensor& b);
Tensor concat_channels(const Tensor& a, const Tensor& b);

// map [N,C,H,W] times per-channel weights [N,C,1,1], broadcast over H,W.
Tensor channel_scale(const Tensor& map, const Tensor& weights);

// Per-channel affine with stored statistics: (x - mean)/sqrt(var + eps) * gamma + beta.
// The statistics tensors are frozen; only the input receives a gradient.
Tensor batchnorm_frozen(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                        const Tensor& mean, const Tensor& var, double eps = 1e-5);

// Reduce to a scalar.
Tensor sum(const Tensor& x);

}  // namespace detailnet
