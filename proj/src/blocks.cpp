#include "detailnet/blocks.hpp"

#include <cmath>
#include <vector>

#include "detailnet/errors.hpp"

namespace detailnet {

namespace {

void require_dilation(int dilation) {
    if (dilation != 1 && dilation != 2 && dilation != 4 && dilation != 8) {
        throw ConfigError("dilation must be one of {1,2,4,8}, got " +
                          std::to_string(dilation));
    }
}

ConvSpec spec_from_weights(const Tensor& w, int stride, int dilation) {
    ConvSpec spec;
    spec.out_channels = w.dim(0);
    spec.in_channels = w.dim(1);
    spec.kernel_h = w.dim(2);
    spec.kernel_w = w.dim(3);
    spec.stride = stride;
    spec.dilation = dilation;
    return spec;
}

Tensor conv(const Tensor& x, const ParamStore& p, const std::string& prefix, int stride,
            int dilation) {
    const Tensor& w = p.at(prefix + ".w");
    return conv2d(x, spec_from_weights(w, stride, dilation), w, p.at(prefix + ".b"));
}

Tensor bn(const Tensor& x, const ParamStore& p, const std::string& prefix) {
    return batchnorm_frozen(x, p.at(prefix + ".gamma"), p.at(prefix + ".beta"),
                            p.at(prefix + ".mean"), p.at(prefix + ".var"));
}

}  // namespace

void init_conv(ParamStore& store, const std::string& prefix, int out_c, int in_c, int kh, int kw,
               InitKind kind, Rng& rng) {
    const double fan_in = static_cast<double>(in_c) * kh * kw;
    const double fan_out = static_cast<double>(out_c) * kh * kw;
    std::vector<double> values(static_cast<std::size_t>(out_c) * in_c * kh * kw);
    if (kind == InitKind::kHeNormal) {
        const double stddev = std::sqrt(2.0 / fan_in);
        for (double& v : values) {
            v = stddev * rng.normal();
        }
    } else {
        const double limit = std::sqrt(6.0 / (fan_in + fan_out));
        for (double& v : values) {
            v = rng.uniform(-limit, limit);
        }
    }
    Tensor w = Tensor::from_values({out_c, in_c, kh, kw}, std::move(values), true);
    store.add(prefix + ".w", std::move(w));
    store.add(prefix + ".b", Tensor::zeros({out_c}, true));
}

void init_bn(ParamStore& store, const std::string& prefix, int channels) {
    store.add(prefix + ".gamma", Tensor::full({channels}, 1.0), true);
    store.add(prefix + ".beta", Tensor::zeros({channels}), true);
    store.add(prefix + ".mean", Tensor::zeros({channels}), true);
    store.add(prefix + ".var", Tensor::full({channels}, 1.0), true);
}

void build_stem(ParamStore& store, const std::string& prefix, int in_c, int out_c, InitKind kind,
                Rng& rng) {
    init_conv(store, prefix + ".conv", out_c, in_c, 7, 7, kind, rng);
    init_bn(store, prefix + ".bn", out_c);
}

void build_bottleneck(ParamStore& store, const std::string& prefix, int in_c, int out_c, int mid_c,
                      InitKind kind, Rng& rng) {
    init_conv(store, prefix + ".reduce", mid_c, in_c, 1, 1, kind, rng);
    init_bn(store, prefix + ".reduce_bn", mid_c);
    init_conv(store, prefix + ".mid", mid_c, mid_c, 3, 3, kind, rng);
    init_bn(store, prefix + ".mid_bn", mid_c);
    init_conv(store, prefix + ".expand", out_c, mid_c, 1, 1, kind, rng);
    init_bn(store, prefix + ".expand_bn", out_c);
    if (in_c != out_c) {
        init_conv(store, prefix + ".proj", out_c, in_c, 1, 1, kind, rng);
        init_bn(store, prefix + ".proj_bn", out_c);
    }
}

void build_resblock(ParamStore& store, const std::string& prefix, int in_c, int out_c, int mid_c,
                    int units, InitKind kind, Rng& rng) {
    if (units < 1) {
        throw ConfigError("res-block needs at least one bottleneck unit");
    }
    for (int i = 0; i < units; ++i) {
        build_bottleneck(store, prefix + ".unit" + std::to_string(i), i == 0 ? in_c : out_c, out_c,
                         mid_c, kind, rng);
    }
}

void build_crb(ParamStore& store, const std::string& prefix, int in_c, int reduced_c, InitKind kind,
               Rng& rng) {
    if (in_c < reduced_c) {
        throw ConfigError("CRB input channels (" + std::to_string(in_c) +
                          ") below reduced width (" + std::to_string(reduced_c) + ")");
    }
    init_conv(store, prefix + ".reduce", reduced_c, in_c, 1, 1, kind, rng);
    init_conv(store, prefix + ".res1", reduced_c, reduced_c, 3, 3, kind, rng);
    init_bn(store, prefix + ".res1_bn", reduced_c);
    init_conv(store, prefix + ".res2", reduced_c, reduced_c, 3, 3, kind, rng);
    init_bn(store, prefix + ".res2_bn", reduced_c);
}

void build_afb(ParamStore& store, const std::string& prefix, int reduced_c, int ratio,
               InitKind kind, Rng& rng) {
    if (ratio < 1 || reduced_c / ratio < 1) {
        throw ConfigError("attention ratio leaves no hidden channels");
    }
    init_conv(store, prefix + ".fc1", reduced_c / ratio, 2 * reduced_c, 1, 1, kind, rng);
    init_conv(store, prefix + ".fc2", reduced_c, reduced_c / ratio, 1, 1, kind, rng);
}

Tensor stem_forward(const Tensor& image, const ParamStore& p, const std::string& prefix) {
    if (image.ndim() != 4) {
        throw ShapeError("stem expects [N,C,H,W] input");
    }
    if (image.dim(2) % 4 != 0 || image.dim(3) % 4 != 0) {
        throw ShapeError("stem input dims must be divisible by 4, got " +
                         std::to_string(image.dim(2)) + "x" + std::to_string(image.dim(3)));
    }
    Tensor y = conv(image, p, prefix + ".conv", 2, 1);
    y = relu(bn(y, p, prefix + ".bn"));
    return max_pool2d(y, 3, 2);
}

Tensor bottleneck_forward(const Tensor& x, const ParamStore& p, const std::string& prefix,
                          int dilation) {
    require_dilation(dilation);
    Tensor y = relu(bn(conv(x, p, prefix + ".reduce", 1, 1), p, prefix + ".reduce_bn"));
    y = relu(bn(conv(y, p, prefix + ".mid", 1, dilation), p, prefix + ".mid_bn"));
    y = bn(conv(y, p, prefix + ".expand", 1, 1), p, prefix + ".expand_bn");
    Tensor skip = x;
    if (p.has(prefix + ".proj.w")) {
        skip = bn(conv(x, p, prefix + ".proj", 1, 1), p, prefix + ".proj_bn");
    }
    return relu(add(skip, y));
}

Tensor resblock_forward(const Tensor& x, const ParamStore& p, const std::string& prefix,
                        int dilation, int units) {
    require_dilation(dilation);
    Tensor y = x;
    for (int i = 0; i < units; ++i) {
        y = bottleneck_forward(y, p, prefix + ".unit" + std::to_string(i), dilation);
    }
    return y;
}

Tensor crb_forward(const Tensor& x, const ParamStore& p, const std::string& prefix, int dilation) {
    require_dilation(dilation);
    const Tensor& reduce_w = p.at(prefix + ".reduce.w");
    if (x.dim(1) < reduce_w.dim(0)) {
        throw ConfigError("CRB input narrower than its reduced width");
    }
    Tensor y0 = conv(x, p, prefix + ".reduce", 1, 1);
    Tensor branch = relu(bn(conv(y0, p, prefix + ".res1", 1, dilation), p, prefix + ".res1_bn"));
    branch = bn(conv(branch, p, prefix + ".res2", 1, dilation), p, prefix + ".res2_bn");
    return relu(add(y0, branch));
}

Tensor attention_weights(const Tensor& dotted, const Tensor& solid, const ParamStore& p,
                         const std::string& prefix) {
    if (dotted.dims() != solid.dims()) {
        throw ShapeError("AFB inputs must share dims exactly");
    }
    Tensor squeezed = global_avg_pool(concat_channels(dotted, solid));
    Tensor hidden = relu(conv(squeezed, p, prefix + ".fc1", 1, 1));
    return sigmoid(conv(hidden, p, prefix + ".fc2", 1, 1));
}

Tensor afb_forward(const Tensor& dotted, const Tensor& solid, const ParamStore& p,
                   const std::string& prefix) {
    Tensor weights = attention_weights(dotted, solid, p, prefix);
    return add(solid, channel_scale(dotted, weights));
}

}  // namespace detailnet
