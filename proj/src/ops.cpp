#include "detailnet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "detailnet/errors.hpp"
#include "detailnet/threading.hpp"

namespace detailnet {

namespace {

using std::int64_t;

void check_4d(const Tensor& t, const char* what) {
    if (!t.defined() || t.ndim() != 4) {
        throw ShapeError(std::string(what) + " must be a 4-D NCHW tensor");
    }
}

// ============================================================================
// GEMM kernels. Row-major throughout. Accumulation over the k index is
// strictly ascending for every output element, and each output element is
// written by exactly one worker, so results are bitwise reproducible for
// any thread count.
// ============================================================================

// C[m x n] += A[m x k] * B[k x n]
void gemm_nn(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C) {
    parallel_for(m, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            const double* arow = A + i * k;
            double* crow = C + i * n;
            for (int64_t kk = 0; kk < k; ++kk) {
                const double a = arow[kk];
                const double* brow = B + kk * n;
                for (int64_t j = 0; j < n; ++j) {
                    crow[j] += a * brow[j];
                }
            }
        }
    });
}

// C[m x k] += A[m x n] * B[k x n]^T  (dot products along n)
void gemm_nt(int64_t m, int64_t n, int64_t k, const double* A, const double* B, double* C) {
    parallel_for(m, [&](int64_t lo, int64_t hi) {
        for (int64_t i = lo; i < hi; ++i) {
            const double* arow = A + i * n;
            double* crow = C + i * k;
            for (int64_t kk = 0; kk < k; ++kk) {
                const double* brow = B + kk * n;
                double acc = 0.0;
                for (int64_t j = 0; j < n; ++j) {
                    acc += arow[j] * brow[j];
                }
                crow[kk] += acc;
            }
        }
    });
}

// C[k x n] += A[m x k]^T * B[m x n]
void gemm_tn(int64_t m, int64_t k, int64_t n, const double* A, const double* B, double* C) {
    parallel_for(k, [&](int64_t lo, int64_t hi) {
        for (int64_t kk = lo; kk < hi; ++kk) {
            double* crow = C + kk * n;
            for (int64_t i = 0; i < m; ++i) {
                const double a = A[i * k + kk];
                const double* brow = B + i * n;
                for (int64_t j = 0; j < n; ++j) {
                    crow[j] += a * brow[j];
                }
            }
        }
    });
}

struct ConvGeom {
    int n, c, h, w;
    int out_h, out_w;
    int pad_t, pad_l;
    int64_t k;        // c * kh * kw
    int64_t patches;  // out_h * out_w
};

ConvGeom conv_geometry(const Tensor& input, const ConvSpec& spec) {
    ConvGeom g;
    g.n = input.dim(0);
    g.c = input.dim(1);
    g.h = input.dim(2);
    g.w = input.dim(3);
    spec.out_extent(g.h, spec.effective_kh(), &g.out_h, &g.pad_t);
    spec.out_extent(g.w, spec.effective_kw(), &g.out_w, &g.pad_l);
    g.k = static_cast<int64_t>(g.c) * spec.kernel_h * spec.kernel_w;
    g.patches = static_cast<int64_t>(g.out_h) * g.out_w;
    return g;
}

// col[(c*kh + ki)*kw + kj][oh*out_w + ow]; out-of-bounds taps become zero.
void im2col(const double* x, const ConvSpec& spec, const ConvGeom& g, double* col) {
    const int kh = spec.kernel_h, kw = spec.kernel_w;
    const int stride = spec.stride, r = spec.dilation;
    parallel_for(g.k, [&](int64_t lo, int64_t hi) {
        for (int64_t kidx = lo; kidx < hi; ++kidx) {
            const int c = static_cast<int>(kidx / (kh * kw));
            const int rem = static_cast<int>(kidx % (kh * kw));
            const int ki = rem / kw, kj = rem % kw;
            const double* plane = x + static_cast<int64_t>(c) * g.h * g.w;
            double* row = col + kidx * g.patches;
            for (int oh = 0; oh < g.out_h; ++oh) {
                const int ih = oh * stride - g.pad_t + r * ki;
                double* dst = row + static_cast<int64_t>(oh) * g.out_w;
                if (ih < 0 || ih >= g.h) {
                    std::fill(dst, dst + g.out_w, 0.0);
                    continue;
                }
                const double* src = plane + static_cast<int64_t>(ih) * g.w;
                for (int ow = 0; ow < g.out_w; ++ow) {
                    const int iw = ow * stride - g.pad_l + r * kj;
                    dst[ow] = (iw >= 0 && iw < g.w) ? src[iw] : 0.0;
                }
            }
        }
    });
}

// Adjoint of im2col; rows of one input channel never interleave with
// another channel's, so the parallel split is per channel.
void col2im_acc(const double* col, const ConvSpec& spec, const ConvGeom& g, double* dx) {
    const int kh = spec.kernel_h, kw = spec.kernel_w;
    const int stride = spec.stride, r = spec.dilation;
    parallel_for(g.c, [&](int64_t c_lo, int64_t c_hi) {
        for (int64_t c = c_lo; c < c_hi; ++c) {
            double* plane = dx + c * g.h * g.w;
            for (int ki = 0; ki < kh; ++ki) {
                for (int kj = 0; kj < kw; ++kj) {
                    const int64_t kidx = (c * kh + ki) * kw + kj;
                    const double* row = col + kidx * g.patches;
                    for (int oh = 0; oh < g.out_h; ++oh) {
                        const int ih = oh * stride - g.pad_t + r * ki;
                        if (ih < 0 || ih >= g.h) {
                            continue;
                        }
                        double* dst = plane + static_cast<int64_t>(ih) * g.w;
                        const double* src = row + static_cast<int64_t>(oh) * g.out_w;
                        for (int ow = 0; ow < g.out_w; ++ow) {
                            const int iw = ow * stride - g.pad_l + r * kj;
                            if (iw >= 0 && iw < g.w) {
                                dst[iw] += src[ow];
                            }
                        }
                    }
                }
            }
        }
    });
}

struct AxisMap {
    std::vector<int> lo, hi;
    std::vector<double> frac;
};

// align_corners=false source coordinates, clamped to the input range.
AxisMap resize_axis(int in, int out) {
    AxisMap m;
    m.lo.resize(static_cast<std::size_t>(out));
    m.hi.resize(static_cast<std::size_t>(out));
    m.frac.resize(static_cast<std::size_t>(out));
    const double scale = static_cast<double>(in) / out;
    for (int d = 0; d < out; ++d) {
        double src = (d + 0.5) * scale - 0.5;
        if (src < 0.0) {
            src = 0.0;
        }
        if (src > in - 1) {
            src = in - 1;
        }
        int lo = static_cast<int>(src);
        m.lo[static_cast<std::size_t>(d)] = lo;
        m.hi[static_cast<std::size_t>(d)] = std::min(lo + 1, in - 1);
        m.frac[static_cast<std::size_t>(d)] = src - lo;
    }
    return m;
}

}  // namespace

void ConvSpec::validate() const {
    if (stride < 1) {
        throw ConfigError("conv stride must be >= 1, got " + std::to_string(stride));
    }
    if (dilation < 1) {
        throw ConfigError("conv dilation must be >= 1, got " + std::to_string(dilation));
    }
    if (out_channels < 1 || in_channels < 1 || kernel_h < 1 || kernel_w < 1) {
        throw ConfigError("conv channel/kernel sizes must be positive");
    }
}

void ConvSpec::out_extent(int in, int eff_k, int* out, int* pad_beg) const {
    if (padding == Padding::kSame) {
        *out = (in + stride - 1) / stride;
        int pad_total = std::max(0, (*out - 1) * stride + eff_k - in);
        *pad_beg = pad_total / 2;
    } else {
        if (in < eff_k) {
            throw ShapeError("valid conv needs input extent >= effective kernel " +
                             std::to_string(eff_k) + ", got " + std::to_string(in));
        }
        *out = (in - eff_k) / stride + 1;
        *pad_beg = 0;
    }
}

Tensor conv2d(const Tensor& input, const ConvSpec& spec, const Tensor& weights,
              const Tensor& bias) {
    spec.validate();
    check_4d(input, "conv2d input");
    if (input.dim(1) != spec.in_channels) {
        throw ShapeError("conv2d input has " + std::to_string(input.dim(1)) +
                         " channels, spec expects " + std::to_string(spec.in_channels));
    }
    const Shape want_w = {spec.out_channels, spec.in_channels, spec.kernel_h, spec.kernel_w};
    if (!weights.defined() || weights.dims() != want_w) {
        throw ShapeError("conv2d weights must be " + shape_str(want_w));
    }
    if (!bias.defined() || bias.dims() != Shape{spec.out_channels}) {
        throw ShapeError("conv2d bias must be [" + std::to_string(spec.out_channels) + "]");
    }

    const ConvGeom g = conv_geometry(input, spec);
    const int co = spec.out_channels;
    std::vector<double> out(static_cast<std::size_t>(g.n) * co * g.patches, 0.0);
    std::vector<double> col(static_cast<std::size_t>(g.k * g.patches));
    const double* wp = weights.values().data();
    const double* bp = bias.values().data();
    for (int n = 0; n < g.n; ++n) {
        const double* xn = input.values().data() + static_cast<int64_t>(n) * g.c * g.h * g.w;
        double* on = out.data() + static_cast<int64_t>(n) * co * g.patches;
        im2col(xn, spec, g, col.data());
        gemm_nn(co, g.k, g.patches, wp, col.data(), on);
        for (int oc = 0; oc < co; ++oc) {
            double* row = on + static_cast<int64_t>(oc) * g.patches;
            const double b = bp[oc];
            for (int64_t j = 0; j < g.patches; ++j) {
                row[j] += b;
            }
        }
    }

    Tensor x = input, w = weights, b = bias;
    return Tensor::make_node(
        {g.n, co, g.out_h, g.out_w}, std::move(out), {input, weights, bias},
        [x, w, b, spec, g, co](const detail::TensorImpl& self) {
            const bool need_dx = x.requires_grad();
            const bool need_dw = w.requires_grad();
            const bool need_db = b.requires_grad();
            std::vector<double> dx, dw, db;
            if (need_dx) {
                dx.assign(x.values().size(), 0.0);
            }
            if (need_dw) {
                dw.assign(w.values().size(), 0.0);
            }
            if (need_db) {
                db.assign(b.values().size(), 0.0);
            }
            std::vector<double> col((need_dw) ? static_cast<std::size_t>(g.k * g.patches) : 0);
            std::vector<double> dcol((need_dx) ? static_cast<std::size_t>(g.k * g.patches) : 0);
            for (int n = 0; n < g.n; ++n) {
                const double* gn = self.grad.data() + static_cast<int64_t>(n) * co * g.patches;
                if (need_db) {
                    for (int oc = 0; oc < co; ++oc) {
                        const double* row = gn + static_cast<int64_t>(oc) * g.patches;
                        double acc = 0.0;
                        for (int64_t j = 0; j < g.patches; ++j) {
                            acc += row[j];
                        }
                        db[static_cast<std::size_t>(oc)] += acc;
                    }
                }
                if (need_dw) {
                    const double* xn =
                        x.values().data() + static_cast<int64_t>(n) * g.c * g.h * g.w;
                    im2col(xn, spec, g, col.data());
                    gemm_nt(co, g.patches, g.k, gn, col.data(), dw.data());
                }
                if (need_dx) {
                    std::fill(dcol.begin(), dcol.end(), 0.0);
                    gemm_tn(co, g.k, g.patches, w.values().data(), gn, dcol.data());
                    col2im_acc(dcol.data(), spec, g,
                               dx.data() + static_cast<int64_t>(n) * g.c * g.h * g.w);
                }
            }
            if (need_dx) {
                x.impl()->accumulate_grad(dx);
            }
            if (need_dw) {
                w.impl()->accumulate_grad(dw);
            }
            if (need_db) {
                b.impl()->accumulate_grad(db);
            }
        });
}

Tensor max_pool2d(const Tensor& input, int kernel, int stride) {
    check_4d(input, "max_pool2d input");
    if (kernel < 1 || stride < 1) {
        throw ConfigError("max_pool2d kernel and stride must be >= 1");
    }
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int out_h = (h + stride - 1) / stride;
    const int out_w = (w + stride - 1) / stride;
    const int pad_t = std::max(0, ((out_h - 1) * stride + kernel - h) / 2);
    const int pad_l = std::max(0, ((out_w - 1) * stride + kernel - w) / 2);

    const int64_t planes = static_cast<int64_t>(n) * c;
    const int64_t out_plane = static_cast<int64_t>(out_h) * out_w;
    std::vector<double> out(static_cast<std::size_t>(planes * out_plane));
    auto argmax = std::make_shared<std::vector<int64_t>>(out.size());
    const double* xp = input.values().data();
    parallel_for(planes, [&](int64_t lo, int64_t hi) {
        for (int64_t p = lo; p < hi; ++p) {
            const double* plane = xp + p * h * w;
            double* orow = out.data() + p * out_plane;
            int64_t* arow = argmax->data() + p * out_plane;
            for (int oh = 0; oh < out_h; ++oh) {
                for (int ow = 0; ow < out_w; ++ow) {
                    double best = -std::numeric_limits<double>::infinity();
                    int64_t best_idx = -1;
                    for (int ki = 0; ki < kernel; ++ki) {
                        const int ih = oh * stride - pad_t + ki;
                        if (ih < 0 || ih >= h) {
                            continue;
                        }
                        for (int kj = 0; kj < kernel; ++kj) {
                            const int iw = ow * stride - pad_l + kj;
                            if (iw < 0 || iw >= w) {
                                continue;
                            }
                            const int64_t idx = static_cast<int64_t>(ih) * w + iw;
                            if (plane[idx] > best) {
                                best = plane[idx];
                                best_idx = idx;
                            }
                        }
                    }
                    orow[static_cast<int64_t>(oh) * out_w + ow] = best;
                    arow[static_cast<int64_t>(oh) * out_w + ow] = best_idx;
                }
            }
        }
    });

    Tensor x = input;
    return Tensor::make_node(
        {n, c, out_h, out_w}, std::move(out), {input},
        [x, argmax, planes, out_plane, h, w](const detail::TensorImpl& self) {
            if (!x.requires_grad()) {
                return;
            }
            std::vector<double> dx(x.values().size(), 0.0);
            for (int64_t p = 0; p < planes; ++p) {
                const double* grow = self.grad.data() + p * out_plane;
                const int64_t* arow = argmax->data() + p * out_plane;
                double* dplane = dx.data() + p * h * w;
                for (int64_t j = 0; j < out_plane; ++j) {
                    dplane[arow[j]] += grow[j];
                }
            }
            x.impl()->accumulate_grad(dx);
        });
}

Tensor global_avg_pool(const Tensor& input) {
    check_4d(input, "global_avg_pool input");
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    const int64_t hw = static_cast<int64_t>(h) * w;
    if (hw < 1) {
        throw ShapeError("global_avg_pool on empty spatial plane");
    }
    const int64_t planes = static_cast<int64_t>(n) * c;
    std::vector<double> out(static_cast<std::size_t>(planes));
    const double* xp = input.values().data();
    for (int64_t p = 0; p < planes; ++p) {
        const double* plane = xp + p * hw;
        double acc = 0.0;
        for (int64_t j = 0; j < hw; ++j) {
            acc += plane[j];
        }
        out[static_cast<std::size_t>(p)] = acc / static_cast<double>(hw);
    }

    Tensor x = input;
    return Tensor::make_node({n, c, 1, 1}, std::move(out), {input},
                             [x, planes, hw](const detail::TensorImpl& self) {
                                 if (!x.requires_grad()) {
                                     return;
                                 }
                                 std::vector<double> dx(x.values().size());
                                 const double inv = 1.0 / static_cast<double>(hw);
                                 for (int64_t p = 0; p < planes; ++p) {
                                     const double g = self.grad[static_cast<std::size_t>(p)] * inv;
                                     double* dplane = dx.data() + p * hw;
                                     for (int64_t j = 0; j < hw; ++j) {
                                         dplane[j] = g;
                                     }
                                 }
                                 x.impl()->accumulate_grad(dx);
                             });
}

Tensor bilinear_resize(const Tensor& input, int out_h, int out_w) {
    check_4d(input, "bilinear_resize input");
    if (out_h < 1 || out_w < 1) {
        throw ConfigError("bilinear_resize output dims must be positive");
    }
    const int n = input.dim(0), c = input.dim(1), h = input.dim(2), w = input.dim(3);
    if (out_h == h && out_w == w) {
        return input;
    }
    const auto ymap = std::make_shared<AxisMap>(resize_axis(h, out_h));
    const auto xmap = std::make_shared<AxisMap>(resize_axis(w, out_w));

    const int64_t planes = static_cast<int64_t>(n) * c;
    const int64_t out_plane = static_cast<int64_t>(out_h) * out_w;
    std::vector<double> out(static_cast<std::size_t>(planes * out_plane));
    const double* xp = input.values().data();
    parallel_for(planes, [&](int64_t lo, int64_t hi) {
        for (int64_t p = lo; p < hi; ++p) {
            const double* plane = xp + p * h * w;
            double* orow = out.data() + p * out_plane;
            for (int oy = 0; oy < out_h; ++oy) {
                const int y0 = ymap->lo[static_cast<std::size_t>(oy)];
                const int y1 = ymap->hi[static_cast<std::size_t>(oy)];
                const double fy = ymap->frac[static_cast<std::size_t>(oy)];
                const double* r0 = plane + static_cast<int64_t>(y0) * w;
                const double* r1 = plane + static_cast<int64_t>(y1) * w;
                for (int ox = 0; ox < out_w; ++ox) {
                    const int x0 = xmap->lo[static_cast<std::size_t>(ox)];
                    const int x1 = xmap->hi[static_cast<std::size_t>(ox)];
                    const double fx = xmap->frac[static_cast<std::size_t>(ox)];
                    // Lerp form keeps constants exact.
                    const double h0 = r0[x0] + fx * (r0[x1] - r0[x0]);
                    const double h1 = r1[x0] + fx * (r1[x1] - r1[x0]);
                    orow[static_cast<int64_t>(oy) * out_w + ox] = h0 + fy * (h1 - h0);
                }
            }
        }
    });

    Tensor x = input;
    return Tensor::make_node(
        {n, c, out_h, out_w}, std::move(out), {input},
        [x, ymap, xmap, planes, h, w, out_h, out_w, out_plane](const detail::TensorImpl& self) {
            if (!x.requires_grad()) {
                return;
            }
            std::vector<double> dx(x.values().size(), 0.0);
            for (int64_t p = 0; p < planes; ++p) {
                const double* grow = self.grad.data() + p * out_plane;
                double* dplane = dx.data() + p * h * w;
                for (int oy = 0; oy < out_h; ++oy) {
                    const int y0 = ymap->lo[static_cast<std::size_t>(oy)];
                    const int y1 = ymap->hi[static_cast<std::size_t>(oy)];
                    const double fy = ymap->frac[static_cast<std::size_t>(oy)];
                    for (int ox = 0; ox < out_w; ++ox) {
                        const int x0 = xmap->lo[static_cast<std::size_t>(ox)];
                        const int x1 = xmap->hi[static_cast<std::size_t>(ox)];
                        const double fx = xmap->frac[static_cast<std::size_t>(ox)];
                        const double g = grow[static_cast<int64_t>(oy) * out_w + ox];
                        dplane[static_cast<int64_t>(y0) * w + x0] += (1.0 - fy) * (1.0 - fx) * g;
                        dplane[static_cast<int64_t>(y0) * w + x1] += (1.0 - fy) * fx * g;
                        dplane[static_cast<int64_t>(y1) * w + x0] += fy * (1.0 - fx) * g;
                        dplane[static_cast<int64_t>(y1) * w + x1] += fy * fx * g;
                    }
                }
            }
            x.impl()->accumulate_grad(dx);
        });
}

Tensor bilinear_upsample(const Tensor& input, int factor) {
    if (factor < 1) {
        throw ConfigError("bilinear_upsample factor must be >= 1, got " + std::to_string(factor));
    }
    check_4d(input, "bilinear_upsample input");
    if (factor == 1) {
        return input;
    }
    return bilinear_resize(input, input.dim(2) * factor, input.dim(3) * factor);
}

Tensor nearest_resize(const Tensor& input, int out_h, int out_w) {
    if (input.ndim() < 2) {
        throw ShapeError("nearest_resize needs at least 2 dims");
    }
    if (out_h < 1 || out_w < 1) {
        throw ConfigError("nearest_resize output dims must be positive");
    }
    const int in_h = input.dim(input.ndim() - 2);
    const int in_w = input.dim(input.ndim() - 1);
    if (in_h == out_h && in_w == out_w) {
        return Tensor::from_values(input.dims(), std::vector<double>(input.values()));
    }
    std::int64_t planes = 1;
    for (int d = 0; d + 2 < input.ndim(); ++d) {
        planes *= input.dim(d);
    }
    Shape out_dims = input.dims();
    out_dims[static_cast<std::size_t>(input.ndim() - 2)] = out_h;
    out_dims[static_cast<std::size_t>(input.ndim() - 1)] = out_w;
    std::vector<double> out(static_cast<std::size_t>(planes) * out_h * out_w);
    const double sy = static_cast<double>(in_h) / out_h;
    const double sx = static_cast<double>(in_w) / out_w;
    for (std::int64_t p = 0; p < planes; ++p) {
        const double* src = input.values().data() + p * in_h * in_w;
        double* dst = out.data() + p * static_cast<std::int64_t>(out_h) * out_w;
        for (int y = 0; y < out_h; ++y) {
            const int ys = std::min(in_h - 1, static_cast<int>((y + 0.5) * sy));
            for (int x = 0; x < out_w; ++x) {
                const int xs = std::min(in_w - 1, static_cast<int>((x + 0.5) * sx));
                dst[static_cast<std::int64_t>(y) * out_w + x] =
                    src[static_cast<std::int64_t>(ys) * in_w + xs];
            }
        }
    }
    return Tensor::from_values(out_dims, std::move(out));
}

Tensor relu(const Tensor& x) {
    if (!x.defined()) {
        throw ShapeError("relu on undefined tensor");
    }
    std::vector<double> out(x.values().size());
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = v[i] > 0.0 ? v[i] : 0.0;
    }
    Tensor in = x;
    return Tensor::make_node(x.dims(), std::move(out), {x},
                             [in](const detail::TensorImpl& self) {
                                 if (!in.requires_grad()) {
                                     return;
                                 }
                                 const auto& v = in.values();
                                 std::vector<double> dx(v.size());
                                 for (std::size_t i = 0; i < v.size(); ++i) {
                                     dx[i] = v[i] > 0.0 ? self.grad[i] : 0.0;
                                 }
                                 in.impl()->accumulate_grad(dx);
                             });
}

namespace {

double stable_sigmoid(double v) {
    if (v >= 0.0) {
        return 1.0 / (1.0 + std::exp(-v));
    }
    const double e = std::exp(v);
    return e / (1.0 + e);
}

}  // namespace

Tensor sigmoid(const Tensor& x) {
    if (!x.defined()) {
        throw ShapeError("sigmoid on undefined tensor");
    }
    std::vector<double> out(x.values().size());
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        out[i] = stable_sigmoid(v[i]);
    }
    Tensor in = x;
    return Tensor::make_node(x.dims(), std::move(out), {x},
                             [in](const detail::TensorImpl& self) {
                                 if (!in.requires_grad()) {
                                     return;
                                 }
                                 std::vector<double> dx(self.values.size());
                                 for (std::size_t i = 0; i < dx.size(); ++i) {
                                     const double s = self.values[i];
                                     dx[i] = self.grad[i] * s * (1.0 - s);
                                 }
                                 in.impl()->accumulate_grad(dx);
                             });
}

Tensor softplus(const Tensor& x) {
    if (!x.defined()) {
        throw ShapeError("softplus on undefined tensor");
    }
    std::vector<double> out(x.values().size());
    const auto& v = x.values();
    for (std::size_t i = 0; i < v.size(); ++i) {
        // ln(1 + e^x), overflow-safe on both tails.
        out[i] = v[i] > 0.0 ? v[i] + std::log1p(std::exp(-v[i])) : std::log1p(std::exp(v[i]));
    }
    Tensor in = x;
    return Tensor::make_node(x.dims(), std::move(out), {x},
                             [in](const detail::TensorImpl& self) {
                                 if (!in.requires_grad()) {
                                     return;
                                 }
                                 const auto& v = in.values();
                                 std::vector<double> dx(v.size());
                                 for (std::size_t i = 0; i < v.size(); ++i) {
                                     dx[i] = self.grad[i] * stable_sigmoid(v[i]);
                                 }
                                 in.impl()->accumulate_grad(dx);
                             });
}

Tensor add(const Tensor& a, const Tensor& b) {
    if (!a.defined() || !b.defined() || a.dims() != b.dims()) {
        throw ShapeError("add operands must share dims");
    }
    std::vector<double> out(a.values().size());
    const auto& va = a.values();
    const auto& vb = b.values();
    for (std::size_t i = 0; i < out.size(); ++i) {
        out[i] = va[i] + vb[i];
    }
    Tensor ta = a, tb = b;
    return Tensor::make_node(a.dims(), std::move(out), {a, b},
                             [ta, tb](const detail::TensorImpl& self) {
                                 if (ta.requires_grad()) {
                                     ta.impl()->accumulate_grad(self.grad);
                                 }
                                 if (tb.requires_grad()) {
                                     tb.impl()->accumulate_grad(self.grad);
                                 }
                             });
}

Tensor concat_channels(const Tensor& a, const Tensor& b) {
    check_4d(a, "concat_channels lhs");
    check_4d(b, "concat_channels rhs");
    if (a.dim(0) != b.dim(0) || a.dim(2) != b.dim(2) || a.dim(3) != b.dim(3)) {
        throw ShapeError("concat_channels operands must agree on batch and spatial dims: " +
                         shape_str(a.dims()) + " vs " + shape_str(b.dims()));
    }
    const int n = a.dim(0), ca = a.dim(1), cb = b.dim(1);
    const int64_t hw = static_cast<int64_t>(a.dim(2)) * a.dim(3);
    std::vector<double> out(static_cast<std::size_t>(n) * (ca + cb) * hw);
    for (int s = 0; s < n; ++s) {
        double* dst = out.data() + static_cast<int64_t>(s) * (ca + cb) * hw;
        std::copy_n(a.values().data() + static_cast<int64_t>(s) * ca * hw, ca * hw, dst);
        std::copy_n(b.values().data() + static_cast<int64_t>(s) * cb * hw, cb * hw, dst + ca * hw);
    }
    Tensor ta = a, tb = b;
    return Tensor::make_node(
        {n, ca + cb, a.dim(2), a.dim(3)}, std::move(out), {a, b},
        [ta, tb, n, ca, cb, hw](const detail::TensorImpl& self) {
            if (ta.requires_grad()) {
                std::vector<double> da(ta.values().size());
                for (int s = 0; s < n; ++s) {
                    std::copy_n(self.grad.data() + static_cast<int64_t>(s) * (ca + cb) * hw,
                                ca * hw, da.data() + static_cast<int64_t>(s) * ca * hw);
                }
                ta.impl()->accumulate_grad(da);
            }
            if (tb.requires_grad()) {
                std::vector<double> db(tb.values().size());
                for (int s = 0; s < n; ++s) {
                    std::copy_n(self.grad.data() + static_cast<int64_t>(s) * (ca + cb) * hw +
                                    ca * hw,
                                cb * hw, db.data() + static_cast<int64_t>(s) * cb * hw);
                }
                tb.impl()->accumulate_grad(db);
            }
        });
}

Tensor channel_scale(const Tensor& map, const Tensor& weights) {
    check_4d(map, "channel_scale map");
    check_4d(weights, "channel_scale weights");
    const int n = map.dim(0), c = map.dim(1);
    if (weights.dims() != Shape{n, c, 1, 1}) {
        throw ShapeError("channel_scale weights must be [" + std::to_string(n) + "," +
                         std::to_string(c) + ",1,1], got " + shape_str(weights.dims()));
    }
    const int64_t hw = static_cast<int64_t>(map.dim(2)) * map.dim(3);
    const int64_t planes = static_cast<int64_t>(n) * c;
    std::vector<double> out(map.values().size());
    const double* mp = map.values().data();
    const double* wp = weights.values().data();
    for (int64_t p = 0; p < planes; ++p) {
        const double s = wp[p];
        const double* src = mp + p * hw;
        double* dst = out.data() + p * hw;
        for (int64_t j = 0; j < hw; ++j) {
            dst[j] = src[j] * s;
        }
    }
    Tensor tm = map, tw = weights;
    return Tensor::make_node(
        map.dims(), std::move(out), {map, weights},
        [tm, tw, planes, hw](const detail::TensorImpl& self) {
            if (tm.requires_grad()) {
                std::vector<double> dm(tm.values().size());
                const double* wp = tw.values().data();
                for (int64_t p = 0; p < planes; ++p) {
                    const double s = wp[p];
                    const double* g = self.grad.data() + p * hw;
                    double* dst = dm.data() + p * hw;
                    for (int64_t j = 0; j < hw; ++j) {
                        dst[j] = g[j] * s;
                    }
                }
                tm.impl()->accumulate_grad(dm);
            }
            if (tw.requires_grad()) {
                std::vector<double> dw(tw.values().size());
                const double* mp = tm.values().data();
                for (int64_t p = 0; p < planes; ++p) {
                    const double* g = self.grad.data() + p * hw;
                    const double* src = mp + p * hw;
                    double acc = 0.0;
                    for (int64_t j = 0; j < hw; ++j) {
                        acc += g[j] * src[j];
                    }
                    dw[static_cast<std::size_t>(p)] = acc;
                }
                tw.impl()->accumulate_grad(dw);
            }
        });
}

Tensor batchnorm_frozen(const Tensor& input, const Tensor& gamma, const Tensor& beta,
                        const Tensor& mean, const Tensor& var, double eps) {
    check_4d(input, "batchnorm input");
    if (eps <= 0.0) {
        throw ConfigError("batchnorm eps must be positive");
    }
    const int c = input.dim(1);
    for (const auto* t : {&gamma, &beta, &mean, &var}) {
        if (!t->defined() || t->dims() != Shape{c}) {
            throw ShapeError("batchnorm stats must be [" + std::to_string(c) + "] vectors");
        }
        if (t->requires_grad()) {
            throw UsageError("batchnorm statistics are frozen and must not require gradients");
        }
    }
    for (double v : var.values()) {
        if (v < 0.0) {
            throw DataError("batchnorm variance must be non-negative");
        }
    }

    // Stored statistics only; collapse to y = x*scale + shift per channel.
    auto scale = std::make_shared<std::vector<double>>(static_cast<std::size_t>(c));
    std::vector<double> shift(static_cast<std::size_t>(c));
    for (int i = 0; i < c; ++i) {
        const std::size_t s = static_cast<std::size_t>(i);
        (*scale)[s] = gamma.values()[s] / std::sqrt(var.values()[s] + eps);
        shift[s] = beta.values()[s] - mean.values()[s] * (*scale)[s];
    }

    const int n = input.dim(0);
    const int64_t hw = static_cast<int64_t>(input.dim(2)) * input.dim(3);
    std::vector<double> out(input.values().size());
    const double* xp = input.values().data();
    for (int s = 0; s < n; ++s) {
        for (int ch = 0; ch < c; ++ch) {
            const double sc = (*scale)[static_cast<std::size_t>(ch)];
            const double sh = shift[static_cast<std::size_t>(ch)];
            const int64_t base = (static_cast<int64_t>(s) * c + ch) * hw;
            for (int64_t j = 0; j < hw; ++j) {
                out[static_cast<std::size_t>(base + j)] = xp[base + j] * sc + sh;
            }
        }
    }

    Tensor x = input;
    return Tensor::make_node(input.dims(), std::move(out), {input},
                             [x, scale, n, c, hw](const detail::TensorImpl& self) {
                                 if (!x.requires_grad()) {
                                     return;
                                 }
                                 std::vector<double> dx(x.values().size());
                                 for (int s = 0; s < n; ++s) {
                                     for (int ch = 0; ch < c; ++ch) {
                                         const double sc = (*scale)[static_cast<std::size_t>(ch)];
                                         const int64_t base = (static_cast<int64_t>(s) * c + ch) * hw;
                                         for (int64_t j = 0; j < hw; ++j) {
                                             dx[static_cast<std::size_t>(base + j)] =
                                                 self.grad[static_cast<std::size_t>(base + j)] * sc;
                                         }
                                     }
                                 }
                                 x.impl()->accumulate_grad(dx);
                             });
}

Tensor sum(const Tensor& x) {
    if (!x.defined()) {
        throw ShapeError("sum on undefined tensor");
    }
    double acc = 0.0;
    for (double v : x.values()) {
        acc += v;
    }
    Tensor in = x;
    return Tensor::make_node({1}, {acc}, {x}, [in](const detail::TensorImpl& self) {
        if (!in.requires_grad()) {
            return;
        }
        in.impl()->accumulate_grad(std::vector<double>(in.values().size(), self.grad[0]));
    });
}

}  // namespace detailnet
