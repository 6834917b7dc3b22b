#include "detailnet/bokeh.hpp"

#include <cmath>
#include <vector>

#include "detailnet/errors.hpp"
#include "detailnet/threading.hpp"

namespace detailnet {

void BokehParams::validate() const {
    if (focus_depth <= 0.0) {
        throw ConfigError("bokeh focus depth must be positive");
    }
    if (aperture < 0.0) {
        throw ConfigError("bokeh aperture cannot be negative");
    }
    if (max_radius < 1.0) {
        // radii below one pixel pass every pixel through, silently disabling
        // the effect
        throw ConfigError("bokeh max radius must be at least 1 pixel");
    }
}

Tensor render_bokeh(const Tensor& rgb, const Tensor& depth, const BokehParams& params) {
    params.validate();
    if (rgb.ndim() != 3 || rgb.dim(0) != 3) {
        throw ShapeError("render_bokeh: rgb must be [3,H,W]");
    }
    const int h = rgb.dim(1);
    const int w = rgb.dim(2);
    if (depth.dims() != Shape{1, h, w}) {
        throw ShapeError("render_bokeh: depth dims must match rgb");
    }
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (std::int64_t i = 0; i < plane; ++i) {
        if (depth.value_at(i) <= 0.0) {
            throw DataError("render_bokeh: depth must be positive everywhere");
        }
    }

    std::vector<double> radius(static_cast<std::size_t>(plane));
    for (std::int64_t i = 0; i < plane; ++i) {
        const double z = depth.value_at(i);
        radius[static_cast<std::size_t>(i)] =
            std::min(params.max_radius,
                     params.aperture * std::abs(1.0 / z - 1.0 / params.focus_depth) *
                         params.focus_depth);
    }

    std::vector<double> out(rgb.values().size());
    const double* in = rgb.values().data();
    parallel_for(h, [&](std::int64_t y0, std::int64_t y1) {
        for (std::int64_t y = y0; y < y1; ++y) {
            for (int x = 0; x < w; ++x) {
                const std::int64_t i = y * w + x;
                const double rho = radius[static_cast<std::size_t>(i)];
                if (rho < 1.0) {
                    out[static_cast<std::size_t>(i)] = in[i];
                    out[static_cast<std::size_t>(plane + i)] = in[plane + i];
                    out[static_cast<std::size_t>(2 * plane + i)] = in[2 * plane + i];
                    continue;
                }
                const int reach = static_cast<int>(rho);
                const double rho_sq = rho * rho;
                double acc_r = 0.0, acc_g = 0.0, acc_b = 0.0;
                std::int64_t taps = 0;
                for (int dy = -reach; dy <= reach; ++dy) {
                    const std::int64_t sy = y + dy;
                    if (sy < 0 || sy >= h) {
                        continue;
                    }
                    for (int dx = -reach; dx <= reach; ++dx) {
                        const int sx = x + dx;
                        if (sx < 0 || sx >= w) {
                            continue;
                        }
                        if (static_cast<double>(dy) * dy + static_cast<double>(dx) * dx > rho_sq) {
                            continue;
                        }
                        const std::int64_t j = sy * w + sx;
                        acc_r += in[j];
                        acc_g += in[plane + j];
                        acc_b += in[2 * plane + j];
                        ++taps;
                    }
                }
                const double norm = 1.0 / static_cast<double>(taps);
                out[static_cast<std::size_t>(i)] = acc_r * norm;
                out[static_cast<std::size_t>(plane + i)] = acc_g * norm;
                out[static_cast<std::size_t>(2 * plane + i)] = acc_b * norm;
            }
        }
    });
    return Tensor::from_values(rgb.dims(), std::move(out));
}

}  // namespace detailnet
