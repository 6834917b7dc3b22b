#pragma once

#include "detailnet/tensor.hpp"

namespace detailnet {

struct BokehParams {
    double focus_depth = 1.0;   // meters
    double aperture = 0.0;      // dimensionless blur gain
    double max_radius = 16.0;   // pixels

    void validate() const;
};

// Depth-of-field simulation. Per pixel the circle-of-confusion radius is
// rho = min(max_radius, aperture * |1/z - 1/focus| * focus); the output is a
// normalized flat-disc gather over that radius. rho < 1 pixels pass through
// bitwise. rgb [3,H,W] in [0,1], depth [1,H,W] positive meters.
Tensor render_bokeh(const Tensor& rgb, const Tensor& depth, const BokehParams& params);

}  // namespace detailnet
