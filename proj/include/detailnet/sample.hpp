#pragma once

#include <string>

#include "detailnet/tensor.hpp"

namespace detailnet {

struct CameraIntrinsics {
    double fx = 1.0;
    double fy = 1.0;
    double cx = 0.0;
    double cy = 0.0;

    void validate(int width, int height) const;
};

// One aligned RGB-D pair. rgb is [3,H,W] in [0,1], depth [1,H,W] in meters,
// mask [1,H,W] with 1 marking valid depth.
struct RgbdSample {
    Tensor rgb;
    Tensor depth;
    Tensor mask;
    CameraIntrinsics intrinsics;
    std::string id;

    int height() const { return rgb.dim(1); }
    int width() const { return rgb.dim(2); }
    void validate() const;
};

}  // namespace detailnet
