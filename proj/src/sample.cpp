#include "detailnet/sample.hpp"

#include "detailnet/errors.hpp"

namespace detailnet {

void CameraIntrinsics::validate(int width, int height) const {
    if (fx <= 0.0 || fy <= 0.0) {
        throw ConfigError("focal lengths must be positive");
    }
    if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
        throw ConfigError("principal point outside image bounds");
    }
}

void RgbdSample::validate() const {
    if (rgb.ndim() != 3 || rgb.dim(0) != 3) {
        throw ShapeError("sample rgb must be [3,H,W]");
    }
    const Shape plane{1, rgb.dim(1), rgb.dim(2)};
    if (depth.dims() != plane || mask.dims() != plane) {
        throw ShapeError("sample planes disagree on dims");
    }
    for (std::int64_t i = 0; i < depth.numel(); ++i) {
        if (mask.value_at(i) != 0.0 && depth.value_at(i) <= 0.0) {
            throw DataError("non-positive depth on a valid pixel in sample " + id);
        }
    }
    intrinsics.validate(width(), height());
}

}  // namespace detailnet
