#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detailnet/sample.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

struct PointCloud {
    struct Point {
        double x;
        double y;
        double z;
        std::uint8_t r;
        std::uint8_t g;
        std::uint8_t b;
    };
    std::vector<Point> points;
};

// Pinhole back-projection: x = (u-cx) z / fx, y = (v-cy) z / fy with u the
// column and v the row. One colored point per valid pixel, in row-major
// pixel order. depth [1,H,W] meters, rgb [3,H,W] in [0,1], mask [1,H,W].
PointCloud backproject(const Tensor& depth, const Tensor& rgb, const Tensor& mask,
                       const CameraIntrinsics& intrinsics);

// ASCII PLY with float positions and uchar colors.
void export_ply(const PointCloud& cloud, const std::string& path);

// Reads the subset of ASCII PLY written by export_ply.
PointCloud parse_ply(const std::string& path);

}  // namespace detailnet
