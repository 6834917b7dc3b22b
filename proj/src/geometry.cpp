#include "detailnet/geometry.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "detailnet/errors.hpp"

namespace detailnet {

namespace {

std::uint8_t to_byte(double v) {
    const double scaled = std::lround(std::min(1.0, std::max(0.0, v)) * 255.0);
    return static_cast<std::uint8_t>(scaled);
}

}  // namespace

PointCloud backproject(const Tensor& depth, const Tensor& rgb, const Tensor& mask,
                       const CameraIntrinsics& intrinsics) {
    if (depth.ndim() != 3 || depth.dim(0) != 1) {
        throw ShapeError("backproject: depth must be [1,H,W]");
    }
    const int h = depth.dim(1);
    const int w = depth.dim(2);
    if (rgb.dims() != Shape{3, h, w}) {
        throw ShapeError("backproject: rgb must be [3,H,W] matching depth");
    }
    if (mask.dims() != depth.dims()) {
        throw ShapeError("backproject: mask dims must match depth");
    }
    intrinsics.validate(w, h);

    PointCloud cloud;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    for (int v = 0; v < h; ++v) {
        for (int u = 0; u < w; ++u) {
            const std::int64_t i = static_cast<std::int64_t>(v) * w + u;
            if (mask.value_at(i) == 0.0) {
                continue;
            }
            const double z = depth.value_at(i);
            if (z <= 0.0) {
                throw DataError("backproject: non-positive depth on a valid pixel");
            }
            PointCloud::Point p;
            p.x = (u - intrinsics.cx) * z / intrinsics.fx;
            p.y = (v - intrinsics.cy) * z / intrinsics.fy;
            p.z = z;
            p.r = to_byte(rgb.value_at(i));
            p.g = to_byte(rgb.value_at(plane + i));
            p.b = to_byte(rgb.value_at(2 * plane + i));
            cloud.points.push_back(p);
        }
    }
    if (cloud.points.empty()) {
        throw DataError("backproject: no valid pixels");
    }
    return cloud;
}

void export_ply(const PointCloud& cloud, const std::string& path) {
    if (cloud.points.empty()) {
        throw DataError("export_ply: refusing to write an empty cloud");
    }
    std::ostringstream out;
    out << "ply\n"
           "format ascii 1.0\n"
           "element vertex "
        << cloud.points.size()
        << "\n"
           "property float x\n"
           "property float y\n"
           "property float z\n"
           "property uchar red\n"
           "property uchar green\n"
           "property uchar blue\n"
           "end_header\n";
    char line[128];
    for (const PointCloud::Point& p : cloud.points) {
        // positions quantized to float32, printed with enough digits to
        // round-trip that precision exactly
        std::snprintf(line, sizeof(line), "%.9g %.9g %.9g %d %d %d\n",
                      static_cast<double>(static_cast<float>(p.x)),
                      static_cast<double>(static_cast<float>(p.y)),
                      static_cast<double>(static_cast<float>(p.z)), static_cast<int>(p.r),
                      static_cast<int>(p.g), static_cast<int>(p.b));
        out << line;
    }
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw IoError("export_ply: cannot open " + path);
    }
    file << out.str();
    if (!file) {
        throw IoError("export_ply: write failed for " + path);
    }
}

PointCloud parse_ply(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("parse_ply: cannot open " + path);
    }
    std::string line;
    std::size_t expected = 0;
    bool in_header = true;
    PointCloud cloud;
    while (std::getline(file, line)) {
        if (in_header) {
            if (line.rfind("element vertex ", 0) == 0) {
                expected = static_cast<std::size_t>(std::stoull(line.substr(15)));
            } else if (line == "end_header") {
                in_header = false;
            } else if (cloud.points.empty() && line != "ply" && line != "format ascii 1.0" &&
                       line.rfind("property ", 0) != 0 && line.rfind("comment", 0) != 0) {
                throw FormatError("parse_ply: unexpected header line: " + line);
            }
            continue;
        }
        if (line.empty()) {
            continue;
        }
        std::istringstream ss(line);
        PointCloud::Point p;
        // positions were float32-quantized on write; parse at that width so
        // the round trip is exact
        float x, y, z;
        int r, g, b;
        if (!(ss >> x >> y >> z >> r >> g >> b)) {
            throw FormatError("parse_ply: malformed vertex line: " + line);
        }
        p.x = x;
        p.y = y;
        p.z = z;
        p.r = static_cast<std::uint8_t>(r);
        p.g = static_cast<std::uint8_t>(g);
        p.b = static_cast<std::uint8_t>(b);
        cloud.points.push_back(p);
    }
    if (in_header) {
        throw FormatError("parse_ply: missing end_header in " + path);
    }
    if (cloud.points.size() != expected) {
        throw FormatError("parse_ply: vertex count mismatch in " + path);
    }
    return cloud;
}

}  // namespace detailnet
