#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "detailnet/network.hpp"
#include "detailnet/sample.hpp"
#include "detailnet/tensor.hpp"
#include "detailnet/trainer.hpp"

namespace detailnet {

// Binary PPM (P6, maxval 255). rgb is [3,H,W] in [0,1]; values are clamped
// and quantized on write.
void write_ppm(const std::string& path, const Tensor& rgb);
Tensor read_ppm(const std::string& path);

// Binary PGM (P5, maxval 65535, big-endian samples) storing depth at a fixed
// unit, default millimeters. Zero marks missing depth.
void write_pgm16(const std::string& path, const Tensor& depth_meters, double unit = 0.001);
Tensor read_pgm16(const std::string& path, double unit = 0.001);

// key=value metadata: fx, fy, cx, cy, optional depth_unit (meters per raw
// count, default 0.001).
struct SampleMeta {
    CameraIntrinsics intrinsics;
    double depth_unit = 0.001;
};
SampleMeta read_meta(const std::string& path);
void write_meta(const std::string& path, const SampleMeta& meta);

// Downsample to 312x416 (rgb bilinear, depth nearest) then center-crop to
// 240x320.
RgbdSample nyu_preprocess(const RgbdSample& sample);

RgbdSample load_sample(const std::string& rgb_path, const std::string& depth_path,
                       const std::string& meta_path, bool apply_nyu_preprocess = false);
void save_sample(const RgbdSample& sample, const std::string& rgb_path,
                 const std::string& depth_path, const std::string& meta_path);

// Directory convention used by the CLI: NNNN.ppm / NNNN.pgm / NNNN.txt.
std::vector<RgbdSample> load_dataset(const std::string& dir, bool apply_nyu_preprocess = false);
void save_dataset(const std::vector<RgbdSample>& samples, const std::string& dir);

enum class TextureMode { kFlat, kGradient };

struct SynthSceneConfig {
    std::uint64_t seed = 0;
    int height = 64;
    int width = 64;
    double depth_min = 0.5;
    double depth_max = 8.0;
    int min_objects = 2;
    int max_objects = 6;
    TextureMode texture = TextureMode::kGradient;

    void validate() const;
};

// Deterministic scenes: a background plane at depth_max plus randomly placed
// rectangles and discs, composited nearest-last so color and depth always
// agree. Masks are all-valid.
std::vector<RgbdSample> generate_synthetic(const SynthSceneConfig& cfg, int count);

struct AppConfig {
    NetworkConfig network;
    TrainConfig train;
    std::string train_dir;
    std::string eval_dir;
    std::string checkpoint_path;
    std::string output_dir;
};

// key=value text with '#' comments; unknown keys and unparseable values are
// errors naming the line. Omitted keys keep their defaults.
AppConfig parse_config(const std::string& path);

}  // namespace detailnet
