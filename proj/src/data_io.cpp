#include "detailnet/data_io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "detailnet/errors.hpp"
#include "detailnet/ops.hpp"
#include "detailnet/rng.hpp"

namespace fs = std::filesystem;

namespace detailnet {

namespace {

int next_header_int(std::istream& in, const std::string& path) {
    int c;
    while ((c = in.get()) != EOF) {
        if (c == '#') {
            while ((c = in.get()) != EOF && c != '\n') {
            }
        } else if (!std::isspace(c)) {
            break;
        }
    }
    if (c == EOF) {
        throw FormatError("truncated header in " + path);
    }
    if (!std::isdigit(c)) {
        throw FormatError("malformed header token in " + path);
    }
    long value = 0;
    while (c != EOF && std::isdigit(c)) {
        value = value * 10 + (c - '0');
        if (value > 1 << 30) {
            throw FormatError("header value out of range in " + path);
        }
        c = in.get();
    }
    // the character just consumed is the single whitespace ending the token
    return static_cast<int>(value);
}

void check_magic(std::istream& in, const char* magic, const std::string& path) {
    char got[2];
    in.read(got, 2);
    if (!in || got[0] != magic[0] || got[1] != magic[1]) {
        throw FormatError(std::string("expected ") + magic + " magic in " + path);
    }
}

std::uint8_t quantize255(double v) {
    return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0));
}

// Spatial bilinear resize for a [C,H,W] tensor via the 4-D op.
Tensor resize_chw(const Tensor& t, int out_h, int out_w) {
    NoGradGuard guard;
    Tensor as4d = Tensor::from_values({1, t.dim(0), t.dim(1), t.dim(2)},
                                      std::vector<double>(t.values()));
    Tensor resized = bilinear_resize(as4d, out_h, out_w);
    return Tensor::from_values({t.dim(0), out_h, out_w}, std::vector<double>(resized.values()));
}

Tensor crop_chw(const Tensor& t, int row0, int col0, int out_h, int out_w) {
    const int c = t.dim(0);
    const int in_h = t.dim(1);
    const int in_w = t.dim(2);
    std::vector<double> out(static_cast<std::size_t>(c) * out_h * out_w);
    for (int ch = 0; ch < c; ++ch) {
        for (int y = 0; y < out_h; ++y) {
            const double* src =
                t.values().data() +
                (static_cast<std::int64_t>(ch) * in_h + row0 + y) * in_w + col0;
            std::copy(src, src + out_w,
                      out.begin() + (static_cast<std::int64_t>(ch) * out_h + y) * out_w);
        }
    }
    return Tensor::from_values({c, out_h, out_w}, std::move(out));
}

Tensor mask_from_depth(const Tensor& depth) {
    std::vector<double> mask(depth.values().size());
    for (std::size_t i = 0; i < mask.size(); ++i) {
        mask[i] = depth.values()[i] > 0.0 ? 1.0 : 0.0;
    }
    return Tensor::from_values(depth.dims(), std::move(mask));
}

struct ConfigLine {
    int number;
    std::string key;
    std::string value;
};

std::vector<ConfigLine> read_kv_file(const std::string& path) {
    std::ifstream file(path);
    if (!file) {
        throw IoError("cannot open " + path);
    }
    std::vector<ConfigLine> lines;
    std::string raw;
    int number = 0;
    while (std::getline(file, raw)) {
        ++number;
        const std::size_t hash = raw.find('#');
        if (hash != std::string::npos) {
            raw.erase(hash);
        }
        auto trim = [](std::string s) {
            const auto begin = s.find_first_not_of(" \t\r");
            if (begin == std::string::npos) {
                return std::string();
            }
            return s.substr(begin, s.find_last_not_of(" \t\r") - begin + 1);
        };
        const std::string line = trim(raw);
        if (line.empty()) {
            continue;
        }
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos) {
            throw ConfigError(path + ":" + std::to_string(number) + ": expected key=value");
        }
        lines.push_back({number, trim(line.substr(0, eq)), trim(line.substr(eq + 1))});
    }
    return lines;
}

double parse_double(const ConfigLine& line, const std::string& path) {
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(line.value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != line.value.size() || line.value.empty()) {
        throw ConfigError(path + ":" + std::to_string(line.number) + ": cannot parse '" +
                          line.value + "' as a number for " + line.key);
    }
    return v;
}

std::int64_t parse_int(const ConfigLine& line, const std::string& path) {
    std::size_t used = 0;
    long long v = 0;
    try {
        v = std::stoll(line.value, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used != line.value.size() || line.value.empty()) {
        throw ConfigError(path + ":" + std::to_string(line.number) + ": cannot parse '" +
                          line.value + "' as an integer for " + line.key);
    }
    return v;
}

bool parse_bool(const ConfigLine& line, const std::string& path) {
    if (line.value == "1" || line.value == "true" || line.value == "on") {
        return true;
    }
    if (line.value == "0" || line.value == "false" || line.value == "off") {
        return false;
    }
    throw ConfigError(path + ":" + std::to_string(line.number) + ": cannot parse '" + line.value +
                      "' as a boolean for " + line.key);
}

std::array<int, 4> parse_int4(const ConfigLine& line, const std::string& path) {
    std::array<int, 4> out{};
    std::istringstream ss(line.value);
    std::string tok;
    int filled = 0;
    while (std::getline(ss, tok, ',')) {
        if (filled == 4) {
            ++filled;
            break;
        }
        try {
            std::size_t used = 0;
            out[static_cast<std::size_t>(filled)] = std::stoi(tok, &used);
            if (used != tok.size() || tok.empty()) {
                throw std::invalid_argument("");
            }
        } catch (const std::exception&) {
            throw ConfigError(path + ":" + std::to_string(line.number) +
                              ": expected four comma-separated integers for " + line.key);
        }
        ++filled;
    }
    if (filled != 4) {
        throw ConfigError(path + ":" + std::to_string(line.number) +
                          ": expected four comma-separated integers for " + line.key);
    }
    return out;
}

}  // namespace

void write_ppm(const std::string& path, const Tensor& rgb) {
    if (rgb.ndim() != 3 || rgb.dim(0) != 3) {
        throw ShapeError("write_ppm: rgb must be [3,H,W]");
    }
    const int h = rgb.dim(1);
    const int w = rgb.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::string data;
    data.reserve(static_cast<std::size_t>(plane) * 3 + 32);
    data += "P6\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    for (std::int64_t i = 0; i < plane; ++i) {
        data.push_back(static_cast<char>(quantize255(rgb.value_at(i))));
        data.push_back(static_cast<char>(quantize255(rgb.value_at(plane + i))));
        data.push_back(static_cast<char>(quantize255(rgb.value_at(2 * plane + i))));
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("write_ppm: cannot open " + path);
    }
    file.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!file) {
        throw IoError("write_ppm: write failed for " + path);
    }
}

Tensor read_ppm(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("read_ppm: cannot open " + path);
    }
    check_magic(file, "P6", path);
    const int w = next_header_int(file, path);
    const int h = next_header_int(file, path);
    const int maxval = next_header_int(file, path);
    if (maxval != 255) {
        throw FormatError("read_ppm: unsupported maxval " + std::to_string(maxval) + " in " + path);
    }
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<char> raw(static_cast<std::size_t>(plane) * 3);
    file.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!file) {
        throw FormatError("read_ppm: truncated pixel data in " + path);
    }
    std::vector<double> values(static_cast<std::size_t>(plane) * 3);
    for (std::int64_t i = 0; i < plane; ++i) {
        for (int c = 0; c < 3; ++c) {
            values[static_cast<std::size_t>(c * plane + i)] =
                static_cast<double>(static_cast<unsigned char>(raw[static_cast<std::size_t>(3 * i + c)])) /
                255.0;
        }
    }
    return Tensor::from_values({3, h, w}, std::move(values));
}

void write_pgm16(const std::string& path, const Tensor& depth_meters, double unit) {
    if (depth_meters.ndim() != 3 || depth_meters.dim(0) != 1) {
        throw ShapeError("write_pgm16: depth must be [1,H,W]");
    }
    if (unit <= 0.0) {
        throw ConfigError("write_pgm16: depth unit must be positive");
    }
    const int h = depth_meters.dim(1);
    const int w = depth_meters.dim(2);
    std::string data;
    data += "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n65535\n";
    for (std::int64_t i = 0; i < depth_meters.numel(); ++i) {
        const double counts = depth_meters.value_at(i) / unit;
        const long v = std::lround(std::clamp(counts, 0.0, 65535.0));
        data.push_back(static_cast<char>((v >> 8) & 0xff));  // big-endian per NetPBM
        data.push_back(static_cast<char>(v & 0xff));
    }
    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("write_pgm16: cannot open " + path);
    }
    file.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!file) {
        throw IoError("write_pgm16: write failed for " + path);
    }
}

Tensor read_pgm16(const std::string& path, double unit) {
    if (unit <= 0.0) {
        throw ConfigError("read_pgm16: depth unit must be positive");
    }
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("read_pgm16: cannot open " + path);
    }
    check_magic(file, "P5", path);
    const int w = next_header_int(file, path);
    const int h = next_header_int(file, path);
    const int maxval = next_header_int(file, path);
    if (maxval != 65535) {
        throw FormatError("read_pgm16: unsupported maxval " + std::to_string(maxval) + " in " +
                          path);
    }
    std::vector<char> raw(static_cast<std::size_t>(h) * w * 2);
    file.read(raw.data(), static_cast<std::streamsize>(raw.size()));
    if (!file) {
        throw FormatError("read_pgm16: truncated pixel data in " + path);
    }
    std::vector<double> values(static_cast<std::size_t>(h) * w);
    for (std::size_t i = 0; i < values.size(); ++i) {
        const unsigned hi = static_cast<unsigned char>(raw[2 * i]);
        const unsigned lo = static_cast<unsigned char>(raw[2 * i + 1]);
        values[i] = static_cast<double>((hi << 8) | lo) * unit;
    }
    return Tensor::from_values({1, h, w}, std::move(values));
}

SampleMeta read_meta(const std::string& path) {
    SampleMeta meta;
    bool have_fx = false, have_fy = false, have_cx = false, have_cy = false;
    // meta files are data, not user configuration, so line-level problems
    // surface as format errors
    try {
        for (const ConfigLine& line : read_kv_file(path)) {
            if (line.key == "fx") {
                meta.intrinsics.fx = parse_double(line, path);
                have_fx = true;
            } else if (line.key == "fy") {
                meta.intrinsics.fy = parse_double(line, path);
                have_fy = true;
            } else if (line.key == "cx") {
                meta.intrinsics.cx = parse_double(line, path);
                have_cx = true;
            } else if (line.key == "cy") {
                meta.intrinsics.cy = parse_double(line, path);
                have_cy = true;
            } else if (line.key == "depth_unit") {
                meta.depth_unit = parse_double(line, path);
                if (meta.depth_unit <= 0.0) {
                    throw ConfigError(path + ":" + std::to_string(line.number) +
                                      ": depth_unit must be positive");
                }
            } else {
                throw ConfigError(path + ":" + std::to_string(line.number) + ": unknown key '" +
                                  line.key + "'");
            }
        }
    } catch (const ConfigError& e) {
        throw FormatError(e.what());
    }
    if (!have_fx || !have_fy || !have_cx || !have_cy) {
        throw FormatError(path + ": missing intrinsics (need fx, fy, cx, cy)");
    }
    return meta;
}

void write_meta(const std::string& path, const SampleMeta& meta) {
    std::ostringstream out;
    out.precision(17);
    out << "fx=" << meta.intrinsics.fx << "\n"
        << "fy=" << meta.intrinsics.fy << "\n"
        << "cx=" << meta.intrinsics.cx << "\n"
        << "cy=" << meta.intrinsics.cy << "\n"
        << "depth_unit=" << meta.depth_unit << "\n";
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw IoError("write_meta: cannot open " + path);
    }
    file << out.str();
    if (!file) {
        throw IoError("write_meta: write failed for " + path);
    }
}

RgbdSample nyu_preprocess(const RgbdSample& sample) {
    constexpr int kResizeH = 312, kResizeW = 416;
    constexpr int kCropH = 240, kCropW = 320;
    const int row0 = (kResizeH - kCropH) / 2;
    const int col0 = (kResizeW - kCropW) / 2;

    if (sample.height() < kResizeH || sample.width() < kResizeW) {
        throw ShapeError("nyu_preprocess: input must be at least 312x416, got " +
                         std::to_string(sample.height()) + "x" + std::to_string(sample.width()));
    }
    const double sy = static_cast<double>(kResizeH) / sample.height();
    const double sx = static_cast<double>(kResizeW) / sample.width();

    RgbdSample out;
    out.rgb = crop_chw(resize_chw(sample.rgb, kResizeH, kResizeW), row0, col0, kCropH, kCropW);
    out.depth = crop_chw(nearest_resize(sample.depth, kResizeH, kResizeW), row0, col0, kCropH,
                         kCropW);
    out.mask = mask_from_depth(out.depth);
    out.intrinsics.fx = sample.intrinsics.fx * sx;
    out.intrinsics.fy = sample.intrinsics.fy * sy;
    out.intrinsics.cx = sample.intrinsics.cx * sx - col0;
    out.intrinsics.cy = sample.intrinsics.cy * sy - row0;
    out.id = sample.id;
    return out;
}

RgbdSample load_sample(const std::string& rgb_path, const std::string& depth_path,
                       const std::string& meta_path, bool apply_nyu_preprocess) {
    const SampleMeta meta = read_meta(meta_path);
    RgbdSample sample;
    sample.rgb = read_ppm(rgb_path);
    sample.depth = read_pgm16(depth_path, meta.depth_unit);
    if (sample.depth.dim(1) != sample.rgb.dim(1) || sample.depth.dim(2) != sample.rgb.dim(2)) {
        throw FormatError("load_sample: rgb and depth dims disagree (" + rgb_path + " vs " +
                          depth_path + ")");
    }
    sample.mask = mask_from_depth(sample.depth);
    sample.intrinsics = meta.intrinsics;
    sample.id = fs::path(rgb_path).stem().string();
    if (apply_nyu_preprocess) {
        sample = nyu_preprocess(sample);
    }
    return sample;
}

void save_sample(const RgbdSample& sample, const std::string& rgb_path,
                 const std::string& depth_path, const std::string& meta_path) {
    sample.validate();
    write_ppm(rgb_path, sample.rgb);
    // invalid pixels are stored as zero depth, the format's missing marker
    std::vector<double> masked(sample.depth.values());
    for (std::size_t i = 0; i < masked.size(); ++i) {
        if (sample.mask.values()[i] == 0.0) {
            masked[i] = 0.0;
        }
    }
    write_pgm16(depth_path, Tensor::from_values(sample.depth.dims(), std::move(masked)));
    write_meta(meta_path, SampleMeta{sample.intrinsics, 0.001});
}

std::vector<RgbdSample> load_dataset(const std::string& dir, bool apply_nyu_preprocess) {
    if (!fs::is_directory(dir)) {
        throw IoError("load_dataset: not a directory: " + dir);
    }
    std::vector<fs::path> stems;
    for (const auto& entry : fs::directory_iterator(dir)) {
        if (entry.path().extension() == ".ppm") {
            stems.push_back(entry.path());
        }
    }
    std::sort(stems.begin(), stems.end());
    if (stems.empty()) {
        throw DataError("load_dataset: no .ppm samples in " + dir);
    }
    std::vector<RgbdSample> samples;
    samples.reserve(stems.size());
    for (const fs::path& rgb : stems) {
        fs::path depth = rgb;
        depth.replace_extension(".pgm");
        fs::path meta = rgb;
        meta.replace_extension(".txt");
        samples.push_back(
            load_sample(rgb.string(), depth.string(), meta.string(), apply_nyu_preprocess));
    }
    return samples;
}

void save_dataset(const std::vector<RgbdSample>& samples, const std::string& dir) {
    fs::create_directories(dir);
    char name[16];
    for (std::size_t i = 0; i < samples.size(); ++i) {
        std::snprintf(name, sizeof(name), "%04zu", i);
        const std::string stem = (fs::path(dir) / name).string();
        save_sample(samples[i], stem + ".ppm", stem + ".pgm", stem + ".txt");
    }
}

void SynthSceneConfig::validate() const {
    if (height < 4 || width < 4 || height % 4 != 0 || width % 4 != 0) {
        throw ConfigError("synthetic dims must be positive multiples of 4");
    }
    if (!(0.0 < depth_min && depth_min < depth_max)) {
        throw ConfigError("synthetic depth range needs 0 < depth_min < depth_max");
    }
    if (min_objects < 0 || max_objects < min_objects) {
        throw ConfigError("synthetic object count range inverted");
    }
}

std::vector<RgbdSample> generate_synthetic(const SynthSceneConfig& cfg, int count) {
    cfg.validate();
    if (count <= 0) {
        throw ConfigError("generate_synthetic: count must be positive");
    }
    Rng rng(cfg.seed);
    const int h = cfg.height;
    const int w = cfg.width;
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;

    std::vector<RgbdSample> out;
    out.reserve(static_cast<std::size_t>(count));
    for (int scene = 0; scene < count; ++scene) {
        std::vector<double> rgb(static_cast<std::size_t>(plane) * 3);
        std::vector<double> depth(static_cast<std::size_t>(plane), cfg.depth_max);

        // background
        double bg[3] = {rng.uniform(0.05, 0.95), rng.uniform(0.05, 0.95),
                        rng.uniform(0.05, 0.95)};
        for (std::int64_t i = 0; i < plane; ++i) {
            const double shade =
                cfg.texture == TextureMode::kGradient
                    ? 0.6 + 0.4 * static_cast<double>(i % w) / std::max(1, w - 1)
                    : 1.0;
            rgb[static_cast<std::size_t>(i)] = bg[0] * shade;
            rgb[static_cast<std::size_t>(plane + i)] = bg[1] * shade;
            rgb[static_cast<std::size_t>(2 * plane + i)] = bg[2] * shade;
        }

        struct Object {
            bool disc;
            double depth;
            double cx, cy, size;
            double color[3];
        };
        const int n_objects =
            cfg.min_objects +
            static_cast<int>(rng.uniform_int(
                static_cast<std::uint64_t>(cfg.max_objects - cfg.min_objects + 1)));
        std::vector<Object> objects;
        for (int k = 0; k < n_objects; ++k) {
            Object obj;
            obj.disc = rng.uniform_int(2) == 1;
            obj.depth = rng.uniform(cfg.depth_min, cfg.depth_max);
            obj.cx = rng.uniform(0.0, w);
            obj.cy = rng.uniform(0.0, h);
            obj.size = rng.uniform(0.1, 0.3) * std::min(h, w);
            obj.color[0] = rng.uniform(0.05, 0.95);
            obj.color[1] = rng.uniform(0.05, 0.95);
            obj.color[2] = rng.uniform(0.05, 0.95);
            objects.push_back(obj);
        }
        // painter's algorithm: far to near, so nearer shapes overwrite
        std::stable_sort(objects.begin(), objects.end(),
                         [](const Object& a, const Object& b) { return a.depth > b.depth; });
        for (const Object& obj : objects) {
            for (int y = 0; y < h; ++y) {
                for (int x = 0; x < w; ++x) {
                    bool inside;
                    if (obj.disc) {
                        const double dx = x - obj.cx;
                        const double dy = y - obj.cy;
                        inside = dx * dx + dy * dy <= obj.size * obj.size;
                    } else {
                        inside = std::abs(x - obj.cx) <= obj.size &&
                                 std::abs(y - obj.cy) <= obj.size * 0.7;
                    }
                    if (!inside) {
                        continue;
                    }
                    const std::int64_t i = static_cast<std::int64_t>(y) * w + x;
                    const double shade =
                        cfg.texture == TextureMode::kGradient
                            ? 0.6 + 0.4 * std::clamp((x - obj.cx) / (2.0 * obj.size) + 0.5, 0.0,
                                                     1.0)
                            : 1.0;
                    rgb[static_cast<std::size_t>(i)] = obj.color[0] * shade;
                    rgb[static_cast<std::size_t>(plane + i)] = obj.color[1] * shade;
                    rgb[static_cast<std::size_t>(2 * plane + i)] = obj.color[2] * shade;
                    depth[static_cast<std::size_t>(i)] = obj.depth;
                }
            }
        }

        RgbdSample sample;
        sample.rgb = Tensor::from_values({3, h, w}, std::move(rgb));
        sample.depth = Tensor::from_values({1, h, w}, std::move(depth));
        sample.mask = Tensor::full({1, h, w}, 1.0);
        sample.intrinsics = {static_cast<double>(w), static_cast<double>(w), (w - 1) / 2.0,
                             (h - 1) / 2.0};
        sample.id = "synth-" + std::to_string(cfg.seed) + "-" + std::to_string(scene);
        out.push_back(std::move(sample));
    }
    return out;
}

AppConfig parse_config(const std::string& path) {
    AppConfig cfg;
    for (const ConfigLine& line : read_kv_file(path)) {
        const std::string& key = line.key;
        if (key == "preset") {
            cfg.network = NetworkConfig::from_preset(line.value);
        } else if (key == "stem_channels") {
            cfg.network.stem_channels = static_cast<int>(parse_int(line, path));
        } else if (key == "stage_channels") {
            cfg.network.stage_channels = parse_int4(line, path);
        } else if (key == "stage_blocks") {
            cfg.network.stage_blocks = parse_int4(line, path);
        } else if (key == "reduced_channels") {
            cfg.network.reduced_channels = static_cast<int>(parse_int(line, path));
        } else if (key == "attention_ratio") {
            cfg.network.attention_ratio = static_cast<int>(parse_int(line, path));
        } else if (key == "batch_size") {
            cfg.train.batch_size = static_cast<int>(parse_int(line, path));
        } else if (key == "epochs") {
            cfg.train.epochs = static_cast<int>(parse_int(line, path));
        } else if (key == "dfe_l_init") {
            cfg.train.dfe_l_init = parse_double(line, path);
        } else if (key == "dfe_l_end") {
            cfg.train.dfe_l_end = parse_double(line, path);
        } else if (key == "dmg_l_init") {
            cfg.train.dmg_l_init = parse_double(line, path);
        } else if (key == "dmg_l_end") {
            cfg.train.dmg_l_end = parse_double(line, path);
        } else if (key == "power") {
            cfg.train.power = parse_double(line, path);
        } else if (key == "decay_epochs") {
            cfg.train.decay_epochs = static_cast<int>(parse_int(line, path));
        } else if (key == "decay_steps") {
            cfg.train.decay_steps_override = parse_int(line, path);
        } else if (key == "total_steps") {
            cfg.train.total_steps_override = parse_int(line, path);
        } else if (key == "freeze_first_two_stages") {
            cfg.train.freeze_first_two_stages = parse_bool(line, path);
        } else if (key == "augment") {
            cfg.train.augment_enabled = parse_bool(line, path);
        } else if (key == "seed") {
            cfg.train.seed = static_cast<std::uint64_t>(parse_int(line, path));
        } else if (key == "beta1") {
            cfg.train.adam.beta1 = parse_double(line, path);
        } else if (key == "beta2") {
            cfg.train.adam.beta2 = parse_double(line, path);
        } else if (key == "adam_eps") {
            cfg.train.adam.eps = parse_double(line, path);
        } else if (key == "brightness_lo") {
            cfg.train.augment.brightness_lo = parse_double(line, path);
        } else if (key == "brightness_hi") {
            cfg.train.augment.brightness_hi = parse_double(line, path);
        } else if (key == "contrast_lo") {
            cfg.train.augment.contrast_lo = parse_double(line, path);
        } else if (key == "contrast_hi") {
            cfg.train.augment.contrast_hi = parse_double(line, path);
        } else if (key == "flip_probability") {
            cfg.train.augment.flip_probability = parse_double(line, path);
        } else if (key == "contrast_pivot") {
            if (line.value == "mean") {
                cfg.train.augment.contrast_pivot = ContrastPivot::kImageMean;
            } else if (line.value == "half") {
                cfg.train.augment.contrast_pivot = ContrastPivot::kHalf;
            } else {
                throw ConfigError(path + ":" + std::to_string(line.number) +
                                  ": contrast_pivot must be 'mean' or 'half'");
            }
        } else if (key == "train_dir") {
            cfg.train_dir = line.value;
        } else if (key == "eval_dir") {
            cfg.eval_dir = line.value;
        } else if (key == "checkpoint") {
            cfg.checkpoint_path = line.value;
        } else if (key == "output_dir") {
            cfg.output_dir = line.value;
        } else {
            throw ConfigError(path + ":" + std::to_string(line.number) + ": unknown key '" + key +
                              "'");
        }
    }
    cfg.network.validate();
    cfg.train.validate();
    return cfg;
}

}  // namespace detailnet
