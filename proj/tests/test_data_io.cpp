#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>
#include <string>

#include "detailnet/data_io.hpp"
#include "detailnet/errors.hpp"
#include "oracles.hpp"

using namespace detailnet;

namespace {

std::string temp_path(const std::string& name) {
    return "/tmp/detailnet_test_" + name;
}

std::string temp_dir(const std::string& name) {
    const std::string dir = "/tmp/detailnet_test_" + name;
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

void write_text(const std::string& path, const std::string& body) {
    std::ofstream out(path, std::ios::binary);
    out << body;
}

bool bitwise_equal(const Tensor& a, const Tensor& b) {
    return a.dims() == b.dims() &&
           std::memcmp(a.values().data(), b.values().data(),
                       a.values().size() * sizeof(double)) == 0;
}

}  // namespace

TEST_CASE("ppm round trip quantizes to 1/255") {
    Rng rng(31);
    Tensor rgb = oracle::random_tensor(rng, {3, 9, 11}, 0.0, 1.0);
    const std::string path = temp_path("rt.ppm");
    write_ppm(path, rgb);
    Tensor back = read_ppm(path);
    REQUIRE(back.dims() == rgb.dims());
    for (std::int64_t i = 0; i < rgb.numel(); ++i) {
        CHECK(std::abs(back.value_at(i) - rgb.value_at(i)) <= 0.5 / 255.0 + 1e-12);
        // stored values are exact multiples of 1/255
        const double scaled = back.value_at(i) * 255.0;
        CHECK(std::abs(scaled - std::round(scaled)) <= 1e-9);
    }

    // a second write of the read-back image is idempotent
    const std::string again = temp_path("rt2.ppm");
    write_ppm(again, back);
    CHECK(bitwise_equal(read_ppm(again), back));

    // out-of-range input clamps instead of wrapping
    Tensor wild = Tensor::full({3, 2, 2}, 2.0);
    wild.mutable_values()[0] = -1.0;
    const std::string clamped = temp_path("clamp.ppm");
    write_ppm(clamped, wild);
    Tensor cb = read_ppm(clamped);
    CHECK(cb.value_at(0) == 0.0);
    CHECK(cb.value_at(1) == 1.0);
}

TEST_CASE("ppm parsing: comments and malformed headers") {
    const std::string path = temp_path("hdr.ppm");
    write_text(path, "P6\n# a comment line\n2 1\n# another\n255\n\x01\x02\x03\x04\x05\x06");
    Tensor t = read_ppm(path);
    CHECK(t.dim(0) == 3);
    CHECK(t.dim(1) == 1);
    CHECK(t.dim(2) == 2);
    CHECK(std::abs(t.value_at(0) - 1.0 / 255.0) <= 1e-12);

    write_text(temp_path("badmagic.ppm"), "P5\n2 1\n255\n\x01\x02\x03\x04\x05\x06");
    CHECK_THROWS_AS(read_ppm(temp_path("badmagic.ppm")), FormatError);
    write_text(temp_path("badmax.ppm"), "P6\n2 1\n65535\n\x01\x02\x03\x04\x05\x06");
    CHECK_THROWS_AS(read_ppm(temp_path("badmax.ppm")), FormatError);
    write_text(temp_path("short.ppm"), "P6\n2 2\n255\n\x01\x02\x03");
    CHECK_THROWS_AS(read_ppm(temp_path("short.ppm")), FormatError);
    CHECK_THROWS_AS(read_ppm("/nonexistent-dir/x.ppm"), IoError);
}

TEST_CASE("pgm16 round trip quantizes to one unit") {
    Rng rng(37);
    Tensor depth = oracle::random_tensor(rng, {1, 6, 5}, 0.1, 9.0);
    const std::string path = temp_path("rt.pgm");
    write_pgm16(path, depth);
    Tensor back = read_pgm16(path);
    REQUIRE(back.dims() == depth.dims());
    for (std::int64_t i = 0; i < depth.numel(); ++i) {
        CHECK(std::abs(back.value_at(i) - depth.value_at(i)) <= 0.5e-3 + 1e-12);
    }

    // big-endian sample order: 1000 mm encodes as bytes 0x03 0xe8
    Tensor one_m = Tensor::full({1, 1, 1}, 1.0);
    const std::string be = temp_path("be.pgm");
    write_pgm16(be, one_m);
    std::ifstream in(be, std::ios::binary);
    std::string blob((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    REQUIRE(blob.size() >= 2);
    CHECK(static_cast<unsigned char>(blob[blob.size() - 2]) == 0x03);
    CHECK(static_cast<unsigned char>(blob[blob.size() - 1]) == 0xe8);

    // a custom unit rescales symmetrically
    const std::string cm = temp_path("cm.pgm");
    write_pgm16(cm, depth, 0.01);
    Tensor back_cm = read_pgm16(cm, 0.01);
    for (std::int64_t i = 0; i < depth.numel(); ++i) {
        CHECK(std::abs(back_cm.value_at(i) - depth.value_at(i)) <= 0.5e-2 + 1e-12);
    }

    write_text(temp_path("badmax.pgm"), std::string("P5\n1 1\n255\n\x07", 12));
    CHECK_THROWS_AS(read_pgm16(temp_path("badmax.pgm")), FormatError);
    write_text(temp_path("short.pgm"), "P5\n2 2\n65535\n\x01");
    CHECK_THROWS_AS(read_pgm16(temp_path("short.pgm")), FormatError);
    CHECK_THROWS_AS(write_pgm16(path, depth, 0.0), ConfigError);
}

TEST_CASE("meta round trip and validation") {
    SampleMeta meta;
    meta.intrinsics = {518.857901, 519.469611, 325.582245, 253.736166};
    meta.depth_unit = 0.0002;
    const std::string path = temp_path("meta.txt");
    write_meta(path, meta);
    SampleMeta back = read_meta(path);
    CHECK(back.intrinsics.fx == meta.intrinsics.fx);
    CHECK(back.intrinsics.fy == meta.intrinsics.fy);
    CHECK(back.intrinsics.cx == meta.intrinsics.cx);
    CHECK(back.intrinsics.cy == meta.intrinsics.cy);
    CHECK(back.depth_unit == meta.depth_unit);

    // depth_unit is optional and defaults to millimeters
    write_text(temp_path("meta_min.txt"), "fx=100\nfy=100\ncx=8\ncy=6\n");
    CHECK(read_meta(temp_path("meta_min.txt")).depth_unit == 0.001);

    write_text(temp_path("meta_bad.txt"), "fx=100\nfy=100\ncx=8\n");
    CHECK_THROWS_AS(read_meta(temp_path("meta_bad.txt")), FormatError);
    write_text(temp_path("meta_junk.txt"), "fx=100\nfy=abc\ncx=8\ncy=6\n");
    CHECK_THROWS_AS(read_meta(temp_path("meta_junk.txt")), FormatError);
    CHECK_THROWS_AS(read_meta("/nonexistent-dir/m.txt"), IoError);
}

TEST_CASE("sample round trip zeroes masked depth") {
    Rng rng(41);
    RgbdSample s;
    s.rgb = oracle::random_tensor(rng, {3, 8, 12}, 0.0, 1.0);
    s.depth = oracle::random_tensor(rng, {1, 8, 12}, 0.5, 5.0);
    s.mask = Tensor::full({1, 8, 12}, 1.0);
    s.mask.mutable_values()[7] = 0.0;
    s.intrinsics = {120.0, 118.0, 6.0, 4.0};
    s.id = "rt";

    const std::string rgb_p = temp_path("s.ppm");
    const std::string dep_p = temp_path("s.pgm");
    const std::string met_p = temp_path("s.txt");
    save_sample(s, rgb_p, dep_p, met_p);
    RgbdSample back = load_sample(rgb_p, dep_p, met_p);

    CHECK(back.rgb.dims() == s.rgb.dims());
    CHECK(back.depth.dims() == s.depth.dims());
    // masked pixel comes back as missing
    CHECK(back.depth.value_at(7) == 0.0);
    CHECK(back.mask.value_at(7) == 0.0);
    CHECK(back.mask.value_at(0) == 1.0);
    CHECK(back.intrinsics.fx == 120.0);
    for (std::int64_t i = 0; i < s.depth.numel(); ++i) {
        if (s.mask.value_at(i) == 1.0) {
            CHECK(std::abs(back.depth.value_at(i) - s.depth.value_at(i)) <= 0.5e-3 + 1e-12);
        }
    }
}

TEST_CASE("nyu_preprocess geometry") {
    Rng rng(43);
    RgbdSample s;
    s.rgb = oracle::random_tensor(rng, {3, 480, 640}, 0.0, 1.0);
    s.depth = oracle::random_tensor(rng, {1, 480, 640}, 0.5, 9.9);
    s.mask = Tensor::full({1, 480, 640}, 1.0);
    s.intrinsics = {518.857901, 519.469611, 325.582245, 253.736166};
    s.id = "nyu";

    RgbdSample out = nyu_preprocess(s);
    CHECK(out.rgb.dims() == Shape{3, 240, 320});
    CHECK(out.depth.dims() == Shape{1, 240, 320});
    CHECK(out.mask.dims() == Shape{1, 240, 320});
    out.validate();

    // scale 416/640 = 0.65, then the crop shifts the principal point by
    // (48, 36)
    CHECK(std::abs(out.intrinsics.fx - s.intrinsics.fx * 0.65) <= 1e-9);
    CHECK(std::abs(out.intrinsics.fy - s.intrinsics.fy * 0.65) <= 1e-9);
    CHECK(std::abs(out.intrinsics.cx - (s.intrinsics.cx * 0.65 - 48.0)) <= 1e-9);
    CHECK(std::abs(out.intrinsics.cy - (s.intrinsics.cy * 0.65 - 36.0)) <= 1e-9);

    // depth is nearest-sampled: every output value appears in the input
    std::set<double> pool(s.depth.values().begin(), s.depth.values().end());
    for (int i = 0; i < 100; ++i) {
        const std::int64_t idx = static_cast<std::int64_t>(rng.uniform_int(240 * 320));
        CHECK(pool.count(out.depth.value_at(idx)) == 1);
    }

    RgbdSample wrong = s;
    wrong.rgb = oracle::random_tensor(rng, {3, 100, 100}, 0.0, 1.0);
    wrong.depth = oracle::random_tensor(rng, {1, 100, 100}, 0.5, 9.9);
    wrong.mask = Tensor::full({1, 100, 100}, 1.0);
    CHECK_THROWS_AS(nyu_preprocess(wrong), ShapeError);
}

TEST_CASE("dataset directory round trip keeps sorted order") {
    Rng rng(47);
    std::vector<RgbdSample> set;
    for (int i = 0; i < 3; ++i) {
        RgbdSample s;
        s.rgb = Tensor::full({3, 4, 4}, 0.25 * (i + 1));
        s.depth = Tensor::full({1, 4, 4}, 1.0 + i);
        s.mask = Tensor::full({1, 4, 4}, 1.0);
        s.intrinsics = {10.0, 10.0, 2.0, 2.0};
        s.id = "s" + std::to_string(i);
        set.push_back(s);
    }
    const std::string dir = temp_dir("dataset");
    save_dataset(set, dir);
    CHECK(std::filesystem::exists(dir + "/0000.ppm"));
    CHECK(std::filesystem::exists(dir + "/0002.pgm"));
    CHECK(std::filesystem::exists(dir + "/0001.txt"));

    std::vector<RgbdSample> back = load_dataset(dir);
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(std::abs(back[i].depth.value_at(0) - (1.0 + i)) <= 1e-3);
        CHECK(back[i].id == "000" + std::to_string(i));
    }

    CHECK_THROWS_AS(load_dataset(temp_dir("empty_dataset")), DataError);
    CHECK_THROWS_AS(load_dataset("/nonexistent-dir"), IoError);
}

TEST_CASE("synthetic scenes: determinism and depth range") {
    SynthSceneConfig cfg;
    cfg.seed = 9;
    cfg.height = 32;
    cfg.width = 48;
    std::vector<RgbdSample> a = generate_synthetic(cfg, 4);
    std::vector<RgbdSample> b = generate_synthetic(cfg, 4);
    REQUIRE(a.size() == 4);
    for (int i = 0; i < 4; ++i) {
        CHECK(bitwise_equal(a[i].rgb, b[i].rgb));
        CHECK(bitwise_equal(a[i].depth, b[i].depth));
        CHECK(a[i].rgb.dims() == Shape{3, 32, 48});
        a[i].validate();
        for (double d : a[i].depth.values()) {
            CHECK(d >= cfg.depth_min);
            CHECK(d <= cfg.depth_max);
        }
        for (double v : a[i].rgb.values()) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
        for (double m : a[i].mask.values()) {
            CHECK(m == 1.0);
        }
    }

    SynthSceneConfig other = cfg;
    other.seed = 10;
    std::vector<RgbdSample> c = generate_synthetic(other, 1);
    CHECK_FALSE(bitwise_equal(a[0].depth, c[0].depth));

    // no objects leaves the constant background plane
    SynthSceneConfig bare = cfg;
    bare.min_objects = 0;
    bare.max_objects = 0;
    std::vector<RgbdSample> flat = generate_synthetic(bare, 1);
    for (double d : flat[0].depth.values()) {
        CHECK(d == cfg.depth_max);
    }
}

TEST_CASE("synthetic scenes: flat texture maps color to depth bijectively") {
    SynthSceneConfig cfg;
    cfg.seed = 3;
    cfg.height = 48;
    cfg.width = 48;
    cfg.texture = TextureMode::kFlat;
    std::vector<RgbdSample> scene = generate_synthetic(cfg, 1);
    const Tensor& rgb = scene[0].rgb;
    const Tensor& depth = scene[0].depth;
    const std::int64_t plane = 48 * 48;

    std::map<std::array<double, 3>, double> color_to_depth;
    std::map<double, std::array<double, 3>> depth_to_color;
    for (std::int64_t i = 0; i < plane; ++i) {
        std::array<double, 3> color{rgb.value_at(i), rgb.value_at(plane + i),
                                    rgb.value_at(2 * plane + i)};
        const double d = depth.value_at(i);
        auto [c_it, c_new] = color_to_depth.emplace(color, d);
        CHECK(c_it->second == d);
        auto [d_it, d_new] = depth_to_color.emplace(d, color);
        CHECK(d_it->second == color);
        (void)c_new;
        (void)d_new;
    }
    CHECK(color_to_depth.size() == depth_to_color.size());
    CHECK(color_to_depth.size() >= 2);
}

TEST_CASE("synthetic scenes: validation") {
    SynthSceneConfig cfg;
    cfg.depth_min = 2.0;
    cfg.depth_max = 1.0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.depth_max = 8.0;
    cfg.min_objects = 5;
    cfg.max_objects = 2;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.min_objects = 0;
    cfg.height = 0;
    CHECK_THROWS_AS(cfg.validate(), ConfigError);
    cfg.height = 64;
    CHECK_THROWS_AS(generate_synthetic(cfg, 0), ConfigError);
}

TEST_CASE("parse_config: defaults, overrides, and line-numbered errors") {
    const std::string empty = temp_path("empty.cfg");
    write_text(empty, "");
    AppConfig defaults = parse_config(empty);
    CHECK(defaults.train.batch_size == 3);
    CHECK(defaults.train.dfe_l_init == 1e-5);
    CHECK(defaults.train.augment.flip_probability == 0.5);
    CHECK(defaults.network.preset == "toy");

    const std::string cfg_path = temp_path("full.cfg");
    write_text(cfg_path,
               "# training setup\n"
               "batch_size = 7\n"
               "total_steps=40\n"
               "dfe_l_init=2e-5\n"
               "dmg_l_init=2e-4\n"
               "preset=toy\n"
               "train_dir=/data/train\n"
               "checkpoint=/tmp/ck.dpde\n"
               "flip_probability=0.25\n");
    AppConfig cfg = parse_config(cfg_path);
    CHECK(cfg.train.batch_size == 7);
    CHECK(cfg.train.total_steps_override == 40);
    CHECK(cfg.train.dfe_l_init == 2e-5);
    CHECK(cfg.train.dmg_l_init == 2e-4);
    CHECK(cfg.train_dir == "/data/train");
    CHECK(cfg.checkpoint_path == "/tmp/ck.dpde");
    CHECK(cfg.train.augment.flip_probability == 0.25);

    const std::string bad_value = temp_path("badval.cfg");
    write_text(bad_value, "# ok\nbatch_size=zero\n");
    CHECK_THROWS_WITH_AS(parse_config(bad_value),
                         doctest::Contains((bad_value + ":2").c_str()), ConfigError);

    const std::string unknown = temp_path("unknown.cfg");
    write_text(unknown, "batch_size=2\nwarp_speed=9\n");
    CHECK_THROWS_WITH_AS(parse_config(unknown), doctest::Contains(":2"), ConfigError);

    const std::string no_eq = temp_path("noeq.cfg");
    write_text(no_eq, "batch_size\n");
    CHECK_THROWS_AS(parse_config(no_eq), ConfigError);

    CHECK_THROWS_AS(parse_config("/nonexistent-dir/a.cfg"), IoError);
}
