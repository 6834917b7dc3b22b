#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "detailnet/bokeh.hpp"
#include "detailnet/checkpoint.hpp"
#include "detailnet/data_io.hpp"
#include "detailnet/errors.hpp"
#include "detailnet/geometry.hpp"
#include "detailnet/metrics.hpp"
#include "detailnet/network.hpp"
#include "detailnet/ops.hpp"
#include "detailnet/trainer.hpp"

namespace {

using namespace detailnet;

Tensor with_batch_dim(const Tensor& chw) {
    Shape dims = chw.dims();
    dims.insert(dims.begin(), 1);
    return Tensor::from_values(dims, std::vector<double>(chw.values()));
}

Tensor drop_batch_dim(const Tensor& nchw) {
    Shape dims(nchw.dims().begin() + 1, nchw.dims().end());
    return Tensor::from_values(dims, std::vector<double>(nchw.values()));
}

// Five-stop blue-to-red ramp over the map's own depth range; near is blue.
Tensor colorize_depth(const Tensor& depth) {
    static constexpr double kStops[5][3] = {
        {0.0, 0.0, 0.5}, {0.0, 0.2, 1.0}, {0.0, 1.0, 1.0}, {1.0, 1.0, 0.0}, {0.8, 0.0, 0.0}};
    double lo = depth.value_at(0);
    double hi = lo;
    for (std::int64_t i = 1; i < depth.numel(); ++i) {
        lo = std::min(lo, depth.value_at(i));
        hi = std::max(hi, depth.value_at(i));
    }
    const double span = hi > lo ? hi - lo : 1.0;
    const int h = depth.dim(1);
    const int w = depth.dim(2);
    const std::int64_t plane = static_cast<std::int64_t>(h) * w;
    std::vector<double> rgb(static_cast<std::size_t>(plane) * 3);
    for (std::int64_t i = 0; i < plane; ++i) {
        const double t = (depth.value_at(i) - lo) / span * 4.0;
        const int seg = std::min(3, static_cast<int>(t));
        const double f = t - seg;
        for (int c = 0; c < 3; ++c) {
            rgb[static_cast<std::size_t>(c * plane + i)] =
                kStops[seg][c] + f * (kStops[seg + 1][c] - kStops[seg][c]);
        }
    }
    return Tensor::from_values({3, h, w}, std::move(rgb));
}

void write_loss_csv(const std::string& path, const TrainResult& result) {
    std::ofstream file(path, std::ios::trunc);
    if (!file) {
        throw IoError("cannot open " + path);
    }
    file << "step,loss\n";
    const std::int64_t first =
        result.steps - static_cast<std::int64_t>(result.loss_history.size()) + 1;
    char line[64];
    for (std::size_t i = 0; i < result.loss_history.size(); ++i) {
        std::snprintf(line, sizeof(line), "%lld,%.12g\n",
                      static_cast<long long>(first + static_cast<std::int64_t>(i)),
                      result.loss_history[i]);
        file << line;
    }
    if (!file) {
        throw IoError("write failed for " + path);
    }
}

Network restore_network(const NetworkConfig& config, std::uint64_t seed,
                        const std::string& checkpoint_path) {
    Network net = build_network(config, seed);
    if (!checkpoint_path.empty()) {
        apply_checkpoint(checkpoint_load(checkpoint_path), net.params);
    } else {
        std::cerr << "note: no checkpoint given, using freshly initialized weights\n";
    }
    return net;
}

// ---- gradcheck ----

struct FdRow {
    std::string name;
    std::function<Tensor()> forward;
    std::vector<std::pair<std::string, Tensor>> leaves;
    double eps = 1e-3;
};

struct FdResult {
    bool pass = false;
    double max_rel = 0.0;
    int checked = 0;
};

Tensor random_leaf(Rng& rng, const Shape& dims, double lo, double hi) {
    std::vector<double> vals(static_cast<std::size_t>(shape_numel(dims)));
    for (double& v : vals) {
        v = rng.uniform(lo, hi);
    }
    return Tensor::from_values(dims, std::move(vals), true);
}

Tensor random_plain(Rng& rng, const Shape& dims, double lo, double hi) {
    std::vector<double> vals(static_cast<std::size_t>(shape_numel(dims)));
    for (double& v : vals) {
        v = rng.uniform(lo, hi);
    }
    return Tensor::from_values(dims, std::move(vals));
}

// Values bounded away from zero so kinked ops (relu, max) see no sign flips
// within the probe radius.
Tensor random_signed_leaf(Rng& rng, const Shape& dims, double lo, double hi) {
    std::vector<double> vals(static_cast<std::size_t>(shape_numel(dims)));
    for (double& v : vals) {
        v = rng.uniform(lo, hi) * (rng.bernoulli(0.5) ? 1.0 : -1.0);
    }
    return Tensor::from_values(dims, std::move(vals), true);
}

FdResult fd_check(const FdRow& row, Rng& rng, double tol, int max_per_leaf) {
    FdResult result;
    // leaves may be shared across rows; start from clean gradients
    for (auto [name, leaf] : row.leaves) {
        leaf.zero_grad();
    }
    Tensor loss = row.forward();
    backward(loss);

    std::vector<std::vector<double>> analytic;
    for (const auto& [name, leaf] : row.leaves) {
        analytic.push_back(leaf.has_grad() ? leaf.grad()
                                           : std::vector<double>(leaf.values().size(), 0.0));
    }

    NoGradGuard no_grad;
    for (std::size_t li = 0; li < row.leaves.size(); ++li) {
        Tensor leaf = row.leaves[li].second;
        const std::int64_t count = leaf.numel();
        for (int probe = 0; probe < max_per_leaf; ++probe) {
            const std::int64_t idx =
                count <= max_per_leaf
                    ? probe
                    : static_cast<std::int64_t>(rng.uniform_int(static_cast<std::uint64_t>(count)));
            if (count <= max_per_leaf && probe >= count) {
                break;
            }
            auto& vals = leaf.mutable_values();
            const double saved = vals[static_cast<std::size_t>(idx)];
            vals[static_cast<std::size_t>(idx)] = saved + row.eps;
            const double up = row.forward().item();
            vals[static_cast<std::size_t>(idx)] = saved - row.eps;
            const double down = row.forward().item();
            vals[static_cast<std::size_t>(idx)] = saved;

            const double fd = (up - down) / (2.0 * row.eps);
            const double an = analytic[li][static_cast<std::size_t>(idx)];
            const double denom = std::max(std::abs(fd), std::abs(an));
            const double rel = denom < 1e-7 ? (std::abs(fd - an) < 1e-7 ? 0.0 : 1.0)
                                            : std::abs(fd - an) / denom;
            ++result.checked;
            result.max_rel = std::max(result.max_rel, rel);
        }
    }
    result.pass = result.max_rel < tol;
    return result;
}

int run_gradcheck(const std::string& preset, std::uint64_t seed) {
    const NetworkConfig config = NetworkConfig::from_preset(preset);
    Rng rng(seed);
    std::vector<FdRow> rows;

    {
        Tensor x = random_leaf(rng, {1, 3, 6, 7}, -1.0, 1.0);
        Tensor w = random_leaf(rng, {4, 3, 3, 3}, -0.5, 0.5);
        Tensor b = random_leaf(rng, {4}, -0.5, 0.5);
        ConvSpec spec{4, 3, 3, 3, 1, 2, Padding::kSame};
        rows.push_back({"conv2d", [=] { return sum(conv2d(x, spec, w, b)); },
                        {{"x", x}, {"w", w}, {"b", b}}});
    }
    {
        Tensor x = random_signed_leaf(rng, {1, 2, 6, 6}, 0.2, 2.0);
        rows.push_back({"max_pool2d", [=] { return sum(max_pool2d(x, 3, 2)); }, {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {2, 3, 4, 5}, -1.0, 1.0);
        rows.push_back({"global_avg_pool", [=] { return sum(global_avg_pool(x)); }, {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {1, 2, 4, 4}, -1.0, 1.0);
        rows.push_back({"bilinear_upsample", [=] { return sum(bilinear_upsample(x, 2)); },
                        {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {1, 2, 5, 6}, -1.0, 1.0);
        rows.push_back({"bilinear_resize", [=] { return sum(bilinear_resize(x, 8, 9)); },
                        {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {1, 3, 4, 4}, -2.0, 2.0);
        // statistics stay grad-free; only the input is differentiated
        Tensor gamma = random_plain(rng, {3}, 0.5, 1.5);
        Tensor beta = random_plain(rng, {3}, -0.5, 0.5);
        Tensor mean = random_plain(rng, {3}, -0.5, 0.5);
        Tensor var = random_plain(rng, {3}, 0.5, 1.5);
        rows.push_back({"batchnorm_frozen",
                        [=] { return sum(batchnorm_frozen(x, gamma, beta, mean, var)); },
                        {{"x", x}}});
    }
    {
        Tensor x = random_signed_leaf(rng, {2, 2, 3, 3}, 0.2, 2.0);
        rows.push_back({"relu", [=] { return sum(relu(x)); }, {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {2, 2, 3, 3}, -3.0, 3.0);
        rows.push_back({"sigmoid", [=] { return sum(sigmoid(x)); }, {{"x", x}}});
    }
    {
        Tensor x = random_leaf(rng, {2, 2, 3, 3}, -3.0, 3.0);
        rows.push_back({"softplus", [=] { return sum(softplus(x)); }, {{"x", x}}});
    }
    {
        Tensor a = random_leaf(rng, {1, 2, 3, 3}, -1.0, 1.0);
        Tensor b = random_leaf(rng, {1, 2, 3, 3}, -1.0, 1.0);
        rows.push_back({"add", [=] { return sum(add(a, b)); }, {{"a", a}, {"b", b}}});
        rows.push_back({"concat_channels", [=] { return sum(concat_channels(a, b)); },
                        {{"a", a}, {"b", b}}});
    }
    {
        Tensor map = random_leaf(rng, {1, 3, 4, 4}, -1.0, 1.0);
        Tensor wts = random_leaf(rng, {1, 3, 1, 1}, 0.1, 0.9);
        rows.push_back({"channel_scale", [=] { return sum(channel_scale(map, wts)); },
                        {{"map", map}, {"wts", wts}}});
    }
    {
        Tensor pred = random_leaf(rng, {1, 1, 4, 4}, 0.5, 4.0);
        Tensor truth = random_leaf(rng, {1, 1, 4, 4}, 0.5, 4.0);
        Tensor mask = Tensor::full({1, 1, 4, 4}, 1.0);
        rows.push_back({"log_l1_loss", [=] { return log_l1_loss(pred, truth, mask); },
                        {{"pred", pred}}});
    }

    // block rows share one small parameter store
    ParamStore store;
    Rng init_rng(seed + 1);
    build_stem(store, "st", 3, 8, InitKind::kHeNormal, init_rng);
    build_bottleneck(store, "bo", 8, 12, 4, InitKind::kHeNormal, init_rng);
    build_crb(store, "cr", 12, 8, InitKind::kXavierUniform, init_rng);
    build_afb(store, "af", 8, 4, InitKind::kXavierUniform, init_rng);
    auto leaf = [&](const std::string& name) {
        return std::pair<std::string, Tensor>{name, store.at(name)};
    };
    {
        Tensor x = random_leaf(rng, {1, 3, 8, 8}, -1.0, 1.0);
        rows.push_back({"stem", [&store, x] { return sum(stem_forward(x, store, "st")); },
                        {{"x", x}, leaf("st.conv.w"), leaf("st.conv.b")}});
    }
    {
        Tensor x = random_leaf(rng, {1, 8, 5, 5}, -1.0, 1.0);
        rows.push_back({"bottleneck",
                        [&store, x] { return sum(bottleneck_forward(x, store, "bo", 2)); },
                        {{"x", x}, leaf("bo.mid.w"), leaf("bo.proj.w")}});
    }
    {
        Tensor x = random_leaf(rng, {1, 12, 5, 5}, -1.0, 1.0);
        rows.push_back({"crb", [&store, x] { return sum(crb_forward(x, store, "cr", 4)); },
                        {{"x", x}, leaf("cr.reduce.w"), leaf("cr.res2.w")}});
    }
    {
        Tensor dotted = random_leaf(rng, {1, 8, 5, 5}, -1.0, 1.0);
        Tensor solid = random_leaf(rng, {1, 8, 5, 5}, -1.0, 1.0);
        rows.push_back({"afb",
                        [&store, dotted, solid] {
                            return sum(afb_forward(dotted, solid, store, "af"));
                        },
                        {{"dotted", dotted}, {"solid", solid}, leaf("af.fc1.w"),
                         leaf("af.fc2.w")}});
    }

    Network net = build_network(config, seed + 2);
    {
        Tensor image = random_leaf(rng, {1, 3, 16, 16}, 0.0, 1.0);
        Tensor truth = random_leaf(rng, {1, 1, 8, 8}, 0.5, 4.0);
        Tensor mask = Tensor::full({1, 1, 8, 8}, 1.0);
        FdRow row;
        row.name = "network";
        row.forward = [&net, image, truth, mask] {
            Tensor pred = predict(image, net.params, net.config, false);
            return log_l1_loss(pred, truth, mask);
        };
        row.leaves = {{"image", image},
                      {"dfe.stem.conv.w", net.params.at("dfe.stem.conv.w")},
                      {"dmg.head.conv.w", net.params.at("dmg.head.conv.w")},
                      {"dmg.afb1.fc2.b", net.params.at("dmg.afb1.fc2.b")}};
        row.eps = 1e-4;
        rows.push_back(std::move(row));
    }

    bool all_pass = true;
    std::printf("%-18s %-6s %s\n", "op", "status", "max rel err");
    for (const FdRow& row : rows) {
        const FdResult r = fd_check(row, rng, 1e-4, 6);
        all_pass = all_pass && r.pass;
        std::printf("%-18s %-6s %.3g  (%d probes)\n", row.name.c_str(),
                    r.pass ? "PASS" : "FAIL", r.max_rel, r.checked);
    }
    return all_pass ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"detailnet: attention-guided monocular depth estimation toolkit"};
    app.require_subcommand(1);
    bool deterministic = false;
    app.add_flag("--deterministic", deterministic,
                 "pin the worker count to 1 (outputs are bitwise reproducible either way)");

    // train
    auto* train_cmd = app.add_subcommand("train", "train on a dataset directory");
    std::string train_config;
    std::int64_t train_steps = 0;
    std::uint64_t train_seed = 0;
    bool train_seed_set = false;
    std::string train_preset;
    std::string train_resume;
    std::int64_t log_every = 50;
    train_cmd->add_option("--config", train_config, "key=value config file")->required();
    train_cmd->add_option("--steps", train_steps, "override total step count");
    train_cmd->add_option("--seed", train_seed, "override training seed")
        ->each([&](const std::string&) { train_seed_set = true; });
    train_cmd->add_option("--preset", train_preset, "override network preset (toy, full)");
    train_cmd->add_option("--resume", train_resume, "checkpoint to resume from");
    train_cmd->add_option("--log-every", log_every, "steps between progress lines");

    // eval
    auto* eval_cmd = app.add_subcommand("eval", "compute depth metrics over a dataset");
    std::string eval_config;
    std::string eval_checkpoint;
    std::string eval_csv;
    bool image_averaged = false;
    eval_cmd->add_option("--config", eval_config, "key=value config file")->required();
    eval_cmd->add_option("--checkpoint", eval_checkpoint, "trained weights");
    eval_cmd->add_option("--csv", eval_csv, "also write metrics as one CSV row");
    eval_cmd->add_flag("--image-averaged", image_averaged,
                       "average per-image metrics instead of pixel-weighting");

    // predict
    auto* predict_cmd = app.add_subcommand("predict", "depth map for one image");
    std::string predict_config;
    std::string predict_checkpoint;
    std::string predict_input;
    std::string predict_out;
    std::string predict_color;
    std::string predict_preset;
    bool predict_resize = false;
    predict_cmd->add_option("--config", predict_config, "key=value config file");
    predict_cmd->add_option("--checkpoint", predict_checkpoint, "trained weights");
    predict_cmd->add_option("--input", predict_input, "input PPM image")->required();
    predict_cmd->add_option("--out", predict_out, "output 16-bit millimeter PGM")->required();
    predict_cmd->add_option("--color", predict_color, "also write a color-mapped PPM");
    predict_cmd->add_option("--preset", predict_preset, "network preset (toy, full)");
    predict_cmd->add_flag("--resize", predict_resize,
                          "upsample the output to the input resolution");

    // pointcloud
    auto* cloud_cmd = app.add_subcommand("pointcloud", "back-project an RGB-D pair to a PLY");
    std::string cloud_rgb, cloud_depth, cloud_meta, cloud_out;
    cloud_cmd->add_option("--rgb", cloud_rgb, "PPM image")->required();
    cloud_cmd->add_option("--depth", cloud_depth, "16-bit PGM depth")->required();
    cloud_cmd->add_option("--meta", cloud_meta, "intrinsics file")->required();
    cloud_cmd->add_option("--out", cloud_out, "output PLY")->required();

    // bokeh
    auto* bokeh_cmd = app.add_subcommand("bokeh", "depth-of-field rendering");
    std::string bokeh_rgb, bokeh_depth, bokeh_out;
    double bokeh_unit = 0.001;
    BokehParams bokeh_params;
    bokeh_cmd->add_option("--rgb", bokeh_rgb, "PPM image")->required();
    bokeh_cmd->add_option("--depth", bokeh_depth, "16-bit PGM depth")->required();
    bokeh_cmd->add_option("--out", bokeh_out, "output PPM")->required();
    bokeh_cmd->add_option("--focus", bokeh_params.focus_depth, "focus distance in meters");
    bokeh_cmd->add_option("--aperture", bokeh_params.aperture, "blur gain");
    bokeh_cmd->add_option("--max-radius", bokeh_params.max_radius, "blur radius cap in pixels");
    bokeh_cmd->add_option("--unit", bokeh_unit, "meters per depth count");

    // synth
    auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic dataset");
    std::string synth_out;
    int synth_count = 8;
    SynthSceneConfig synth_cfg;
    std::string synth_texture = "gradient";
    synth_cmd->add_option("--out", synth_out, "output directory")->required();
    synth_cmd->add_option("--count", synth_count, "number of scenes");
    synth_cmd->add_option("--seed", synth_cfg.seed, "scene seed");
    synth_cmd->add_option("--height", synth_cfg.height, "scene height");
    synth_cmd->add_option("--width", synth_cfg.width, "scene width");
    synth_cmd->add_option("--texture", synth_texture, "flat or gradient");

    // gradcheck
    auto* grad_cmd = app.add_subcommand("gradcheck", "finite-difference gradient table");
    std::string grad_preset = "toy";
    std::uint64_t grad_seed = 7;
    grad_cmd->add_option("--preset", grad_preset, "network preset (toy, full)");
    grad_cmd->add_option("--seed", grad_seed, "probe seed");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help();
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n\n" << app.help();
        return 1;
    }
    if (deterministic) {
        setenv("DETAILNET_THREADS", "1", 1);
    }

    try {
        if (*train_cmd) {
            AppConfig cfg = parse_config(train_config);
            if (!train_preset.empty()) {
                cfg.network = NetworkConfig::from_preset(train_preset);
            }
            if (train_steps > 0) {
                cfg.train.total_steps_override = train_steps;
            }
            if (train_seed_set) {
                cfg.train.seed = train_seed;
            }
            if (cfg.train_dir.empty()) {
                throw ConfigError("train: config must set train_dir");
            }
            const std::string out_dir = cfg.output_dir.empty() ? "." : cfg.output_dir;
            std::filesystem::create_directories(out_dir);
            std::vector<RgbdSample> dataset = load_dataset(cfg.train_dir);
            Network net = build_network(cfg.network, cfg.train.seed);
            TrainOptions opts;
            opts.checkpoint_path = cfg.checkpoint_path.empty() ? out_dir + "/checkpoint.dpde"
                                                               : cfg.checkpoint_path;
            opts.resume_from = train_resume;
            opts.on_step = [&](std::int64_t step, double loss) {
                if (log_every > 0 && step % log_every == 0) {
                    std::fprintf(stderr, "step %lld  loss %.6g\n",
                                 static_cast<long long>(step), loss);
                }
            };
            TrainResult result = train(dataset, net, cfg.train, opts);
            write_loss_csv(out_dir + "/loss.csv", result);
            std::printf("trained %lld steps, final loss %.6g\n",
                        static_cast<long long>(result.steps),
                        result.loss_history.empty() ? 0.0 : result.loss_history.back());
            std::printf("checkpoint: %s\nloss curve: %s/loss.csv\n", opts.checkpoint_path.c_str(),
                        out_dir.c_str());
        } else if (*eval_cmd) {
            AppConfig cfg = parse_config(eval_config);
            if (cfg.eval_dir.empty()) {
                throw ConfigError("eval: config must set eval_dir");
            }
            std::vector<RgbdSample> dataset = load_dataset(cfg.eval_dir);
            Network net = restore_network(cfg.network, cfg.train.seed,
                                          !eval_checkpoint.empty() ? eval_checkpoint
                                                                   : cfg.checkpoint_path);
            const Aggregation agg = image_averaged ? Aggregation::kImageAveraged
                                                   : Aggregation::kPixelWeighted;
            MetricsReport report = evaluate_dataset(dataset, net, agg);
            std::cout << report.to_text();
            if (!eval_csv.empty()) {
                std::ofstream csv(eval_csv, std::ios::trunc);
                if (!csv) {
                    throw IoError("cannot open " + eval_csv);
                }
                csv << MetricsReport::csv_header() << "\n" << report.to_csv_row() << "\n";
            }
        } else if (*predict_cmd) {
            NetworkConfig config;
            std::string checkpoint = predict_checkpoint;
            if (!predict_config.empty()) {
                AppConfig cfg = parse_config(predict_config);
                config = cfg.network;
                if (checkpoint.empty()) {
                    checkpoint = cfg.checkpoint_path;
                }
            }
            if (!predict_preset.empty()) {
                config = NetworkConfig::from_preset(predict_preset);
            }
            Network net = restore_network(config, 0, checkpoint);
            Tensor image = read_ppm(predict_input);
            NoGradGuard no_grad;
            Tensor pred = predict(with_batch_dim(image), net.params, net.config, predict_resize);
            Tensor plane = drop_batch_dim(pred);
            write_pgm16(predict_out, plane);
            if (!predict_color.empty()) {
                write_ppm(predict_color, colorize_depth(plane));
            }
            std::printf("wrote %dx%d depth map to %s\n", plane.dim(2), plane.dim(1),
                        predict_out.c_str());
        } else if (*cloud_cmd) {
            RgbdSample sample = load_sample(cloud_rgb, cloud_depth, cloud_meta);
            PointCloud cloud = backproject(sample.depth, sample.rgb, sample.mask,
                                           sample.intrinsics);
            export_ply(cloud, cloud_out);
            std::printf("wrote %zu points to %s\n", cloud.points.size(), cloud_out.c_str());
        } else if (*bokeh_cmd) {
            Tensor rgb = read_ppm(bokeh_rgb);
            Tensor depth = read_pgm16(bokeh_depth, bokeh_unit);
            // missing (zero) depth counts as in focus so holes stay sharp
            std::vector<double> filled(depth.values());
            for (double& d : filled) {
                if (d == 0.0) {
                    d = bokeh_params.focus_depth;
                }
            }
            Tensor out = render_bokeh(rgb, Tensor::from_values(depth.dims(), std::move(filled)),
                                      bokeh_params);
            write_ppm(bokeh_out, out);
            std::printf("wrote %s\n", bokeh_out.c_str());
        } else if (*synth_cmd) {
            if (synth_texture == "flat") {
                synth_cfg.texture = TextureMode::kFlat;
            } else if (synth_texture == "gradient") {
                synth_cfg.texture = TextureMode::kGradient;
            } else {
                throw ConfigError("synth: texture must be flat or gradient");
            }
            std::filesystem::create_directories(synth_out);
            std::vector<RgbdSample> scenes = generate_synthetic(synth_cfg, synth_count);
            save_dataset(scenes, synth_out);
            std::printf("wrote %d scenes to %s\n", synth_count, synth_out.c_str());
        } else if (*grad_cmd) {
            return run_gradcheck(grad_preset, grad_seed);
        }
        return 0;
    } catch (const IoError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 2;
    }
}
