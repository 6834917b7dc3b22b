#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <cstring>
#include <string>
#include <vector>

#include "detailnet/bokeh.hpp"
#include "detailnet/checkpoint.hpp"
#include "detailnet/data_io.hpp"
#include "detailnet/errors.hpp"
#include "detailnet/geometry.hpp"
#include "detailnet/metrics.hpp"
#include "detailnet/network.hpp"
#include "detailnet/ops.hpp"
#include "detailnet/tensor.hpp"
#include "detailnet/trainer.hpp"

namespace py = pybind11;
using namespace detailnet;

namespace {

using DoubleArray = py::array_t<double, py::array::c_style | py::array::forcecast>;

Tensor to_tensor(const DoubleArray& array) {
    py::buffer_info info = array.request();
    Shape dims;
    dims.reserve(static_cast<std::size_t>(info.ndim));
    for (py::ssize_t d = 0; d < info.ndim; ++d) {
        dims.push_back(static_cast<int>(info.shape[static_cast<std::size_t>(d)]));
    }
    const double* data = static_cast<const double*>(info.ptr);
    return Tensor::from_values(dims,
                               std::vector<double>(data, data + static_cast<std::size_t>(info.size)));
}

py::array to_array(const Tensor& t) {
    std::vector<py::ssize_t> shape;
    shape.reserve(static_cast<std::size_t>(t.ndim()));
    for (int d = 0; d < t.ndim(); ++d) {
        shape.push_back(t.dim(d));
    }
    py::array_t<double> out(shape);
    std::memcpy(out.mutable_data(), t.values().data(), t.values().size() * sizeof(double));
    return out;
}

Tensor with_batch_dim(const Tensor& t) {
    Shape dims{1};
    dims.insert(dims.end(), t.dims().begin(), t.dims().end());
    return Tensor::from_values(dims, std::vector<double>(t.values()));
}

// Metrics and the loss run on [N,1,H,W]; lift plain (H,W) or (1,H,W)
// arrays to that layout.
Tensor to_plane_tensor(const DoubleArray& array) {
    Tensor t = to_tensor(array);
    if (t.ndim() == 2) {
        return Tensor::from_values({1, 1, t.dim(0), t.dim(1)}, std::vector<double>(t.values()));
    }
    if (t.ndim() == 3) {
        return with_batch_dim(t);
    }
    return t;
}

py::dict report_to_dict(const MetricsReport& r) {
    py::dict d;
    d["rel"] = r.rel;
    d["rms"] = r.rms;
    d["log10"] = r.log10;
    d["delta1"] = r.delta1;
    d["delta2"] = r.delta2;
    d["delta3"] = r.delta3;
    d["pixel_count"] = r.pixel_count;
    return d;
}

// The module-level network wrapper: a config, its parameters, and the
// checkpoint plumbing.
class PyNetwork {
  public:
    PyNetwork(const std::string& preset, std::uint64_t seed)
        : net_(build_network(NetworkConfig::from_preset(preset), seed)) {}

    py::array predict(const DoubleArray& image, bool resize_to_input) const {
        Tensor input = to_tensor(image);
        const bool batched = input.ndim() == 4;
        if (!batched) {
            if (input.ndim() != 3) {
                throw ShapeError("predict expects an image of shape (3,H,W) or (N,3,H,W)");
            }
            input = with_batch_dim(input);
        }
        NoGradGuard no_grad;
        Tensor out = detailnet::predict(input, net_.params, net_.config, resize_to_input);
        if (!batched) {
            // collapse [1,1,h,w] to a plain depth map
            return to_array(Tensor::from_values({out.dim(2), out.dim(3)},
                                                std::vector<double>(out.values())));
        }
        return to_array(out);
    }

    void save(const std::string& path) const {
        checkpoint_save(snapshot_params(net_.params), path);
    }

    void load(const std::string& path) { apply_checkpoint(checkpoint_load(path), net_.params); }

    std::string preset() const { return net_.config.preset; }
    std::int64_t parameter_count() const { return net_.params.total_numel(); }
    std::vector<std::string> parameter_names() const { return net_.params.names(); }

    const Network& net() const { return net_; }

  private:
    Network net_;
};

}  // namespace

PYBIND11_MODULE(_detailnet, m) {
    m.doc() = "Depth estimation core: tensor ops, the network, and the renderers";

    py::register_exception<ShapeError>(m, "ShapeError", PyExc_ValueError);
    py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<DataError>(m, "DataError", PyExc_ValueError);
    py::register_exception<UsageError>(m, "UsageError", PyExc_RuntimeError);
    py::register_exception<FormatError>(m, "FormatError", PyExc_ValueError);
    py::register_exception<IoError>(m, "IoError", PyExc_OSError);

    m.def(
        "conv2d",
        [](const DoubleArray& input, const DoubleArray& weights, const DoubleArray& bias,
           int stride, int dilation, const std::string& padding) {
            Tensor x = to_tensor(input);
            Tensor w = to_tensor(weights);
            Tensor b = to_tensor(bias);
            if (w.ndim() != 4) {
                throw ShapeError("weights must have shape (C_out,C_in,KH,KW)");
            }
            ConvSpec spec;
            spec.out_channels = w.dim(0);
            spec.in_channels = w.dim(1);
            spec.kernel_h = w.dim(2);
            spec.kernel_w = w.dim(3);
            spec.stride = stride;
            spec.dilation = dilation;
            if (padding == "same") {
                spec.padding = Padding::kSame;
            } else if (padding == "valid") {
                spec.padding = Padding::kValid;
            } else {
                throw ConfigError("padding must be 'same' or 'valid'");
            }
            const bool batched = x.ndim() == 4;
            if (!batched) {
                x = with_batch_dim(x);
            }
            NoGradGuard no_grad;
            Tensor out = conv2d(x, spec, w, b);
            if (!batched) {
                Shape dims(out.dims().begin() + 1, out.dims().end());
                return to_array(Tensor::from_values(dims, std::vector<double>(out.values())));
            }
            return to_array(out);
        },
        py::arg("input"), py::arg("weights"), py::arg("bias"), py::arg("stride") = 1,
        py::arg("dilation") = 1, py::arg("padding") = "same",
        "Dilated 2D convolution over (C,H,W) or (N,C,H,W) input");

    m.def(
        "log_l1_loss",
        [](const DoubleArray& pred, const DoubleArray& truth, const DoubleArray& mask) {
            NoGradGuard no_grad;
            return log_l1_loss(to_plane_tensor(pred), to_plane_tensor(truth), to_plane_tensor(mask))
                .item();
        },
        py::arg("pred"), py::arg("truth"), py::arg("mask"),
        "Mean absolute log-depth difference over valid pixels");

    m.def(
        "compute_metrics",
        [](const DoubleArray& pred, const DoubleArray& truth, const DoubleArray& mask) {
            return report_to_dict(
                compute_metrics(to_plane_tensor(pred), to_plane_tensor(truth), to_plane_tensor(mask)));
        },
        py::arg("pred"), py::arg("truth"), py::arg("mask"),
        "rel/rms/log10 and the three threshold accuracies as a dict");

    m.def(
        "poly_lr",
        [](double l_init, double l_end, std::int64_t decay_steps, double power,
           std::int64_t step) {
            return poly_lr(LrSchedule{l_init, l_end, decay_steps, power}, step);
        },
        py::arg("l_init"), py::arg("l_end"), py::arg("decay_steps"), py::arg("power"),
        py::arg("step"), "Polynomial decay learning rate at the given step");

    m.def(
        "backproject",
        [](const DoubleArray& depth, const DoubleArray& rgb, const DoubleArray& mask, double fx,
           double fy, double cx, double cy) {
            PointCloud cloud =
                backproject(to_tensor(depth), to_tensor(rgb), to_tensor(mask), {fx, fy, cx, cy});
            const py::ssize_t n = static_cast<py::ssize_t>(cloud.points.size());
            py::array_t<double> xyz({n, static_cast<py::ssize_t>(3)});
            py::array_t<std::uint8_t> colors({n, static_cast<py::ssize_t>(3)});
            double* xp = xyz.mutable_data();
            std::uint8_t* cp = colors.mutable_data();
            for (py::ssize_t i = 0; i < n; ++i) {
                const PointCloud::Point& pt = cloud.points[static_cast<std::size_t>(i)];
                xp[3 * i] = pt.x;
                xp[3 * i + 1] = pt.y;
                xp[3 * i + 2] = pt.z;
                cp[3 * i] = pt.r;
                cp[3 * i + 1] = pt.g;
                cp[3 * i + 2] = pt.b;
            }
            return py::make_tuple(xyz, colors);
        },
        py::arg("depth"), py::arg("rgb"), py::arg("mask"), py::arg("fx"), py::arg("fy"),
        py::arg("cx"), py::arg("cy"),
        "Pinhole back-projection to (positions Nx3, colors Nx3) arrays");

    m.def(
        "render_bokeh",
        [](const DoubleArray& rgb, const DoubleArray& depth, double focus_depth, double aperture,
           double max_radius) {
            BokehParams params{focus_depth, aperture, max_radius};
            return to_array(render_bokeh(to_tensor(rgb), to_tensor(depth), params));
        },
        py::arg("rgb"), py::arg("depth"), py::arg("focus_depth"), py::arg("aperture"),
        py::arg("max_radius") = 16.0, "Depth-of-field rendering of a (3,H,W) image");

    m.def(
        "generate_synthetic",
        [](int count, std::uint64_t seed, int height, int width, double depth_min,
           double depth_max, const std::string& texture) {
            SynthSceneConfig cfg;
            cfg.seed = seed;
            cfg.height = height;
            cfg.width = width;
            cfg.depth_min = depth_min;
            cfg.depth_max = depth_max;
            if (texture == "flat") {
                cfg.texture = TextureMode::kFlat;
            } else if (texture == "gradient") {
                cfg.texture = TextureMode::kGradient;
            } else {
                throw ConfigError("texture must be 'flat' or 'gradient'");
            }
            py::list out;
            for (const RgbdSample& s : generate_synthetic(cfg, count)) {
                py::dict d;
                d["rgb"] = to_array(s.rgb);
                d["depth"] = to_array(s.depth);
                d["mask"] = to_array(s.mask);
                d["fx"] = s.intrinsics.fx;
                d["fy"] = s.intrinsics.fy;
                d["cx"] = s.intrinsics.cx;
                d["cy"] = s.intrinsics.cy;
                d["id"] = s.id;
                out.append(d);
            }
            return out;
        },
        py::arg("count"), py::arg("seed") = 0, py::arg("height") = 64, py::arg("width") = 64,
        py::arg("depth_min") = 0.5, py::arg("depth_max") = 8.0, py::arg("texture") = "gradient",
        "Deterministic synthetic RGB-D scenes as dicts of arrays");

    py::class_<PyNetwork>(m, "Network")
        .def(py::init<const std::string&, std::uint64_t>(), py::arg("preset") = "toy",
             py::arg("seed") = 0)
        .def("predict", &PyNetwork::predict, py::arg("image"), py::arg("resize_to_input") = false,
             "Depth map for a (3,H,W) image or a (N,3,H,W) batch")
        .def("save", &PyNetwork::save, py::arg("path"))
        .def("load", &PyNetwork::load, py::arg("path"))
        .def_property_readonly("preset", &PyNetwork::preset)
        .def_property_readonly("parameter_count", &PyNetwork::parameter_count)
        .def_property_readonly("parameter_names", &PyNetwork::parameter_names);
}
