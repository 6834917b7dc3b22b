#include "detailnet/checkpoint.hpp"

#include <cstring>
#include <fstream>

#include "detailnet/errors.hpp"

namespace detailnet {

namespace {

constexpr char kMagic[4] = {'D', 'P', 'D', 'E'};

void put_u32(std::string& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
    }
}

void put_f64(std::string& out, double v) {
    std::uint64_t bits;
    std::memcpy(&bits, &v, sizeof(bits));
    put_u64(out, bits);
}

void put_string(std::string& out, const std::string& s) {
    put_u64(out, s.size());
    out.append(s);
}

void put_f64_span(std::string& out, const std::vector<double>& values) {
    put_u64(out, values.size());
    for (double v : values) {
        put_f64(out, v);
    }
}

class Reader {
  public:
    Reader(std::string data, std::string path) : data_(std::move(data)), path_(std::move(path)) {}

    std::uint32_t u32() {
        need(4);
        std::uint32_t v = 0;
        for (int i = 0; i < 4; ++i) {
            v |= static_cast<std::uint32_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 4;
        return v;
    }

    std::uint64_t u64() {
        need(8);
        std::uint64_t v = 0;
        for (int i = 0; i < 8; ++i) {
            v |= static_cast<std::uint64_t>(static_cast<unsigned char>(data_[pos_ + i])) << (8 * i);
        }
        pos_ += 8;
        return v;
    }

    double f64() {
        std::uint64_t bits = u64();
        double v;
        std::memcpy(&v, &bits, sizeof(v));
        return v;
    }

    std::string string() {
        const std::uint64_t n = u64();
        need(n);
        std::string s = data_.substr(pos_, n);
        pos_ += n;
        return s;
    }

    std::vector<double> f64_span() {
        const std::uint64_t n = u64();
        need(n * 8);
        std::vector<double> out(n);
        for (std::uint64_t i = 0; i < n; ++i) {
            out[i] = f64();
        }
        return out;
    }

    void raw(char* dst, std::size_t n) {
        need(n);
        std::memcpy(dst, data_.data() + pos_, n);
        pos_ += n;
    }

    bool exhausted() const { return pos_ == data_.size(); }

  private:
    void need(std::uint64_t n) {
        if (pos_ + n > data_.size()) {
            throw CorruptionError("checkpoint truncated: " + path_);
        }
    }

    std::string data_;
    std::string path_;
    std::size_t pos_ = 0;
};

}  // namespace

void checkpoint_save(const Checkpoint& ckpt, const std::string& path) {
    std::string out;
    out.append(kMagic, 4);
    put_u32(out, Checkpoint::kVersion);
    put_u64(out, ckpt.step);
    put_string(out, ckpt.rng_state);
    put_u64(out, ckpt.epoch_order.size());
    for (std::uint64_t idx : ckpt.epoch_order) {
        put_u64(out, idx);
    }
    put_u64(out, ckpt.epoch_pos);

    put_u64(out, ckpt.tensors.size());
    for (const auto& [name, tensor] : ckpt.tensors) {
        put_string(out, name);
        out.push_back(2);  // dtype code: f64
        put_u32(out, static_cast<std::uint32_t>(tensor.ndim()));
        for (int d = 0; d < tensor.ndim(); ++d) {
            put_u32(out, static_cast<std::uint32_t>(tensor.dim(d)));
        }
        put_f64_span(out, tensor.values());
    }

    put_u64(out, ckpt.moments.size());
    for (const auto& [name, mv] : ckpt.moments) {
        put_string(out, name);
        put_f64_span(out, mv.m);
        put_f64_span(out, mv.v);
    }

    std::ofstream file(path, std::ios::binary | std::ios::trunc);
    if (!file) {
        throw IoError("cannot open checkpoint for writing: " + path);
    }
    file.write(out.data(), static_cast<std::streamsize>(out.size()));
    if (!file) {
        throw IoError("checkpoint write failed: " + path);
    }
}

Checkpoint checkpoint_load(const std::string& path) {
    std::ifstream file(path, std::ios::binary);
    if (!file) {
        throw IoError("cannot open checkpoint: " + path);
    }
    std::string data((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
    Reader r(std::move(data), path);

    char magic[4];
    r.raw(magic, 4);
    if (std::memcmp(magic, kMagic, 4) != 0) {
        throw FormatError("bad checkpoint magic in " + path);
    }
    const std::uint32_t version = r.u32();
    if (version != Checkpoint::kVersion) {
        throw VersionError("checkpoint version " + std::to_string(version) + " unsupported (want " +
                           std::to_string(Checkpoint::kVersion) + ")");
    }

    Checkpoint ckpt;
    ckpt.step = r.u64();
    ckpt.rng_state = r.string();
    const std::uint64_t order_n = r.u64();
    ckpt.epoch_order.resize(order_n);
    for (std::uint64_t i = 0; i < order_n; ++i) {
        ckpt.epoch_order[i] = r.u64();
    }
    ckpt.epoch_pos = r.u64();

    const std::uint64_t tensor_n = r.u64();
    for (std::uint64_t i = 0; i < tensor_n; ++i) {
        std::string name = r.string();
        char dtype;
        r.raw(&dtype, 1);
        if (dtype != 2) {
            throw FormatError("unsupported dtype code " + std::to_string(dtype) + " for " + name);
        }
        const std::uint32_t ndim = r.u32();
        Shape dims(ndim);
        for (std::uint32_t d = 0; d < ndim; ++d) {
            dims[d] = static_cast<int>(r.u32());
        }
        std::vector<double> values = r.f64_span();
        ckpt.tensors.emplace(std::move(name), Tensor::from_values(dims, std::move(values)));
    }

    const std::uint64_t moment_n = r.u64();
    for (std::uint64_t i = 0; i < moment_n; ++i) {
        std::string name = r.string();
        Checkpoint::Moments mv;
        mv.m = r.f64_span();
        mv.v = r.f64_span();
        ckpt.moments.emplace(std::move(name), std::move(mv));
    }

    if (!r.exhausted()) {
        throw CorruptionError("trailing bytes after checkpoint payload: " + path);
    }
    return ckpt;
}

void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params) {
    for (const auto& name : params.names()) {
        auto it = ckpt.tensors.find(name);
        if (it == ckpt.tensors.end()) {
            throw ShapeError("checkpoint missing tensor " + name);
        }
        Tensor& dst = params.at(name);
        if (it->second.dims() != dst.dims()) {
            throw ShapeError("checkpoint tensor " + name + " has mismatched dims");
        }
        std::copy(it->second.values().begin(), it->second.values().end(),
                  dst.mutable_values().begin());
    }
}

Checkpoint snapshot_params(const ParamStore& params) {
    Checkpoint ckpt;
    for (const auto& name : params.names()) {
        const Tensor& t = params.at(name);
        ckpt.tensors.emplace(name, Tensor::from_values(t.dims(), std::vector<double>(t.values())));
    }
    return ckpt;
}

}  // namespace detailnet
