#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detailnet/params.hpp"
#include "detailnet/tensor.hpp"

namespace detailnet {

// On-disk training state. Binary layout: magic "DPDE", u32 version, u64 step,
// RNG state blob, in-flight epoch order, named tensor table, Adam moment
// table. All integers little-endian.
struct Checkpoint {
    static constexpr std::uint32_t kVersion = 1;

    std::uint64_t step = 0;
    std::string rng_state;
    std::vector<std::uint64_t> epoch_order;
    std::uint64_t epoch_pos = 0;
    std::map<std::string, Tensor> tensors;
    struct Moments {
        std::vector<double> m;
        std::vector<double> v;
    };
    std::map<std::string, Moments> moments;
};

void checkpoint_save(const Checkpoint& ckpt, const std::string& path);
Checkpoint checkpoint_load(const std::string& path);

// Copies checkpoint tensors into the store, preserving frozen flags. Missing
// or shape-mismatched entries raise a shape error naming the tensor.
void apply_checkpoint(const Checkpoint& ckpt, ParamStore& params);

// Captures the current parameter values (dissociated from any tape).
Checkpoint snapshot_params(const ParamStore& params);

}  // namespace detailnet
