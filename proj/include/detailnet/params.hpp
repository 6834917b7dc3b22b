#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "detailnet/tensor.hpp"

namespace detailnet {

struct Param {
    Tensor tensor;
    bool frozen = false;
};

// Named parameter set with checkpoint-stable addressing. Names are unique;
// frozen entries never reach the optimizer.
class ParamStore {
  public:
    void add(const std::string& name, Tensor tensor, bool frozen = false);
    bool has(const std::string& name) const;
    const Tensor& at(const std::string& name) const;
    Tensor& at(const std::string& name);
    bool frozen(const std::string& name) const;
    // Marks every entry under `prefix.` (or the exact name) frozen and stops
    // gradient tracking for it.
    void set_frozen_prefix(const std::string& prefix);

    std::vector<std::string> names() const;
    std::vector<std::string> trainable_names() const;
    std::size_t size() const { return params_.size(); }
    std::int64_t total_numel() const;
    void zero_grads();

  private:
    std::map<std::string, Param> params_;
};

}  // namespace detailnet
