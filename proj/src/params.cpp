#include "detailnet/params.hpp"

#include "detailnet/errors.hpp"

namespace detailnet {

void ParamStore::add(const std::string& name, Tensor tensor, bool frozen) {
    if (params_.count(name) != 0) {
        throw UsageError("duplicate parameter name: " + name);
    }
    if (frozen) {
        tensor.set_requires_grad(false);
    }
    params_.emplace(name, Param{std::move(tensor), frozen});
}

bool ParamStore::has(const std::string& name) const { return params_.count(name) != 0; }

const Tensor& ParamStore::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw UsageError("unknown parameter name: " + name);
    }
    return it->second.tensor;
}

Tensor& ParamStore::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw UsageError("unknown parameter name: " + name);
    }
    return it->second.tensor;
}

bool ParamStore::frozen(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) {
        throw UsageError("unknown parameter name: " + name);
    }
    return it->second.frozen;
}

void ParamStore::set_frozen_prefix(const std::string& prefix) {
    const std::string dotted = prefix + ".";
    bool any = false;
    for (auto& [name, param] : params_) {
        if (name == prefix || name.rfind(dotted, 0) == 0) {
            param.frozen = true;
            param.tensor.set_requires_grad(false);
            any = true;
        }
    }
    if (!any) {
        throw UsageError("no parameters under prefix: " + prefix);
    }
}

std::vector<std::string> ParamStore::names() const {
    std::vector<std::string> out;
    out.reserve(params_.size());
    for (const auto& [name, param] : params_) {
        out.push_back(name);
    }
    return out;
}

std::vector<std::string> ParamStore::trainable_names() const {
    std::vector<std::string> out;
    for (const auto& [name, param] : params_) {
        if (!param.frozen) {
            out.push_back(name);
        }
    }
    return out;
}

std::int64_t ParamStore::total_numel() const {
    std::int64_t n = 0;
    for (const auto& [name, param] : params_) {
        n += param.tensor.numel();
    }
    return n;
}

void ParamStore::zero_grads() {
    for (auto& [name, param] : params_) {
        if (param.tensor.requires_grad()) {
            param.tensor.zero_grad();
        }
    }
}

}  // namespace detailnet
