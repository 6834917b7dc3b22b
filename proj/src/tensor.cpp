#include "detailnet/tensor.hpp"

#include <cmath>
#include <sstream>
#include <unordered_set>

#include "detailnet/errors.hpp"

namespace detailnet {

namespace {

thread_local bool g_grad_enabled = true;
bool g_deterministic = true;

}  // namespace

bool grad_enabled() { return g_grad_enabled; }
void set_grad_enabled(bool enabled) { g_grad_enabled = enabled; }

bool deterministic() { return g_deterministic; }
void set_deterministic(bool flag) { g_deterministic = flag; }

std::string shape_str(const Shape& dims) {
    std::ostringstream os;
    os << '[';
    for (std::size_t i = 0; i < dims.size(); ++i) {
        if (i) {
            os << ',';
        }
        os << dims[i];
    }
    os << ']';
    return os.str();
}

std::int64_t shape_numel(const Shape& dims) {
    std::int64_t n = 1;
    for (int d : dims) {
        n *= d;
    }
    return n;
}

namespace detail {

void TensorImpl::accumulate_grad(const std::vector<double>& g) {
    if (g.size() != values.size()) {
        throw ShapeError("grad size mismatch: " + std::to_string(g.size()) + " vs " +
                         std::to_string(values.size()));
    }
    if (grad.empty()) {
        grad.assign(values.size(), 0.0);
    }
    for (std::size_t i = 0; i < g.size(); ++i) {
        grad[i] += g[i];
    }
}

}  // namespace detail

namespace {

std::shared_ptr<detail::TensorImpl> new_impl(Shape dims, std::vector<double> values,
                                             bool requires_grad) {
    for (int d : dims) {
        if (d <= 0) {
            throw ShapeError("tensor dims must be positive, got " + shape_str(dims));
        }
    }
    if (shape_numel(dims) != static_cast<std::int64_t>(values.size())) {
        throw ShapeError("value count " + std::to_string(values.size()) + " does not match dims " +
                         shape_str(dims));
    }
    auto impl = std::make_shared<detail::TensorImpl>();
    impl->dims = std::move(dims);
    impl->values = std::move(values);
    impl->requires_grad = requires_grad;
    return impl;
}

}  // namespace

Tensor Tensor::zeros(const Shape& dims, bool requires_grad) {
    return Tensor(new_impl(dims, std::vector<double>(static_cast<std::size_t>(shape_numel(dims)), 0.0),
                           requires_grad));
}

Tensor Tensor::full(const Shape& dims, double value, bool requires_grad) {
    return Tensor(new_impl(dims,
                           std::vector<double>(static_cast<std::size_t>(shape_numel(dims)), value),
                           requires_grad));
}

Tensor Tensor::from_values(const Shape& dims, std::vector<double> values, bool requires_grad) {
    return Tensor(new_impl(dims, std::move(values), requires_grad));
}

Tensor Tensor::scalar(double value, bool requires_grad) {
    return Tensor(new_impl({1}, {value}, requires_grad));
}

Tensor Tensor::make_node(Shape dims, std::vector<double> values, std::vector<Tensor> parents,
                         std::function<void(const detail::TensorImpl&)> backward_fn) {
    bool track = grad_enabled();
    bool any_parent_grad = false;
    if (track) {
        for (const Tensor& p : parents) {
            if (p.requires_grad()) {
                any_parent_grad = true;
                break;
            }
        }
    }
    auto impl = new_impl(std::move(dims), std::move(values), track && any_parent_grad);
    if (impl->requires_grad) {
        impl->parents = std::move(parents);
        impl->backward_fn = std::move(backward_fn);
    }
    return Tensor(std::move(impl));
}

double Tensor::item() const {
    if (numel() != 1) {
        throw UsageError("item() on tensor with " + std::to_string(numel()) + " elements");
    }
    return impl_->values[0];
}

void Tensor::set_requires_grad(bool flag) {
    if (flag && impl_->backward_fn) {
        throw UsageError("requires_grad can only be toggled on leaf tensors");
    }
    impl_->requires_grad = flag;
    if (!flag) {
        impl_->grad.clear();
    }
}

const std::vector<double>& Tensor::grad() const {
    if (impl_->grad.empty()) {
        throw UsageError("grad accessed before backward populated it");
    }
    return impl_->grad;
}

void Tensor::zero_grad() { impl_->grad.clear(); }

Tensor Tensor::clone() const {
    return Tensor(new_impl(impl_->dims, impl_->values, false));
}

bool Tensor::all_finite() const {
    for (double v : impl_->values) {
        if (!std::isfinite(v)) {
            return false;
        }
    }
    return true;
}

void backward(const Tensor& loss) {
    if (!loss.defined()) {
        throw UsageError("backward on undefined tensor");
    }
    if (loss.numel() != 1) {
        throw UsageError("backward requires a scalar loss, got " + shape_str(loss.dims()));
    }
    if (!loss.requires_grad()) {
        throw UsageError("backward on a tensor with no tracked gradients");
    }

    // Iterative post-order DFS over parents; reverse gives topological order.
    std::vector<detail::TensorImpl*> order;
    std::unordered_set<detail::TensorImpl*> visited;
    struct Frame {
        detail::TensorImpl* node;
        std::size_t next_parent;
    };
    std::vector<Frame> stack;
    stack.push_back({loss.impl(), 0});
    visited.insert(loss.impl());
    while (!stack.empty()) {
        Frame& f = stack.back();
        if (f.next_parent < f.node->parents.size()) {
            detail::TensorImpl* p = f.node->parents[f.next_parent++].impl();
            if (p->requires_grad && !visited.count(p)) {
                visited.insert(p);
                stack.push_back({p, 0});
            }
        } else {
            order.push_back(f.node);
            stack.pop_back();
        }
    }

    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        if ((*it)->consumed) {
            throw UsageError("backward on an already-consumed tape");
        }
    }

    loss.impl()->accumulate_grad({1.0});
    for (auto it = order.rbegin(); it != order.rend(); ++it) {
        detail::TensorImpl* node = *it;
        if (node->backward_fn) {
            if (!node->grad.empty()) {
                node->backward_fn(*node);
            }
            node->consumed = true;
        }
    }
}

}  // namespace detailnet
