#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace detailnet {

using Shape = std::vector<int>;

std::string shape_str(const Shape& dims);
std::int64_t shape_numel(const Shape& dims);

class Tensor;

namespace detail {

// One tape node. Interior nodes carry a pull-style backward closure that
// reads the node's grad and accumulates into the parents' grads. Parents
// are held by value so the graph keeps its inputs alive.
struct TensorImpl {
    Shape dims;
    std::vector<double> values;
    bool requires_grad = false;
    std::vector<double> grad;  // empty until first accumulation

    std::vector<Tensor> parents;
    std::function<void(const TensorImpl&)> backward_fn;
    bool consumed = false;  // tape already walked through this node

    std::int64_t numel() const { return static_cast<std::int64_t>(values.size()); }
    void accumulate_grad(const std::vector<double>& g);
};

}  // namespace detail

// Dense row-major tensor (NCHW for 4-D) with optional gradient tracking.
// Value-semantic handle over shared storage; op outputs are never written
// again after construction, so sharing is safe across reads.
class Tensor {
public:
    Tensor() = default;

    static Tensor zeros(const Shape& dims, bool requires_grad = false);
    static Tensor full(const Shape& dims, double value, bool requires_grad = false);
    static Tensor from_values(const Shape& dims, std::vector<double> values,
                              bool requires_grad = false);
    static Tensor scalar(double value, bool requires_grad = false);

    bool defined() const { return impl_ != nullptr; }

    const Shape& dims() const { return impl_->dims; }
    int dim(int i) const { return impl_->dims[static_cast<std::size_t>(i)]; }
    int ndim() const { return static_cast<int>(impl_->dims.size()); }
    std::int64_t numel() const { return impl_->numel(); }

    const std::vector<double>& values() const { return impl_->values; }
    std::vector<double>& mutable_values() { return impl_->values; }
    double value_at(std::int64_t i) const { return impl_->values[static_cast<std::size_t>(i)]; }

    // Only meaningful for numel()==1 tensors.
    double item() const;

    bool requires_grad() const { return impl_->requires_grad; }
    void set_requires_grad(bool flag);

    bool has_grad() const { return !impl_->grad.empty(); }
    const std::vector<double>& grad() const;
    void zero_grad();

    // Deep copy of values only; result is a detached leaf.
    Tensor clone() const;

    // All values finite (no NaN/Inf).
    bool all_finite() const;

    detail::TensorImpl* impl() const { return impl_.get(); }

    // Op constructors use this to attach tape metadata.
    static Tensor make_node(Shape dims, std::vector<double> values, std::vector<Tensor> parents,
                            std::function<void(const detail::TensorImpl&)> backward_fn);

private:
    explicit Tensor(std::shared_ptr<detail::TensorImpl> impl) : impl_(std::move(impl)) {}
    std::shared_ptr<detail::TensorImpl> impl_;
};

// Reverse-mode differentiation of the graph below `loss` (a scalar).
// Gradients accumulate into every reachable leaf with requires_grad set.
// The tape is single-use; a second walk through any node is a usage error.
void backward(const Tensor& loss);

// Thread-local gradient tracking switch.
bool grad_enabled();
void set_grad_enabled(bool enabled);

// RAII guard disabling gradient tracking (inference paths).
class NoGradGuard {
public:
    NoGradGuard() : prev_(grad_enabled()) { set_grad_enabled(false); }
    ~NoGradGuard() { set_grad_enabled(prev_); }
    NoGradGuard(const NoGradGuard&) = delete;
    NoGradGuard& operator=(const NoGradGuard&) = delete;

private:
    bool prev_;
};

// Deterministic-mode flag. The implementation is bitwise reproducible
// unconditionally (fixed accumulation order, static work partition); the
// flag is accepted for interface compatibility and recorded for callers
// that want to assert it.
bool deterministic();
void set_deterministic(bool flag);

}  // namespace detailnet
