#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numeric>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "uhddip/errors.hpp"
#include "uhddip/rng.hpp"

namespace uhddip {

using Shape = std::vector<int64_t>;

inline int64_t shape_numel(const Shape& s) {
    int64_t n = 1;
    for (int64_t d : s) n *= d;
    return n;
}

inline std::string shape_str(const Shape& s) {
    std::ostringstream os;
    os << "[";
    for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
    os << "]";
    return os.str();
}

namespace detail {

template <typename T>
struct TensorImpl {
    Shape shape;
    std::vector<T> data;
    std::vector<T> grad;  // empty until first accumulation
    bool requires_grad = false;

    int64_t numel() const { return static_cast<int64_t>(data.size()); }

    void ensure_grad() {
        if (grad.empty()) grad.assign(data.size(), T(0));
    }
};

}  // namespace detail

// Dense N-D array with shared storage semantics (copies alias the same
// buffer, like a handle). T is float for training, double for gradient
// verification.
template <typename T>
class Tensor {
public:
    using Scalar = T;

    Tensor() : impl_(std::make_shared<detail::TensorImpl<T>>()) {}

    explicit Tensor(Shape shape, T fill = T(0)) : Tensor() {
        impl_->shape = std::move(shape);
        impl_->data.assign(static_cast<size_t>(shape_numel(impl_->shape)), fill);
    }

    static Tensor zeros(Shape shape) { return Tensor(std::move(shape), T(0)); }
    static Tensor ones(Shape shape) { return Tensor(std::move(shape), T(1)); }
    static Tensor full(Shape shape, T v) { return Tensor(std::move(shape), v); }

    static Tensor from_data(Shape shape, std::vector<T> values) {
        Tensor t;
        if (shape_numel(shape) != static_cast<int64_t>(values.size()))
            throw DimensionError("from_data: shape " + shape_str(shape) +
                                 " does not match value count");
        t.impl_->shape = std::move(shape);
        t.impl_->data = std::move(values);
        return t;
    }

    static Tensor scalar(T v) { return Tensor({1}, v); }

    static Tensor uniform(Shape shape, Rng& rng, T lo = T(-1), T hi = T(1)) {
        Tensor t(std::move(shape));
        for (auto& v : t.impl_->data) v = static_cast<T>(rng.uniform(lo, hi));
        return t;
    }

    const Shape& shape() const { return impl_->shape; }
    int rank() const { return static_cast<int>(impl_->shape.size()); }
    int64_t dim(int i) const { return impl_->shape[static_cast<size_t>(i)]; }
    int64_t numel() const { return impl_->numel(); }
    bool empty() const { return impl_->data.empty(); }

    T* data() { return impl_->data.data(); }
    const T* data() const { return impl_->data.data(); }
    std::vector<T>& vec() { return impl_->data; }
    const std::vector<T>& vec() const { return impl_->data; }

    T& operator[](int64_t i) { return impl_->data[static_cast<size_t>(i)]; }
    const T& operator[](int64_t i) const { return impl_->data[static_cast<size_t>(i)]; }

    // 4-D accessor (N,C,H,W).
    T& at(int64_t n, int64_t c, int64_t y, int64_t x) {
        return impl_->data[static_cast<size_t>(offset4(n, c, y, x))];
    }
    const T& at(int64_t n, int64_t c, int64_t y, int64_t x) const {
        return impl_->data[static_cast<size_t>(offset4(n, c, y, x))];
    }
    int64_t offset4(int64_t n, int64_t c, int64_t y, int64_t x) const {
        const Shape& s = impl_->shape;
        return ((n * s[1] + c) * s[2] + y) * s[3] + x;
    }

    bool requires_grad() const { return impl_->requires_grad; }
    Tensor& set_requires_grad(bool v) {
        impl_->requires_grad = v;
        return *this;
    }

    // Gradient state lives on the shared impl, so these are const on the
    // handle (copies alias the same buffers).
    bool has_grad() const { return !impl_->grad.empty(); }
    // Gradient as a value copy (shape matches data). Zero if never touched.
    Tensor grad() const {
        Tensor g(impl_->shape);
        if (!impl_->grad.empty()) g.impl_->data = impl_->grad;
        return g;
    }
    std::vector<T>& grad_vec() const {
        impl_->ensure_grad();
        return impl_->grad;
    }
    void zero_grad() const {
        if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), T(0));
    }
    void accumulate_grad(const T* g, int64_t n) const {
        impl_->ensure_grad();
        for (int64_t i = 0; i < n; ++i) impl_->grad[static_cast<size_t>(i)] += g[i];
    }

    // Deep copy of values (fresh storage, no grad, no graph linkage).
    Tensor clone() const {
        Tensor t;
        t.impl_->shape = impl_->shape;
        t.impl_->data = impl_->data;
        return t;
    }

    bool same_shape(const Tensor& o) const { return impl_->shape == o.impl_->shape; }

    bool all_finite() const {
        for (const T& v : impl_->data)
            if (!std::isfinite(static_cast<double>(v))) return false;
        return true;
    }

    std::shared_ptr<detail::TensorImpl<T>> impl() const { return impl_; }

private:
    std::shared_ptr<detail::TensorImpl<T>> impl_;
};

// Reverse-mode tape. Ops executed under an active TapeScope append one node
// each; recording order is execution order, so walking the list backwards
// visits consumers before producers, each node exactly once.
template <typename T>
class Tape {
public:
    struct Node {
        const char* op;
        std::function<void()> backward;
    };

    void record(const char* op, std::function<void()> backward) {
        nodes_.push_back(Node{op, std::move(backward)});
    }

    size_t size() const { return nodes_.size(); }

    void clear() { nodes_.clear(); }

    // Seeds d(loss)/d(loss) = 1 and propagates to every recorded input.
    void backward(Tensor<T> loss) {
        if (loss.numel() != 1)
            throw UsageError("backward: loss must be scalar, got shape " +
                             shape_str(loss.shape()));
        if (!loss.requires_grad())
            throw UsageError("backward: loss is not connected to this tape");
        loss.grad_vec()[0] += T(1);
        for (auto it = nodes_.rbegin(); it != nodes_.rend(); ++it) it->backward();
    }

private:
    std::vector<Node> nodes_;
};

// RAII activation of a tape for the current thread. Ops consult
// TapeScope<T>::current() to decide whether to record.
template <typename T>
class TapeScope {
public:
    explicit TapeScope(Tape<T>& tape) : prev_(active_) { active_ = &tape; }
    ~TapeScope() { active_ = prev_; }
    TapeScope(const TapeScope&) = delete;
    TapeScope& operator=(const TapeScope&) = delete;

    static Tape<T>* current() { return active_; }

private:
    Tape<T>* prev_;
    static inline thread_local Tape<T>* active_ = nullptr;
};

}  // namespace uhddip
