#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sentiment {

using Shape = std::vector<std::size_t>;

inline std::size_t shape_numel(const Shape& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

inline std::string shape_str(const Shape& shape) {
    std::string s = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) s += "x";
        s += std::to_string(shape[i]);
    }
    return s + "]";
}

/// Dense n-dimensional value. The handle is shared: copies alias the same
/// storage, which is what lets backward closures reach the buffers they
/// need after the caller's locals go out of scope.
template <typename T>
class Tensor {
public:
    struct Node {
        Shape shape;
        std::vector<T> value;
        std::vector<T> grad;
        bool requires_grad = false;
    };

    Tensor() = default;

    static Tensor zeros(Shape shape, bool requires_grad = false) {
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        std::size_t n = shape_numel(t.node_->shape);
        t.node_->value.assign(n, T(0));
        t.node_->grad.assign(n, T(0));
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor from_values(Shape shape, std::vector<T> values, bool requires_grad = false) {
        if (values.size() != shape_numel(shape))
            throw std::invalid_argument("tensor data length " + std::to_string(values.size()) +
                                        " does not match shape " + shape_str(shape));
        Tensor t;
        t.node_ = std::make_shared<Node>();
        t.node_->shape = std::move(shape);
        t.node_->value = std::move(values);
        t.node_->grad.assign(t.node_->value.size(), T(0));
        t.node_->requires_grad = requires_grad;
        return t;
    }

    static Tensor scalar(T v, bool requires_grad = false) {
        return from_values({1}, {v}, requires_grad);
    }

    bool defined() const { return node_ != nullptr; }
    const Shape& shape() const { return node_->shape; }
    std::size_t numel() const { return node_->value.size(); }
    std::size_t dim(std::size_t i) const { return node_->shape.at(i); }
    std::size_t rank() const { return node_->shape.size(); }

    std::span<T> values() { return node_->value; }
    std::span<const T> values() const { return node_->value; }
    std::span<T> grad() { return node_->grad; }
    std::span<const T> grad() const { return node_->grad; }

    bool requires_grad() const { return node_->requires_grad; }
    void set_requires_grad(bool b) { node_->requires_grad = b; }

    void zero_grad() { std::fill(node_->grad.begin(), node_->grad.end(), T(0)); }

    T item() const {
        if (numel() != 1) throw std::logic_error("item() on non-scalar tensor " + shape_str(shape()));
        return node_->value[0];
    }

    /// Identity of the underlying storage, for aliasing checks in tests.
    const void* storage_id() const { return node_.get(); }

    std::shared_ptr<Node> node() const { return node_; }

private:
    std::shared_ptr<Node> node_;
};

/// Records executed ops in order. backward() replays the records once, in
/// reverse, accumulating into the grad buffers of every tensor that
/// requires gradients. One tape per thread of execution; reset() between
/// independent forward passes.
template <typename T>
class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    bool recording() const { return recording_; }
    void set_recording(bool b) { recording_ = b; }

    void record(std::function<void()> backward_fn) {
        if (recording_) records_.push_back(std::move(backward_fn));
    }

    std::size_t size() const { return records_.size(); }

    void reset() {
        records_.clear();
        backward_run_ = false;
    }

    void backward(Tensor<T>& loss) {
        if (loss.numel() != 1)
            throw std::logic_error("backward requires a scalar loss, got " + shape_str(loss.shape()));
        if (records_.empty())
            throw std::logic_error("backward on a tape with no recorded ops");
        if (backward_run_)
            throw std::logic_error("backward called twice without tape reset");
        backward_run_ = true;
        loss.grad()[0] = T(1);
        for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
    }

private:
    std::vector<std::function<void()>> records_;
    bool recording_ = true;
    bool backward_run_ = false;
};

namespace detail {

template <typename T>
bool wants_grad(const Tensor<T>& t) {
    return t.requires_grad();
}

template <typename T>
Tensor<T> op_output(Shape shape, bool requires_grad) {
    return Tensor<T>::zeros(std::move(shape), requires_grad);
}

// C[m x n] += A[m x k] * B[k x n], row major.
template <typename T>
void gemm_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        T* crow = c + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T aik = arow[kk];
            if (aik == T(0)) continue;
            const T* brow = b + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

// C[m x k] += A[m x n] * B^T where B is [k x n].
template <typename T>
void gemm_bt_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t n, std::size_t k) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * n;
        T* crow = c + i * k;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T* brow = b + kk * n;
            T acc = T(0);
            for (std::size_t j = 0; j < n; ++j) acc += arow[j] * brow[j];
            crow[kk] += acc;
        }
    }
}

// C[k x n] += A^T * B where A is [m x k], B is [m x n].
template <typename T>
void gemm_at_acc(const T* a, const T* b, T* c, std::size_t m, std::size_t k, std::size_t n) {
    for (std::size_t i = 0; i < m; ++i) {
        const T* arow = a + i * k;
        const T* brow = b + i * n;
        for (std::size_t kk = 0; kk < k; ++kk) {
            const T aik = arow[kk];
            if (aik == T(0)) continue;
            T* crow = c + kk * n;
            for (std::size_t j = 0; j < n; ++j) crow[j] += aik * brow[j];
        }
    }
}

template <typename T>
void check_same_shape(const Tensor<T>& a, const Tensor<T>& b, const char* op) {
    if (a.shape() != b.shape())
        throw std::invalid_argument(std::string(op) + ": shape mismatch " + shape_str(a.shape()) +
                                    " vs " + shape_str(b.shape()));
}

}  // namespace detail

template <typename T>
Tensor<T> matmul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    if (a.rank() != 2 || b.rank() != 2 || a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: incompatible shapes " + shape_str(a.shape()) + " and " +
                                    shape_str(b.shape()));
    const std::size_t m = a.dim(0), k = a.dim(1), n = b.dim(1);
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor<T> out = detail::op_output<T>({m, n}, rg);
    detail::gemm_acc(a.values().data(), b.values().data(), out.values().data(), m, k, n);
    if (rg) {
        tape.record([a = a, b = b, out, m, k, n]() mutable {
            // dA = dC * B^T, dB = A^T * dC
            if (a.requires_grad())
                detail::gemm_bt_acc(out.grad().data(), b.values().data(), a.grad().data(), m, n, k);
            if (b.requires_grad())
                detail::gemm_at_acc(a.values().data(), out.grad().data(), b.grad().data(), m, k, n);
        });
    }
    return out;
}

template <typename T>
Tensor<T> add(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "add");
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor<T> out = detail::op_output<T>(a.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = a.values()[i] + b.values()[i];
    if (rg) {
        tape.record([a = a, b = b, out]() mutable {
            if (a.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i];
            if (b.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) b.grad()[i] += out.grad()[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> sub(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "sub");
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor<T> out = detail::op_output<T>(a.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = a.values()[i] - b.values()[i];
    if (rg) {
        tape.record([a = a, b = b, out]() mutable {
            if (a.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i];
            if (b.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) b.grad()[i] -= out.grad()[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> mul(Tape<T>& tape, const Tensor<T>& a, const Tensor<T>& b) {
    detail::check_same_shape(a, b, "mul");
    bool rg = a.requires_grad() || b.requires_grad();
    Tensor<T> out = detail::op_output<T>(a.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = a.values()[i] * b.values()[i];
    if (rg) {
        tape.record([a = a, b = b, out]() mutable {
            if (a.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) a.grad()[i] += out.grad()[i] * b.values()[i];
            if (b.requires_grad())
                for (std::size_t i = 0; i < out.numel(); ++i) b.grad()[i] += out.grad()[i] * a.values()[i];
        });
    }
    return out;
}

/// The one broadcast the models need: a length-n bias row added to every
/// row of an m x n matrix.
template <typename T>
Tensor<T> add_bias_row(Tape<T>& tape, const Tensor<T>& x, const Tensor<T>& bias) {
    if (x.rank() != 2 || bias.rank() != 1 || bias.dim(0) != x.dim(1))
        throw std::invalid_argument("add_bias_row: need [m x n] + [n], got " + shape_str(x.shape()) +
                                    " and " + shape_str(bias.shape()));
    const std::size_t m = x.dim(0), n = x.dim(1);
    bool rg = x.requires_grad() || bias.requires_grad();
    Tensor<T> out = detail::op_output<T>({m, n}, rg);
    for (std::size_t i = 0; i < m; ++i)
        for (std::size_t j = 0; j < n; ++j) out.values()[i * n + j] = x.values()[i * n + j] + bias.values()[j];
    if (rg) {
        tape.record([x = x, bias = bias, out, m, n]() mutable {
            if (x.requires_grad())
                for (std::size_t i = 0; i < m * n; ++i) x.grad()[i] += out.grad()[i];
            if (bias.requires_grad())
                for (std::size_t i = 0; i < m; ++i)
                    for (std::size_t j = 0; j < n; ++j) bias.grad()[j] += out.grad()[i * n + j];
        });
    }
    return out;
}

template <typename T>
Tensor<T> scale(Tape<T>& tape, const Tensor<T>& x, T s) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(x.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = x.values()[i] * s;
    if (rg) {
        tape.record([x = x, out, s]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) x.grad()[i] += out.grad()[i] * s;
        });
    }
    return out;
}

namespace detail {

// Saturates cleanly at both ends instead of overflowing exp.
template <typename T>
T stable_sigmoid(T x) {
    if (x >= T(0)) {
        T e = std::exp(-x);
        return T(1) / (T(1) + e);
    }
    T e = std::exp(x);
    return e / (T(1) + e);
}

}  // namespace detail

template <typename T>
Tensor<T> sigmoid(Tape<T>& tape, const Tensor<T>& x) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(x.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = detail::stable_sigmoid(x.values()[i]);
    if (rg) {
        tape.record([x = x, out]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) {
                T s = out.values()[i];
                x.grad()[i] += out.grad()[i] * s * (T(1) - s);
            }
        });
    }
    return out;
}

template <typename T>
Tensor<T> tanh_op(Tape<T>& tape, const Tensor<T>& x) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(x.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = std::tanh(x.values()[i]);
    if (rg) {
        tape.record([x = x, out]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) {
                T th = out.values()[i];
                x.grad()[i] += out.grad()[i] * (T(1) - th * th);
            }
        });
    }
    return out;
}

/// Gradient at exactly 0 is defined as 0.
template <typename T>
Tensor<T> relu(Tape<T>& tape, const Tensor<T>& x) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(x.shape(), rg);
    for (std::size_t i = 0; i < out.numel(); ++i) out.values()[i] = x.values()[i] > T(0) ? x.values()[i] : T(0);
    if (rg) {
        tape.record([x = x, out]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i)
                if (x.values()[i] > T(0)) x.grad()[i] += out.grad()[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> sum(Tape<T>& tape, const Tensor<T>& x) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>({1}, rg);
    T acc = T(0);
    for (std::size_t i = 0; i < x.numel(); ++i) acc += x.values()[i];
    out.values()[0] = acc;
    if (rg) {
        tape.record([x = x, out]() mutable {
            T g = out.grad()[0];
            for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
        });
    }
    return out;
}

template <typename T>
Tensor<T> mean(Tape<T>& tape, const Tensor<T>& x) {
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>({1}, rg);
    T acc = T(0);
    for (std::size_t i = 0; i < x.numel(); ++i) acc += x.values()[i];
    const T inv_n = T(1) / static_cast<T>(x.numel());
    out.values()[0] = acc * inv_n;
    if (rg) {
        tape.record([x = x, out, inv_n]() mutable {
            T g = out.grad()[0] * inv_n;
            for (std::size_t i = 0; i < x.numel(); ++i) x.grad()[i] += g;
        });
    }
    return out;
}

/// Copies into a new shape with the same element count. Backward routes
/// gradients straight through.
template <typename T>
Tensor<T> reshape(Tape<T>& tape, const Tensor<T>& x, Shape shape) {
    if (shape_numel(shape) != x.numel())
        throw std::invalid_argument("reshape: element count mismatch " + shape_str(x.shape()) +
                                    " -> " + shape_str(shape));
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(std::move(shape), rg);
    std::copy(x.values().begin(), x.values().end(), out.values().begin());
    if (rg) {
        tape.record([x = x, out]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) x.grad()[i] += out.grad()[i];
        });
    }
    return out;
}

/// Central finite-difference verification of the analytic gradient of a
/// scalar-valued function at x. Returns the max over coordinates of
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
template <typename T, typename F>
T gradient_check(F&& f, Tensor<T>& x, T eps) {
    x.set_requires_grad(true);
    x.zero_grad();

    Tape<T> tape;
    Tensor<T> y = f(tape, x);
    if (y.numel() != 1) throw std::logic_error("gradient_check: f must be scalar-valued");
    if (!std::isfinite(y.item())) throw std::runtime_error("gradient_check: non-finite value at base point");
    tape.backward(y);
    std::vector<T> analytic(x.grad().begin(), x.grad().end());

    auto eval = [&](std::size_t i, T delta) {
        T saved = x.values()[i];
        x.values()[i] = saved + delta;
        Tape<T> t;
        t.set_recording(false);
        Tensor<T> v = f(t, x);
        x.values()[i] = saved;
        T out = v.item();
        if (!std::isfinite(out)) throw std::runtime_error("gradient_check: non-finite intermediate value");
        return out;
    };

    T worst = T(0);
    for (std::size_t i = 0; i < x.numel(); ++i) {
        T numeric = (eval(i, eps) - eval(i, -eps)) / (T(2) * eps);
        T denom = std::max(T(1), std::max(std::abs(analytic[i]), std::abs(numeric)));
        worst = std::max(worst, std::abs(analytic[i] - numeric) / denom);
    }
    return worst;
}

}  // namespace sentiment
