#pragma once

#include <cmath>
#include <cstdint>
#include <span>
#include <stdexcept>
#include <vector>

#include "sentiment/autodiff.hpp"
#include "sentiment/layers.hpp"

namespace sentiment {

struct TrainingDiverged : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Metrics {
    double loss = 0.0;
    double accuracy = 0.0;
    std::size_t count = 0;
};

/// Mean binary cross-entropy with probabilities clamped to
/// [1e-7, 1 - 1e-7] before the logs. Differentiable w.r.t. p; the clamp
/// passes no gradient outside its range.
template <typename T>
Tensor<T> bce_loss(Tape<T>& tape, const Tensor<T>& p, const std::vector<int8_t>& labels) {
    if (p.numel() != labels.size())
        throw std::invalid_argument("bce_loss: " + std::to_string(p.numel()) + " probabilities vs " +
                                    std::to_string(labels.size()) + " labels");
    const T lo = T(1e-7), hi = T(1) - T(1e-7);
    const std::size_t n = labels.size();

    bool rg = p.requires_grad();
    Tensor<T> out = detail::op_output<T>({1}, rg);
    T acc = T(0);
    for (std::size_t i = 0; i < n; ++i) {
        T pc = std::min(std::max(p.values()[i], lo), hi);
        acc += labels[i] ? std::log(pc) : std::log(T(1) - pc);
    }
    out.values()[0] = -acc / static_cast<T>(n);
    if (rg) {
        std::vector<int8_t> y = labels;
        tape.record([p = p, out, y, lo, hi, n]() mutable {
            const T g = out.grad()[0] / static_cast<T>(n);
            for (std::size_t i = 0; i < n; ++i) {
                T pv = p.values()[i];
                if (pv < lo || pv > hi) continue;
                p.grad()[i] += g * (y[i] ? -T(1) / pv : T(1) / (T(1) - pv));
            }
        });
    }
    return out;
}

/// Fraction of correct predictions at threshold 0.5; a probability of
/// exactly 0.5 predicts class 1.
template <typename T>
double binary_accuracy(std::span<const T> p, const std::vector<int8_t>& labels) {
    if (p.size() != labels.size())
        throw std::invalid_argument("binary_accuracy: " + std::to_string(p.size()) +
                                    " probabilities vs " + std::to_string(labels.size()) + " labels");
    if (labels.empty()) return 0.0;
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        int predicted = p[i] >= T(0.5) ? 1 : 0;
        if (predicted == labels[i]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

template <typename T>
struct AdamConfig {
    T learning_rate = T(0.001);
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-8);
};

/// Adaptive moment estimation with bias-corrected first and second
/// moments. Owns one (m, v) pair per parameter tensor.
template <typename T>
class Adam {
public:
    Adam(NamedParams<T> params, AdamConfig<T> cfg) : params_(std::move(params)), cfg_(cfg) {
        m_.reserve(params_.size());
        v_.reserve(params_.size());
        for (const auto& [name, p] : params_) {
            m_.emplace_back(p.numel(), T(0));
            v_.emplace_back(p.numel(), T(0));
        }
    }

    void zero_grad() {
        for (auto& [name, p] : params_) p.zero_grad();
    }

    /// One update from the gradients currently held by the parameters.
    /// Throws TrainingDiverged on any non-finite gradient.
    void step() {
        ++t_;
        const T bc1 = T(1) - std::pow(cfg_.beta1, static_cast<T>(t_));
        const T bc2 = T(1) - std::pow(cfg_.beta2, static_cast<T>(t_));
        for (std::size_t k = 0; k < params_.size(); ++k) {
            auto& [name, p] = params_[k];
            auto grad = p.grad();
            auto value = p.values();
            T* m = m_[k].data();
            T* v = v_[k].data();
            for (std::size_t i = 0; i < grad.size(); ++i) {
                const T g = grad[i];
                if (!std::isfinite(g))
                    throw TrainingDiverged("non-finite gradient in " + name + " at step " +
                                           std::to_string(t_));
                m[i] = cfg_.beta1 * m[i] + (T(1) - cfg_.beta1) * g;
                v[i] = cfg_.beta2 * v[i] + (T(1) - cfg_.beta2) * g * g;
                const T mhat = m[i] / bc1;
                const T vhat = v[i] / bc2;
                value[i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

    std::size_t step_count() const { return t_; }
    const AdamConfig<T>& config() const { return cfg_; }

private:
    NamedParams<T> params_;
    std::vector<std::vector<T>> m_, v_;
    AdamConfig<T> cfg_;
    std::size_t t_ = 0;
};

}  // namespace sentiment
