#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "sentiment/autodiff.hpp"
#include "sentiment/rng.hpp"
#include "sentiment/textproc.hpp"

namespace sentiment {

enum class Activation { relu, tanh, sigmoid };
enum class Mode { train, eval };

inline const char* activation_name(Activation a) {
    switch (a) {
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
        default: return "sigmoid";
    }
}

inline Activation activation_from_name(const std::string& name) {
    if (name == "relu") return Activation::relu;
    if (name == "tanh") return Activation::tanh;
    if (name == "sigmoid") return Activation::sigmoid;
    throw std::invalid_argument("unknown activation: " + name);
}

template <typename T>
struct EmbeddingParams {
    Tensor<T> table;  // (vocab+1) x dim; row 0 is the pad row, kept at zero
    std::size_t dim = 0;
};

template <typename T>
struct LstmParams {
    Tensor<T> w_forget, w_input, w_output, w_cell;  // d x h
    Tensor<T> u_forget, u_input, u_output, u_cell;  // h x h
    Tensor<T> b_forget, b_input, b_output, b_cell;  // h
    std::size_t hidden = 0;
};

template <typename T>
struct Conv1dParams {
    Tensor<T> kernels;  // F x k x C
    Tensor<T> bias;     // F
    std::size_t filters = 0, width = 0, in_channels = 0;
};

template <typename T>
struct DenseParams {
    Tensor<T> weight;  // in x out
    Tensor<T> bias;    // out
};

template <typename T>
struct LstmClassifier {
    EmbeddingParams<T> embedding;
    LstmParams<T> lstm;
    DenseParams<T> fc;
    Activation hidden_activation = Activation::relu;
    T dropout_rate = T(0);
    DenseParams<T> out;  // width 1
};

template <typename T>
struct ConvStage {
    Conv1dParams<T> conv;
    std::size_t pool_window = 2, pool_stride = 2;
};

template <typename T>
struct CnnClassifier {
    EmbeddingParams<T> embedding;
    std::vector<ConvStage<T>> stages;
    DenseParams<T> dense1;
    DenseParams<T> dense2;  // width 1
};

// ---------------------------------------------------------------- init

template <typename T>
Tensor<T> uniform_tensor(Shape shape, std::mt19937& rng, double lo, double hi) {
    Tensor<T> t = Tensor<T>::zeros(std::move(shape), true);
    for (auto& v : t.values()) v = static_cast<T>(uniform_in(rng, lo, hi));
    return t;
}

/// Weights uniform in [-1/sqrt(fan_in), 1/sqrt(fan_in)], biases zero.
template <typename T>
DenseParams<T> make_dense(std::size_t in, std::size_t out, std::mt19937& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    DenseParams<T> p;
    p.weight = uniform_tensor<T>({in, out}, rng, -bound, bound);
    p.bias = Tensor<T>::zeros({out}, true);
    return p;
}

template <typename T>
LstmParams<T> make_lstm(std::size_t embed_dim, std::size_t hidden, std::mt19937& rng) {
    const double wb = 1.0 / std::sqrt(static_cast<double>(embed_dim));
    const double ub = 1.0 / std::sqrt(static_cast<double>(hidden));
    LstmParams<T> p;
    p.hidden = hidden;
    p.w_forget = uniform_tensor<T>({embed_dim, hidden}, rng, -wb, wb);
    p.w_input = uniform_tensor<T>({embed_dim, hidden}, rng, -wb, wb);
    p.w_output = uniform_tensor<T>({embed_dim, hidden}, rng, -wb, wb);
    p.w_cell = uniform_tensor<T>({embed_dim, hidden}, rng, -wb, wb);
    p.u_forget = uniform_tensor<T>({hidden, hidden}, rng, -ub, ub);
    p.u_input = uniform_tensor<T>({hidden, hidden}, rng, -ub, ub);
    p.u_output = uniform_tensor<T>({hidden, hidden}, rng, -ub, ub);
    p.u_cell = uniform_tensor<T>({hidden, hidden}, rng, -ub, ub);
    p.b_forget = Tensor<T>::zeros({hidden}, true);
    p.b_input = Tensor<T>::zeros({hidden}, true);
    p.b_output = Tensor<T>::zeros({hidden}, true);
    p.b_cell = Tensor<T>::zeros({hidden}, true);
    return p;
}

template <typename T>
Conv1dParams<T> make_conv1d(std::size_t filters, std::size_t width, std::size_t in_channels,
                            std::mt19937& rng) {
    if (width % 2 == 0) throw std::invalid_argument("conv1d kernel width must be odd for same-padding");
    const double bound = 1.0 / std::sqrt(static_cast<double>(width * in_channels));
    Conv1dParams<T> p;
    p.filters = filters;
    p.width = width;
    p.in_channels = in_channels;
    p.kernels = uniform_tensor<T>({filters, width, in_channels}, rng, -bound, bound);
    p.bias = Tensor<T>::zeros({filters}, true);
    return p;
}

template <typename T>
EmbeddingParams<T> make_embedding(const EmbeddingInit& init) {
    EmbeddingParams<T> p;
    p.dim = init.dim;
    p.table = Tensor<T>::zeros({init.rows, init.dim}, true);
    for (std::size_t i = 0; i < init.matrix.size(); ++i)
        p.table.values()[i] = static_cast<T>(init.matrix[i]);
    return p;
}

// ------------------------------------------------------------ layer ops

/// Looks up one embedding row per id. Output is B x T x d. The backward
/// pass scatters into the looked-up rows only; the pad row (id 0) never
/// receives gradient, which keeps it exactly zero through training.
template <typename T>
Tensor<T> embedding_forward(Tape<T>& tape, const EmbeddingParams<T>& emb, const Batch& batch) {
    const std::size_t b_count = batch.size, seq = batch.seq_len, d = emb.dim;
    const std::size_t rows = emb.table.dim(0);
    for (int32_t id : batch.ids)
        if (id < 0 || static_cast<std::size_t>(id) >= rows)
            throw std::out_of_range("embedding id " + std::to_string(id) + " outside [0, " +
                                    std::to_string(rows - 1) + "]");

    bool rg = emb.table.requires_grad();
    Tensor<T> out = detail::op_output<T>({b_count, seq, d}, rg);
    const auto table = emb.table.values();
    auto ov = out.values();
    for (std::size_t i = 0; i < batch.ids.size(); ++i) {
        const T* src = table.data() + static_cast<std::size_t>(batch.ids[i]) * d;
        std::copy(src, src + d, ov.data() + i * d);
    }
    if (rg) {
        Tensor<T> table_t = emb.table;
        std::vector<int32_t> ids = batch.ids;
        tape.record([table_t, out, ids, d]() mutable {
            auto tg = table_t.grad();
            auto og = out.grad();
            for (std::size_t i = 0; i < ids.size(); ++i) {
                if (ids[i] == 0) continue;  // pad row stays untouched
                T* dst = tg.data() + static_cast<std::size_t>(ids[i]) * d;
                const T* src = og.data() + i * d;
                for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

/// Slice x[:, t, :] out of a B x T x d tensor.
template <typename T>
Tensor<T> select_time(Tape<T>& tape, const Tensor<T>& x, std::size_t t) {
    if (x.rank() != 3 || t >= x.dim(1))
        throw std::out_of_range("select_time: t=" + std::to_string(t) + " on " + shape_str(x.shape()));
    const std::size_t b_count = x.dim(0), seq = x.dim(1), d = x.dim(2);
    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>({b_count, d}, rg);
    for (std::size_t b = 0; b < b_count; ++b) {
        const T* src = x.values().data() + (b * seq + t) * d;
        std::copy(src, src + d, out.values().data() + b * d);
    }
    if (rg) {
        tape.record([x = x, out, t, b_count, seq, d]() mutable {
            for (std::size_t b = 0; b < b_count; ++b) {
                T* dst = x.grad().data() + (b * seq + t) * d;
                const T* src = out.grad().data() + b * d;
                for (std::size_t j = 0; j < d; ++j) dst[j] += src[j];
            }
        });
    }
    return out;
}

template <typename T>
struct LstmState {
    Tensor<T> h;
    Tensor<T> c;
};

/// One step of the standard gate equations:
///   f = sig(xW_f + hU_f + b_f), i and o likewise,
///   cand = tanh(xW_c + hU_c + b_c),
///   c' = f*c + i*cand,  h' = o*tanh(c').
template <typename T>
LstmState<T> lstm_step(Tape<T>& tape, const Tensor<T>& x_t, const Tensor<T>& h_prev,
                       const Tensor<T>& c_prev, const LstmParams<T>& p) {
    auto gate_pre = [&](const Tensor<T>& w, const Tensor<T>& u, const Tensor<T>& b) {
        return add_bias_row(tape, add(tape, matmul(tape, x_t, w), matmul(tape, h_prev, u)), b);
    };
    Tensor<T> f = sigmoid(tape, gate_pre(p.w_forget, p.u_forget, p.b_forget));
    Tensor<T> i = sigmoid(tape, gate_pre(p.w_input, p.u_input, p.b_input));
    Tensor<T> o = sigmoid(tape, gate_pre(p.w_output, p.u_output, p.b_output));
    Tensor<T> cand = tanh_op(tape, gate_pre(p.w_cell, p.u_cell, p.b_cell));
    Tensor<T> c_next = add(tape, mul(tape, f, c_prev), mul(tape, i, cand));
    Tensor<T> h_next = mul(tape, o, tanh_op(tape, c_next));
    return {h_next, c_next};
}

/// Folds lstm_step over the time axis from zero initial state and returns
/// the final hidden state (B x h). Reverse-mode replay of the recorded
/// steps is backpropagation through time.
template <typename T>
Tensor<T> lstm_sequence(Tape<T>& tape, const Tensor<T>& x, const LstmParams<T>& p) {
    if (x.rank() != 3) throw std::invalid_argument("lstm_sequence expects B x T x d, got " + shape_str(x.shape()));
    const std::size_t b_count = x.dim(0), steps = x.dim(1);
    if (steps < 1) throw std::invalid_argument("lstm_sequence: empty time axis");
    LstmState<T> state{Tensor<T>::zeros({b_count, p.hidden}), Tensor<T>::zeros({b_count, p.hidden})};
    for (std::size_t t = 0; t < steps; ++t)
        state = lstm_step(tape, select_time(tape, x, t), state.h, state.c, p);
    return state.h;
}

/// Same-padded 1-D convolution over the time axis: B x T x C -> B x T x F.
template <typename T>
Tensor<T> conv1d_same(Tape<T>& tape, const Tensor<T>& x, const Conv1dParams<T>& p) {
    if (x.rank() != 3) throw std::invalid_argument("conv1d_same expects B x T x C, got " + shape_str(x.shape()));
    if (p.width % 2 == 0) throw std::invalid_argument("conv1d_same: kernel width must be odd");
    if (x.dim(2) != p.in_channels)
        throw std::invalid_argument("conv1d_same: input has " + std::to_string(x.dim(2)) +
                                    " channels, kernels expect " + std::to_string(p.in_channels));
    const std::size_t b_count = x.dim(0), steps = x.dim(1), chans = p.in_channels;
    const std::size_t filters = p.filters, width = p.width;
    const std::ptrdiff_t half = static_cast<std::ptrdiff_t>(width / 2);

    bool rg = x.requires_grad() || p.kernels.requires_grad() || p.bias.requires_grad();
    Tensor<T> out = detail::op_output<T>({b_count, steps, filters}, rg);
    {
        const T* xv = x.values().data();
        const T* kv = p.kernels.values().data();
        const T* bv = p.bias.values().data();
        T* ov = out.values().data();
        for (std::size_t b = 0; b < b_count; ++b)
            for (std::size_t t = 0; t < steps; ++t)
                for (std::size_t f = 0; f < filters; ++f) {
                    T acc = bv[f];
                    for (std::size_t j = 0; j < width; ++j) {
                        std::ptrdiff_t tt = static_cast<std::ptrdiff_t>(t + j) - half;
                        if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(steps)) continue;
                        const T* xrow = xv + (b * steps + static_cast<std::size_t>(tt)) * chans;
                        const T* krow = kv + (f * width + j) * chans;
                        for (std::size_t c = 0; c < chans; ++c) acc += xrow[c] * krow[c];
                    }
                    ov[(b * steps + t) * filters + f] = acc;
                }
    }
    if (rg) {
        Tensor<T> kernels = p.kernels, bias = p.bias;
        tape.record([x = x, kernels, bias, out, b_count, steps, chans, filters, width, half]() mutable {
            const T* xv = x.values().data();
            const T* kv = kernels.values().data();
            const T* og = out.grad().data();
            T* xg = x.requires_grad() ? x.grad().data() : nullptr;
            T* kg = kernels.requires_grad() ? kernels.grad().data() : nullptr;
            T* bg = bias.requires_grad() ? bias.grad().data() : nullptr;
            for (std::size_t b = 0; b < b_count; ++b)
                for (std::size_t t = 0; t < steps; ++t)
                    for (std::size_t f = 0; f < filters; ++f) {
                        const T g = og[(b * steps + t) * filters + f];
                        if (bg) bg[f] += g;
                        for (std::size_t j = 0; j < width; ++j) {
                            std::ptrdiff_t tt = static_cast<std::ptrdiff_t>(t + j) - half;
                            if (tt < 0 || tt >= static_cast<std::ptrdiff_t>(steps)) continue;
                            const std::size_t xoff = (b * steps + static_cast<std::size_t>(tt)) * chans;
                            const std::size_t koff = (f * width + j) * chans;
                            if (xg)
                                for (std::size_t c = 0; c < chans; ++c) xg[xoff + c] += g * kv[koff + c];
                            if (kg)
                                for (std::size_t c = 0; c < chans; ++c) kg[koff + c] += g * xv[xoff + c];
                        }
                    }
        });
    }
    return out;
}

/// Windowed max over the time axis, per channel. Gradient flows to the
/// first argmax position of each window.
template <typename T>
Tensor<T> maxpool1d(Tape<T>& tape, const Tensor<T>& x, std::size_t window, std::size_t stride) {
    if (x.rank() != 3) throw std::invalid_argument("maxpool1d expects B x T x F, got " + shape_str(x.shape()));
    if (window < 1 || stride < 1) throw std::invalid_argument("maxpool1d: window and stride must be >= 1");
    const std::size_t b_count = x.dim(0), steps = x.dim(1), filters = x.dim(2);
    if (window > steps)
        throw std::invalid_argument("maxpool1d: window " + std::to_string(window) +
                                    " exceeds time length " + std::to_string(steps));
    const std::size_t out_steps = (steps - window) / stride + 1;

    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>({b_count, out_steps, filters}, rg);
    std::vector<std::uint32_t> argmax(rg ? b_count * out_steps * filters : 0);
    {
        const T* xv = x.values().data();
        T* ov = out.values().data();
        for (std::size_t b = 0; b < b_count; ++b)
            for (std::size_t ot = 0; ot < out_steps; ++ot)
                for (std::size_t f = 0; f < filters; ++f) {
                    const std::size_t base = ot * stride;
                    std::size_t best_t = base;
                    T best = xv[(b * steps + base) * filters + f];
                    for (std::size_t w = 1; w < window; ++w) {
                        T v = xv[(b * steps + base + w) * filters + f];
                        if (v > best) {
                            best = v;
                            best_t = base + w;
                        }
                    }
                    const std::size_t oidx = (b * out_steps + ot) * filters + f;
                    ov[oidx] = best;
                    if (rg) argmax[oidx] = static_cast<std::uint32_t>((b * steps + best_t) * filters + f);
                }
    }
    if (rg) {
        tape.record([x = x, out, argmax = std::move(argmax)]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) x.grad()[argmax[i]] += out.grad()[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> dense(Tape<T>& tape, const Tensor<T>& x, const DenseParams<T>& p) {
    return add_bias_row(tape, matmul(tape, x, p.weight), p.bias);
}

/// Inverted dropout: train mode zeroes entries with probability rate and
/// scales survivors by 1/(1-rate); eval mode is the identity.
template <typename T>
Tensor<T> dropout(Tape<T>& tape, const Tensor<T>& x, T rate, Mode mode, std::mt19937& rng) {
    if (!(rate >= T(0) && rate < T(1))) throw std::invalid_argument("dropout rate must be in [0, 1)");
    if (mode == Mode::eval || rate == T(0)) return x;

    const T keep_scale = T(1) / (T(1) - rate);
    std::vector<T> mask(x.numel());
    for (auto& m : mask) m = (canonical_unit(rng) >= static_cast<double>(rate)) ? keep_scale : T(0);

    bool rg = x.requires_grad();
    Tensor<T> out = detail::op_output<T>(x.shape(), rg);
    for (std::size_t i = 0; i < x.numel(); ++i) out.values()[i] = x.values()[i] * mask[i];
    if (rg) {
        tape.record([x = x, out, mask = std::move(mask)]() mutable {
            for (std::size_t i = 0; i < out.numel(); ++i) x.grad()[i] += out.grad()[i] * mask[i];
        });
    }
    return out;
}

template <typename T>
Tensor<T> apply_activation(Tape<T>& tape, const Tensor<T>& x, Activation act) {
    switch (act) {
        case Activation::relu: return relu(tape, x);
        case Activation::tanh: return tanh_op(tape, x);
        default: return sigmoid(tape, x);
    }
}

// ------------------------------------------------------- classifiers

/// Table-1 stack: embedding, LSTM, FC, hidden activation, dropout, output
/// dense, sigmoid. Returns B x 1 probabilities.
template <typename T>
Tensor<T> forward_lstm_classifier(Tape<T>& tape, const LstmClassifier<T>& m, const Batch& batch,
                                  Mode mode, std::mt19937& rng) {
    Tensor<T> emb = embedding_forward(tape, m.embedding, batch);
    Tensor<T> h_final = lstm_sequence(tape, emb, m.lstm);
    Tensor<T> hidden = apply_activation(tape, dense(tape, h_final, m.fc), m.hidden_activation);
    Tensor<T> dropped = dropout(tape, hidden, m.dropout_rate, mode, rng);
    return sigmoid(tape, dense(tape, dropped, m.out));
}

/// Table-2 stack: embedding, three conv/relu/maxpool stages, flatten,
/// dense+relu, dense, sigmoid. Returns B x 1 probabilities.
template <typename T>
Tensor<T> forward_cnn_classifier(Tape<T>& tape, const CnnClassifier<T>& m, const Batch& batch) {
    Tensor<T> cur = embedding_forward(tape, m.embedding, batch);
    for (std::size_t s = 0; s < m.stages.size(); ++s) {
        const ConvStage<T>& stage = m.stages[s];
        cur = relu(tape, conv1d_same(tape, cur, stage.conv));
        if (stage.pool_window > cur.dim(1))
            throw std::runtime_error("cnn stage " + std::to_string(s + 1) + ": pool window " +
                                     std::to_string(stage.pool_window) +
                                     " collapses time length " + std::to_string(cur.dim(1)));
        cur = maxpool1d(tape, cur, stage.pool_window, stage.pool_stride);
    }
    Tensor<T> flat = reshape(tape, cur, {cur.dim(0), cur.dim(1) * cur.dim(2)});
    Tensor<T> hidden = relu(tape, dense(tape, flat, m.dense1));
    return sigmoid(tape, dense(tape, hidden, m.dense2));
}

template <typename T>
Tensor<T> forward_probabilities(Tape<T>& tape, const LstmClassifier<T>& m, const Batch& batch,
                                Mode mode, std::mt19937& rng) {
    return forward_lstm_classifier(tape, m, batch, mode, rng);
}

template <typename T>
Tensor<T> forward_probabilities(Tape<T>& tape, const CnnClassifier<T>& m, const Batch& batch,
                                Mode /*mode*/, std::mt19937& /*rng*/) {
    return forward_cnn_classifier(tape, m, batch);
}

// -------------------------------------------------- parameter access

template <typename T>
using NamedParams = std::vector<std::pair<std::string, Tensor<T>>>;

template <typename T>
NamedParams<T> named_parameters(const LstmClassifier<T>& m) {
    return {
        {"embedding.table", m.embedding.table},
        {"lstm.w_forget", m.lstm.w_forget}, {"lstm.w_input", m.lstm.w_input},
        {"lstm.w_output", m.lstm.w_output}, {"lstm.w_cell", m.lstm.w_cell},
        {"lstm.u_forget", m.lstm.u_forget}, {"lstm.u_input", m.lstm.u_input},
        {"lstm.u_output", m.lstm.u_output}, {"lstm.u_cell", m.lstm.u_cell},
        {"lstm.b_forget", m.lstm.b_forget}, {"lstm.b_input", m.lstm.b_input},
        {"lstm.b_output", m.lstm.b_output}, {"lstm.b_cell", m.lstm.b_cell},
        {"fc.weight", m.fc.weight}, {"fc.bias", m.fc.bias},
        {"out.weight", m.out.weight}, {"out.bias", m.out.bias},
    };
}

template <typename T>
NamedParams<T> named_parameters(const CnnClassifier<T>& m) {
    NamedParams<T> params{{"embedding.table", m.embedding.table}};
    for (std::size_t s = 0; s < m.stages.size(); ++s) {
        const std::string prefix = "conv" + std::to_string(s + 1);
        params.emplace_back(prefix + ".kernels", m.stages[s].conv.kernels);
        params.emplace_back(prefix + ".bias", m.stages[s].conv.bias);
    }
    params.emplace_back("dense1.weight", m.dense1.weight);
    params.emplace_back("dense1.bias", m.dense1.bias);
    params.emplace_back("dense2.weight", m.dense2.weight);
    params.emplace_back("dense2.bias", m.dense2.bias);
    return params;
}

}  // namespace sentiment
