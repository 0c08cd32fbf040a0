#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <vector>

#include "errors.hpp"
#include "tensor.hpp"

namespace crest {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

/// y = W x + b, W is (out x in).
inline void affine(const Tensor& W, const Tensor& b, std::span<const double> x, std::span<double> y) {
    const std::size_t out = W.rows(), in = W.cols();
    if (x.size() != in || y.size() != out || b.size() != out) throw ContractError("affine: shape mismatch");
    for (std::size_t i = 0; i < out; ++i) {
        const double* w = W.row(i);
        double s = b.data[i];
        for (std::size_t j = 0; j < in; ++j) s += w[j] * x[j];
        y[i] = s;
    }
}

/// dW += dy x^T, db += dy, dx += W^T dy (dx may be empty).
inline void affine_backward(const Tensor& W, std::span<const double> x, std::span<const double> dy, Tensor& dW,
                            Tensor& db, std::span<double> dx) {
    const std::size_t out = W.rows(), in = W.cols();
    for (std::size_t i = 0; i < out; ++i) {
        const double g = dy[i];
        if (g == 0.0) continue;
        db.data[i] += g;
        double* dw = dW.row(i);
        for (std::size_t j = 0; j < in; ++j) dw[j] += g * x[j];
        if (!dx.empty()) {
            const double* w = W.row(i);
            for (std::size_t j = 0; j < in; ++j) dx[j] += g * w[j];
        }
    }
}

// ---------------------------------------------------------------------------
// LSTM. W is (4H x (I+H)) acting on [x; h_prev]; gate rows ordered input, forget, output, candidate.

struct LstmStepCache {
    Vec xh;      // [x; h_prev]
    Vec gates;   // post-activation i, f, o, g
    Vec c_prev;
    Vec tanh_c;
};

struct LstmState {
    Vec h;
    Vec c;

    static LstmState zeros(std::size_t hidden) { return {Vec(hidden, 0.0), Vec(hidden, 0.0)}; }
};

inline LstmState lstm_step(const Tensor& W, const Tensor& b, std::span<const double> x, const LstmState& prev,
                           LstmStepCache* cache = nullptr) {
    const std::size_t H = prev.h.size();
    const std::size_t I = x.size();
    if (W.rows() != 4 * H || W.cols() != I + H) throw ContractError("lstm: input/hidden size does not match weights");
    Vec xh(I + H);
    std::copy(x.begin(), x.end(), xh.begin());
    std::copy(prev.h.begin(), prev.h.end(), xh.begin() + static_cast<std::ptrdiff_t>(I));
    Vec z(4 * H);
    affine(W, b, xh, z);
    for (std::size_t k = 0; k < 3 * H; ++k) z[k] = sigmoid(z[k]);
    for (std::size_t k = 3 * H; k < 4 * H; ++k) z[k] = std::tanh(z[k]);
    LstmState next{Vec(H), Vec(H)};
    Vec tc(H);
    for (std::size_t k = 0; k < H; ++k) {
        next.c[k] = z[H + k] * prev.c[k] + z[k] * z[3 * H + k];
        tc[k] = std::tanh(next.c[k]);
        next.h[k] = z[2 * H + k] * tc[k];
    }
    if (cache) {
        cache->xh = std::move(xh);
        cache->gates = std::move(z);
        cache->c_prev = prev.c;
        cache->tanh_c = std::move(tc);
    }
    return next;
}

/// Backward through one step. dh/dc are gradients w.r.t. this step's outputs; returns
/// gradients w.r.t. (h_prev, c_prev) and accumulates dx, dW, db.
inline LstmState lstm_step_backward(const Tensor& W, const LstmStepCache& cache, std::span<const double> dh,
                                    std::span<const double> dc, Tensor& dW, Tensor& db, std::span<double> dx) {
    const std::size_t H = cache.tanh_c.size();
    const std::size_t I = cache.xh.size() - H;
    const double* g = cache.gates.data();
    Vec dz(4 * H);
    LstmState prev{Vec(H), Vec(H)};
    for (std::size_t k = 0; k < H; ++k) {
        const double i = g[k], f = g[H + k], o = g[2 * H + k], cand = g[3 * H + k];
        const double tc = cache.tanh_c[k];
        const double dct = dc[k] + dh[k] * o * (1.0 - tc * tc);
        dz[k] = dct * cand * i * (1.0 - i);
        dz[H + k] = dct * cache.c_prev[k] * f * (1.0 - f);
        dz[2 * H + k] = dh[k] * tc * o * (1.0 - o);
        dz[3 * H + k] = dct * i * (1.0 - cand * cand);
        prev.c[k] = dct * f;
    }
    Vec dxh(I + H, 0.0);
    affine_backward(W, cache.xh, dz, dW, db, dxh);
    for (std::size_t j = 0; j < I && !dx.empty(); ++j) dx[j] += dxh[j];
    std::copy(dxh.begin() + static_cast<std::ptrdiff_t>(I), dxh.end(), prev.h.begin());
    return prev;
}

struct LstmSequenceCache {
    std::vector<LstmStepCache> steps;
};

/// Runs the LSTM over `inputs` (T rows of width I); returns all hidden states (T x H).
inline Tensor lstm_forward(const Tensor& W, const Tensor& b, const Tensor& inputs, const LstmState& init,
                           LstmSequenceCache* cache = nullptr, LstmState* final_state = nullptr) {
    const std::size_t T = inputs.rows(), I = inputs.cols(), H = init.h.size();
    Tensor hs({T, H});
    LstmState s = init;
    if (cache) cache->steps.assign(T, {});
    for (std::size_t t = 0; t < T; ++t) {
        s = lstm_step(W, b, std::span<const double>(inputs.row(t), I), s, cache ? &cache->steps[t] : nullptr);
        std::copy(s.h.begin(), s.h.end(), hs.row(t));
    }
    if (final_state) *final_state = s;
    return hs;
}

/// dhs is (T x H); returns gradient w.r.t. the initial state, fills dinputs (T x I).
inline LstmState lstm_backward(const Tensor& W, const LstmSequenceCache& cache, const Tensor& dhs, Tensor& dW,
                               Tensor& db, Tensor& dinputs) {
    const std::size_t T = cache.steps.size();
    if (T == 0) throw ContractError("lstm_backward: empty cache");
    const std::size_t H = cache.steps[0].tanh_c.size();
    LstmState carry = LstmState::zeros(H);
    for (std::size_t t = T; t-- > 0;) {
        Vec dh(dhs.row(t), dhs.row(t) + H);
        for (std::size_t k = 0; k < H; ++k) dh[k] += carry.h[k];
        carry = lstm_step_backward(W, cache.steps[t], dh, carry.c, dW, db,
                                   std::span<double>(dinputs.row(t), dinputs.cols()));
    }
    return carry;
}

// ---------------------------------------------------------------------------
// Additive attention: e_j = v . tanh(W h_j + b), alpha = softmax(e), c = sum_j alpha_j h_j.

struct AttentionCache {
    Tensor hs;     // N x H
    Tensor u;      // N x H, tanh activations
    Vec alpha;
};

inline Vec softmax(std::span<const double> e) {
    Vec a(e.size());
    const double m = *std::max_element(e.begin(), e.end());
    double s = 0;
    for (std::size_t j = 0; j < e.size(); ++j) s += (a[j] = std::exp(e[j] - m));
    for (auto& x : a) x /= s;
    return a;
}

inline Vec attention_forward(const Tensor& W, const Tensor& b, const Tensor& v, const Tensor& hs,
                             AttentionCache* cache = nullptr, Vec* weights = nullptr) {
    const std::size_t N = hs.rows(), H = hs.cols();
    if (N == 0) throw ContractError("attention over an empty sequence");
    if (W.rows() != H || W.cols() != H || v.size() != H) throw ContractError("attention: shape mismatch");
    Tensor u({N, H});
    Vec e(N);
    for (std::size_t j = 0; j < N; ++j) {
        std::span<double> uj(u.row(j), H);
        affine(W, b, std::span<const double>(hs.row(j), H), uj);
        double s = 0;
        for (std::size_t k = 0; k < H; ++k) {
            uj[k] = std::tanh(uj[k]);
            s += v.data[k] * uj[k];
        }
        e[j] = s;
    }
    Vec alpha = softmax(e);
    Vec ctx(H, 0.0);
    for (std::size_t j = 0; j < N; ++j)
        for (std::size_t k = 0; k < H; ++k) ctx[k] += alpha[j] * hs(j, k);
    if (weights) *weights = alpha;
    if (cache) {
        cache->hs = hs;
        cache->u = std::move(u);
        cache->alpha = std::move(alpha);
    }
    return ctx;
}

/// Returns d(loss)/d(hs); accumulates dW, db, dv.
inline Tensor attention_backward(const Tensor& W, const Tensor& v, const AttentionCache& cache,
                                 std::span<const double> dctx, Tensor& dW, Tensor& db, Tensor& dv) {
    const std::size_t N = cache.hs.rows(), H = cache.hs.cols();
    Tensor dhs({N, H});
    Vec dalpha(N);
    double weighted = 0;
    for (std::size_t j = 0; j < N; ++j) {
        double s = 0;
        for (std::size_t k = 0; k < H; ++k) {
            dhs(j, k) = cache.alpha[j] * dctx[k];
            s += dctx[k] * cache.hs(j, k);
        }
        dalpha[j] = s;
        weighted += cache.alpha[j] * s;
    }
    Vec dpre(H);
    for (std::size_t j = 0; j < N; ++j) {
        const double de = cache.alpha[j] * (dalpha[j] - weighted);
        if (de == 0.0) continue;
        const double* uj = cache.u.row(j);
        for (std::size_t k = 0; k < H; ++k) {
            dv.data[k] += de * uj[k];
            dpre[k] = de * v.data[k] * (1.0 - uj[k] * uj[k]);
        }
        affine_backward(W, std::span<const double>(cache.hs.row(j), H), dpre, dW, db,
                        std::span<double>(dhs.row(j), H));
    }
    return dhs;
}

// ---------------------------------------------------------------------------
// Dense layer with optional ReLU.

struct DenseCache {
    Vec x;
    Vec y;  // post-activation
};

inline Vec dense_forward(const Tensor& W, const Tensor& b, std::span<const double> x, bool relu,
                         DenseCache* cache = nullptr) {
    Vec y(W.rows());
    affine(W, b, x, y);
    if (relu)
        for (auto& v : y) v = std::max(v, 0.0);
    if (cache) {
        cache->x.assign(x.begin(), x.end());
        cache->y = y;
    }
    return y;
}

/// Returns dx; accumulates dW, db.
inline Vec dense_backward(const Tensor& W, const DenseCache& cache, std::span<const double> dy, bool relu, Tensor& dW,
                          Tensor& db) {
    Vec g(dy.begin(), dy.end());
    if (relu)
        for (std::size_t i = 0; i < g.size(); ++i)
            if (cache.y[i] <= 0.0) g[i] = 0.0;
    Vec dx(W.cols(), 0.0);
    affine_backward(W, cache.x, g, dW, db, dx);
    return dx;
}

}  // namespace crest
