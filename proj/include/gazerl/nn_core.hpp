#pragma once

#include <cassert>

#include "gazerl/common.hpp"

namespace gazerl::nn {

/// Sparse encoding of a batch of input windows for one LSTM stream. The
/// binary map bits of frame (t, b) are stored as active indices; the two
/// gaze coordinates ride along as a dense tail so they can take real values.
/// Windows are appended row by row, so frames are laid out batch-major:
/// slot(t, b) = b * T + t.
template <class Real>
struct EncodedBatch {
    int B = 0;
    int T = 0;
    bool tail_into_lstm = true;         // false: tail recorded but fed to the head instead
    std::vector<std::int32_t> offsets;  // size T*B + 1
    std::vector<std::int32_t> idx;      // active bit indices per frame
    std::vector<Real> tail;             // 2 per frame, always recorded

    void begin(int batch, int steps, bool tail_to_lstm) {
        B = batch;
        T = steps;
        tail_into_lstm = tail_to_lstm;
        offsets.assign(static_cast<std::size_t>(T) * B + 1, 0);
        idx.clear();
        tail.assign(static_cast<std::size_t>(T) * B * 2, Real(0));
    }

    std::size_t slot(int t, int b) const { return static_cast<std::size_t>(b) * T + t; }

    const Real* frame_tail(int t, int b) const { return tail.data() + slot(t, b) * 2; }
};

template <class Real>
inline Real sigmoid(Real x) {
    return Real(1) / (Real(1) + std::exp(-x));
}

/// Activations recorded by the forward pass for truncated BPTT. Hidden and
/// cell states keep an extra leading slot of zeros for t = 0.
template <class Real>
struct LstmTape {
    int B = 0, T = 0, H = 0;
    std::vector<Real> gi, gf, go, gg;  // post-activation gates, T*B*H each
    std::vector<Real> c, h;            // (T+1)*B*H, slot 0 = initial state
    std::vector<Real> tc;              // tanh(c_t), T*B*H
    std::vector<Real> gates_scratch;   // B*4H work area

    void ensure(int batch, int steps, int hidden) {
        B = batch;
        T = steps;
        H = hidden;
        std::size_t n = static_cast<std::size_t>(T) * B * H;
        gi.resize(n);
        gf.resize(n);
        go.resize(n);
        gg.resize(n);
        tc.resize(n);
        c.assign(n + static_cast<std::size_t>(B) * H, Real(0));
        h.assign(n + static_cast<std::size_t>(B) * H, Real(0));
        gates_scratch.resize(static_cast<std::size_t>(B) * 4 * H);
    }

    const Real* final_h() const { return h.data() + static_cast<std::size_t>(T) * B * H; }
};

/// LSTM parameters as raw views into the owning network's flat buffer.
/// w_in is input-major ([in_dim][4H]) so active bits add contiguous columns;
/// w_rec is source-major ([H][4H]). Gate blocks are ordered i, f, o, g.
template <class Real>
struct LstmView {
    const Real* w_in = nullptr;
    const Real* w_rec = nullptr;
    const Real* bias = nullptr;
    int in_dim = 0;
    int H = 0;
};

template <class Real>
struct LstmGradView {
    Real* w_in = nullptr;
    Real* w_rec = nullptr;
    Real* bias = nullptr;
};

template <class Real>
inline void lstm_forward(const LstmView<Real>& p, const EncodedBatch<Real>& x,
                         LstmTape<Real>& tape) {
    const int B = x.B, T = x.T, H = p.H, G4 = 4 * p.H;
    assert(!x.tail_into_lstm || p.in_dim >= 2);
    const int flat = p.in_dim - (x.tail_into_lstm ? 2 : 0);
    tape.ensure(B, T, H);
    Real* gates = tape.gates_scratch.data();

    for (int t = 0; t < T; ++t) {
        const std::size_t base = static_cast<std::size_t>(t) * B * H;
        const Real* h_prev = tape.h.data() + base;  // slot t
        const Real* c_prev = tape.c.data() + base;
        Real* h_out = tape.h.data() + base + static_cast<std::size_t>(B) * H;
        Real* c_out = tape.c.data() + base + static_cast<std::size_t>(B) * H;

        for (int b = 0; b < B; ++b) {
            Real* g = gates + static_cast<std::size_t>(b) * G4;
            for (int j = 0; j < G4; ++j) g[j] = p.bias[j];

            const std::size_t slot = x.slot(t, b);
            for (std::int32_t k = x.offsets[slot]; k < x.offsets[slot + 1]; ++k) {
                const Real* col = p.w_in + static_cast<std::size_t>(x.idx[k]) * G4;
                for (int j = 0; j < G4; ++j) g[j] += col[j];
            }
            if (x.tail_into_lstm) {
                const Real tu = x.tail[slot * 2], tv = x.tail[slot * 2 + 1];
                const Real* cu = p.w_in + static_cast<std::size_t>(flat) * G4;
                const Real* cv = cu + G4;
                for (int j = 0; j < G4; ++j) g[j] += tu * cu[j] + tv * cv[j];
            }
            const Real* hp = h_prev + static_cast<std::size_t>(b) * H;
            for (int k = 0; k < H; ++k) {
                const Real hk = hp[k];
                if (hk == Real(0)) continue;
                const Real* u = p.w_rec + static_cast<std::size_t>(k) * G4;
                for (int j = 0; j < G4; ++j) g[j] += hk * u[j];
            }

            const std::size_t cell = base + static_cast<std::size_t>(b) * H;
            const Real* cp = c_prev + static_cast<std::size_t>(b) * H;
            for (int u = 0; u < H; ++u) {
                const Real i_ = sigmoid(g[u]);
                const Real f_ = sigmoid(g[H + u]);
                const Real o_ = sigmoid(g[2 * H + u]);
                const Real g_ = std::tanh(g[3 * H + u]);
                const Real c_ = f_ * cp[u] + i_ * g_;
                const Real tc_ = std::tanh(c_);
                tape.gi[cell + u] = i_;
                tape.gf[cell + u] = f_;
                tape.go[cell + u] = o_;
                tape.gg[cell + u] = g_;
                tape.tc[cell + u] = tc_;
                c_out[static_cast<std::size_t>(b) * H + u] = c_;
                h_out[static_cast<std::size_t>(b) * H + u] = o_ * tc_;
            }
        }
    }
}

/// Backpropagation through time. `dh_final` is the loss gradient w.r.t. the
/// last hidden state (B*H); gradients accumulate into `g`.
template <class Real>
inline void lstm_backward(const LstmView<Real>& p, const EncodedBatch<Real>& x,
                          const LstmTape<Real>& tape, const Real* dh_final,
                          const LstmGradView<Real>& g) {
    const int B = x.B, T = x.T, H = p.H, G4 = 4 * p.H;
    const int flat = p.in_dim - (x.tail_into_lstm ? 2 : 0);

    std::vector<Real> dh(dh_final, dh_final + static_cast<std::size_t>(B) * H);
    std::vector<Real> dc(static_cast<std::size_t>(B) * H, Real(0));
    std::vector<Real> dg(static_cast<std::size_t>(G4), Real(0));

    for (int t = T - 1; t >= 0; --t) {
        const std::size_t base = static_cast<std::size_t>(t) * B * H;
        const Real* h_prev = tape.h.data() + base;
        const Real* c_prev = tape.c.data() + base;

        for (int b = 0; b < B; ++b) {
            const std::size_t cell = base + static_cast<std::size_t>(b) * H;
            Real* dhb = dh.data() + static_cast<std::size_t>(b) * H;
            Real* dcb = dc.data() + static_cast<std::size_t>(b) * H;
            const Real* cpb = c_prev + static_cast<std::size_t>(b) * H;

            for (int u = 0; u < H; ++u) {
                const Real i_ = tape.gi[cell + u];
                const Real f_ = tape.gf[cell + u];
                const Real o_ = tape.go[cell + u];
                const Real g_ = tape.gg[cell + u];
                const Real tc_ = tape.tc[cell + u];
                const Real dh_u = dhb[u];
                Real dc_u = dcb[u] + dh_u * o_ * (Real(1) - tc_ * tc_);
                const Real do_ = dh_u * tc_;
                const Real di_ = dc_u * g_;
                const Real dgg_ = dc_u * i_;
                const Real df_ = dc_u * cpb[u];
                dcb[u] = dc_u * f_;  // becomes dc for t-1
                dg[u] = di_ * i_ * (Real(1) - i_);
                dg[H + u] = df_ * f_ * (Real(1) - f_);
                dg[2 * H + u] = do_ * o_ * (Real(1) - o_);
                dg[3 * H + u] = dgg_ * (Real(1) - g_ * g_);
            }

            for (int j = 0; j < G4; ++j) g.bias[j] += dg[j];

            const std::size_t slot = x.slot(t, b);
            for (std::int32_t k = x.offsets[slot]; k < x.offsets[slot + 1]; ++k) {
                Real* col = g.w_in + static_cast<std::size_t>(x.idx[k]) * G4;
                for (int j = 0; j < G4; ++j) col[j] += dg[j];
            }
            if (x.tail_into_lstm) {
                const Real tu = x.tail[slot * 2], tv = x.tail[slot * 2 + 1];
                Real* cu = g.w_in + static_cast<std::size_t>(flat) * G4;
                Real* cv = cu + G4;
                for (int j = 0; j < G4; ++j) {
                    cu[j] += tu * dg[j];
                    cv[j] += tv * dg[j];
                }
            }

            const Real* hpb = h_prev + static_cast<std::size_t>(b) * H;
            for (int k = 0; k < H; ++k) {
                const Real hk = hpb[k];
                if (hk != Real(0)) {
                    Real* u = g.w_rec + static_cast<std::size_t>(k) * G4;
                    for (int j = 0; j < G4; ++j) u[j] += hk * dg[j];
                }
            }
            // dh for t-1: incoming only through the recurrent weights.
            for (int k = 0; k < H; ++k) {
                const Real* u = p.w_rec + static_cast<std::size_t>(k) * G4;
                Real acc = Real(0);
                for (int j = 0; j < G4; ++j) acc += u[j] * dg[j];
                dhb[k] = acc;
            }
        }
    }
}

/// Batch normalization over features. Every pass normalizes with the running
/// (EMA) estimates; training passes first fold the current batch statistics
/// into those estimates. Normalizing with the shared estimates instead of the
/// instantaneous batch statistics keeps the network one and the same function
/// during updates, target evaluation and greedy action selection — with
/// per-batch statistics the learned action ranking is only valid inside a
/// training batch and washes out at act time, where batches of one are the
/// rule. Gradients treat the estimates as constants.
template <class Real>
struct BnTape {
    int B = 0, W = 0;
    std::vector<Real> xhat;    // B*W, normalized inputs
    std::vector<Real> invstd;  // W
};

constexpr double kBnEps = 1e-3;

/// Folds the batch mean and unbiased variance into the running estimates.
template <class Real>
inline void bn_update_running(const Real* x, int B, int W, Real* running_mean,
                              Real* running_var, double momentum) {
    // The unbiased variance needs at least two samples.
    if (B < 2) throw std::invalid_argument("bn_update_running: batch size must be >= 2");
    for (int w = 0; w < W; ++w) {
        Real mean = 0;
        for (int b = 0; b < B; ++b) mean += x[static_cast<std::size_t>(b) * W + w];
        mean /= Real(B);
        Real var = 0;
        for (int b = 0; b < B; ++b) {
            const Real d = x[static_cast<std::size_t>(b) * W + w] - mean;
            var += d * d;
        }
        var /= Real(B - 1);
        running_mean[w] = Real(momentum) * running_mean[w] + Real(1 - momentum) * mean;
        running_var[w] = Real(momentum) * running_var[w] + Real(1 - momentum) * var;
    }
}

/// Normalizes with the running estimates and records the tape for backward.
template <class Real>
inline void bn_forward_norm(const Real* gamma, const Real* beta, const Real* running_mean,
                            const Real* running_var, const Real* x, int B, int W, Real* y,
                            BnTape<Real>& tape) {
    tape.B = B;
    tape.W = W;
    tape.xhat.resize(static_cast<std::size_t>(B) * W);
    tape.invstd.resize(W);
    for (int w = 0; w < W; ++w) {
        const Real inv = Real(1) / std::sqrt(running_var[w] + Real(kBnEps));
        tape.invstd[w] = inv;
        for (int b = 0; b < B; ++b) {
            const std::size_t k = static_cast<std::size_t>(b) * W + w;
            tape.xhat[k] = (x[k] - running_mean[w]) * inv;
            y[k] = gamma[w] * tape.xhat[k] + beta[w];
        }
    }
}

/// Tape-free variant for callers that only need outputs. Evaluates in the
/// same association order as bn_forward_norm so both paths agree bitwise.
template <class Real>
inline void bn_forward_eval(const Real* gamma, const Real* beta, const Real* running_mean,
                            const Real* running_var, const Real* x, int B, int W, Real* y) {
    for (int w = 0; w < W; ++w) {
        const Real inv = Real(1) / std::sqrt(running_var[w] + Real(kBnEps));
        for (int b = 0; b < B; ++b) {
            const std::size_t k = static_cast<std::size_t>(b) * W + w;
            const Real xh = (x[k] - running_mean[w]) * inv;
            y[k] = gamma[w] * xh + beta[w];
        }
    }
}

/// Gradient through the normalization; the running estimates are constants.
template <class Real>
inline void bn_backward(const Real* gamma, const BnTape<Real>& tape, const Real* dy, Real* dx,
                        Real* dgamma, Real* dbeta) {
    const int B = tape.B, W = tape.W;
    for (int w = 0; w < W; ++w) {
        Real sum_dy = 0, sum_dy_xhat = 0;
        for (int b = 0; b < B; ++b) {
            const std::size_t k = static_cast<std::size_t>(b) * W + w;
            sum_dy += dy[k];
            sum_dy_xhat += dy[k] * tape.xhat[k];
        }
        dgamma[w] += sum_dy_xhat;
        dbeta[w] += sum_dy;
        const Real scale = gamma[w] * tape.invstd[w];
        for (int b = 0; b < B; ++b) {
            const std::size_t k = static_cast<std::size_t>(b) * W + w;
            dx[k] = scale * dy[k];
        }
    }
}

/// Dense head: q = W x + b with W stored row-major [out][in].
template <class Real>
inline void linear_forward(const Real* w, const Real* bias, const Real* x, int B, int in_dim,
                           int out_dim, Real* y) {
    for (int b = 0; b < B; ++b) {
        const Real* xb = x + static_cast<std::size_t>(b) * in_dim;
        Real* yb = y + static_cast<std::size_t>(b) * out_dim;
        for (int o = 0; o < out_dim; ++o) {
            const Real* row = w + static_cast<std::size_t>(o) * in_dim;
            Real acc = bias[o];
            for (int i = 0; i < in_dim; ++i) acc += row[i] * xb[i];
            yb[o] = acc;
        }
    }
}

template <class Real>
inline void linear_backward(const Real* w, const Real* x, const Real* dy, int B, int in_dim,
                            int out_dim, Real* dx, Real* dw, Real* dbias) {
    for (int b = 0; b < B; ++b) {
        const Real* xb = x + static_cast<std::size_t>(b) * in_dim;
        const Real* dyb = dy + static_cast<std::size_t>(b) * out_dim;
        Real* dxb = dx + static_cast<std::size_t>(b) * in_dim;
        for (int i = 0; i < in_dim; ++i) dxb[i] = 0;
        for (int o = 0; o < out_dim; ++o) {
            const Real d = dyb[o];
            dbias[o] += d;
            const Real* row = w + static_cast<std::size_t>(o) * in_dim;
            Real* drow = dw + static_cast<std::size_t>(o) * in_dim;
            for (int i = 0; i < in_dim; ++i) {
                drow[i] += d * xb[i];
                dxb[i] += d * row[i];
            }
        }
    }
}

}  // namespace gazerl::nn
