#pragma once

#include <json.hpp>

#include "gazerl/nn_core.hpp"
#include "gazerl/observation.hpp"

namespace gazerl::nn {

/// The four fusion layouts. Every variant runs its input streams through
/// LSTMs, batch-normalizes the (concatenated) final hidden state, and maps it
/// to one value per action with a dense head.
enum class Arch {
    EF,   // early fusion: visual + audio + gaze into one LSTM
    LF,   // late fusion: a visual and an audio LSTM, hidden states concatenated
    Aud,  // audio + gaze only
    Vis,  // visual + gaze only
};

inline const char* arch_name(Arch a) {
    switch (a) {
        case Arch::EF: return "efnet";
        case Arch::LF: return "lfnet";
        case Arch::Aud: return "audnet";
        case Arch::Vis: return "visnet";
    }
    return "?";
}

inline Arch arch_from_name(const std::string& s) {
    if (s == "efnet") return Arch::EF;
    if (s == "lfnet") return Arch::LF;
    if (s == "audnet") return Arch::Aud;
    if (s == "visnet") return Arch::Vis;
    throw std::invalid_argument("unknown arch: " + s + " (want efnet|lfnet|audnet|visnet)");
}

struct NetSpec {
    Arch arch = Arch::LF;
    int vis_flat = 7 * 5 * kNumJoints;
    int aud_flat = 7 * 5;
    int hidden = 30;
    int window = 5;  // frames per state
    // When set, the gaze coordinates skip the LSTMs and join the head input
    // instead of being appended to every frame.
    bool motor_skip_only = false;

    int n_streams() const { return arch == Arch::LF ? 2 : 1; }

    int stream_flat(int k) const {
        switch (arch) {
            case Arch::EF: return vis_flat + aud_flat;
            case Arch::LF: return k == 0 ? vis_flat : aud_flat;
            case Arch::Aud: return aud_flat;
            case Arch::Vis: return vis_flat;
        }
        return 0;
    }
    bool stream_has_visual(int k) const { return arch != Arch::Aud && k == 0; }
    bool stream_has_audio(int k) const {
        return arch == Arch::Aud || arch == Arch::EF || (arch == Arch::LF && k == 1);
    }
    /// Offset of audio bits inside the stream's index space.
    int stream_audio_base(int) const { return arch == Arch::EF ? vis_flat : 0; }

    int stream_in(int k) const { return stream_flat(k) + (motor_skip_only ? 0 : 2); }
    int bn_width() const { return hidden * n_streams(); }
    int head_in() const { return bn_width() + (motor_skip_only ? 2 : 0); }

    bool operator==(const NetSpec&) const = default;
};

/// Offsets of every tensor inside the flat parameter vector.
struct ParamLayout {
    std::size_t w_in[2] = {0, 0}, w_rec[2] = {0, 0}, bias[2] = {0, 0};
    std::size_t bn_gamma = 0, bn_beta = 0;
    std::size_t head_w = 0, head_b = 0;
    std::size_t total = 0;

    static ParamLayout build(const NetSpec& s) {
        ParamLayout L;
        std::size_t at = 0;
        const std::size_t g4 = 4 * static_cast<std::size_t>(s.hidden);
        for (int k = 0; k < s.n_streams(); ++k) {
            L.w_in[k] = at;
            at += static_cast<std::size_t>(s.stream_in(k)) * g4;
            L.w_rec[k] = at;
            at += static_cast<std::size_t>(s.hidden) * g4;
            L.bias[k] = at;
            at += g4;
        }
        L.bn_gamma = at;
        at += s.bn_width();
        L.bn_beta = at;
        at += s.bn_width();
        L.head_w = at;
        at += static_cast<std::size_t>(kNumActions) * s.head_in();
        L.head_b = at;
        at += kNumActions;
        L.total = at;
        return L;
    }
};

/// Scratch buffers recorded by a forward pass; reusable across steps.
template <class Real>
struct QTape {
    LstmTape<Real> lstm[2];
    BnTape<Real> bn;
    std::vector<Real> bn_in, bn_out, head_in;
    std::vector<Real> d_bn_in, d_bn_out, d_head_in;
    int B = 0;
};

template <class Real>
struct QNet {
    NetSpec spec;
    ParamLayout layout;
    std::vector<Real> params;
    std::vector<Real> bn_running_mean, bn_running_var;

    explicit QNet(const NetSpec& s = {}) : spec(s) { allocate(); }

    void allocate() {
        layout = ParamLayout::build(spec);
        params.assign(layout.total, Real(0));
        bn_running_mean.assign(spec.bn_width(), Real(0));
        bn_running_var.assign(spec.bn_width(), Real(1));
    }

    LstmView<Real> lstm_view(int k) const {
        return {params.data() + layout.w_in[k], params.data() + layout.w_rec[k],
                params.data() + layout.bias[k], spec.stream_in(k), spec.hidden};
    }

    /// Uniform fan-in init; forget-gate biases start at 1 so memory is open,
    /// batch norm starts as the identity transform.
    void init_weights(std::uint64_t seed) {
        Rng rng(derive_seed(seed, "net-init"));
        auto fill_uniform = [&](std::size_t at, std::size_t n, double bound) {
            for (std::size_t i = 0; i < n; ++i)
                params[at + i] = Real(uniform_in(rng, -bound, bound));
        };
        const std::size_t g4 = 4 * static_cast<std::size_t>(spec.hidden);
        for (int k = 0; k < spec.n_streams(); ++k) {
            fill_uniform(layout.w_in[k], static_cast<std::size_t>(spec.stream_in(k)) * g4,
                         1.0 / std::sqrt(static_cast<double>(spec.stream_in(k))));
            fill_uniform(layout.w_rec[k], static_cast<std::size_t>(spec.hidden) * g4,
                         1.0 / std::sqrt(static_cast<double>(spec.hidden)));
            for (int j = 0; j < spec.hidden; ++j)
                params[layout.bias[k] + spec.hidden + j] = Real(1);
        }
        for (int w = 0; w < spec.bn_width(); ++w) params[layout.bn_gamma + w] = Real(1);
        fill_uniform(layout.head_w, static_cast<std::size_t>(kNumActions) * spec.head_in(),
                     1.0 / std::sqrt(static_cast<double>(spec.head_in())));
        std::fill(bn_running_mean.begin(), bn_running_mean.end(), Real(0));
        std::fill(bn_running_var.begin(), bn_running_var.end(), Real(1));
    }
};

/// Appends one window of observations to the per-stream encoded batches.
/// Windows are oldest-first vectors of `spec.window` frames; `slot_b` is the
/// batch row to fill. `begin_encode` must size the batches first.
template <class Real>
inline void begin_encode(const NetSpec& spec, int B, std::vector<EncodedBatch<Real>>& streams) {
    streams.resize(spec.n_streams());
    for (int k = 0; k < spec.n_streams(); ++k)
        streams[k].begin(B, spec.window, !spec.motor_skip_only);
}

/// Rows must be filled in increasing `slot_b` order so the index array stays
/// contiguous with the batch-major slot layout.
template <class Real, class WindowT>
inline void encode_window(const NetSpec& spec, const WindowT& window, int slot_b,
                          std::vector<EncodedBatch<Real>>& streams) {
    assert(static_cast<int>(window.size()) == spec.window);
    for (int k = 0; k < spec.n_streams(); ++k) {
        EncodedBatch<Real>& eb = streams[k];
        for (int t = 0; t < spec.window; ++t) {
            const Observation& o = *window[t];
            const std::size_t slot = eb.slot(t, slot_b);
            assert(eb.offsets[slot] == static_cast<std::int32_t>(eb.idx.size()));
            std::int32_t end = eb.offsets[slot];
            if (spec.stream_has_visual(k)) {
                o.visual.for_each_set([&](int i) {
                    eb.idx.push_back(i);
                    ++end;
                });
            }
            if (spec.stream_has_audio(k)) {
                const int base = spec.stream_audio_base(k);
                o.audio.for_each_set([&](int i) {
                    eb.idx.push_back(base + i);
                    ++end;
                });
            }
            eb.offsets[slot + 1] = end;
            eb.tail[slot * 2] = Real(o.theta_norm[0]);
            eb.tail[slot * 2 + 1] = Real(o.theta_norm[1]);
        }
    }
}

enum class Mode { Train, Eval };

/// Full forward pass over a batch of encoded windows. Writes q values
/// (B x kNumActions). Normalization always uses the running estimates; a
/// training pass with `update_running` folds this batch's statistics into
/// them first, so the estimates stay current without ever making the output
/// depend on who else shares the batch.
template <class Real>
inline void qnet_forward(QNet<Real>& net, const std::vector<EncodedBatch<Real>>& streams,
                         QTape<Real>& tape, Mode mode, double bn_momentum, bool update_running,
                         Real* q_out) {
    const NetSpec& s = net.spec;
    const int B = streams[0].B;
    const int H = s.hidden, W = s.bn_width();
    tape.B = B;
    tape.bn_in.resize(static_cast<std::size_t>(B) * W);
    tape.bn_out.resize(static_cast<std::size_t>(B) * W);
    tape.head_in.resize(static_cast<std::size_t>(B) * s.head_in());

    for (int k = 0; k < s.n_streams(); ++k) {
        lstm_forward(net.lstm_view(k), streams[k], tape.lstm[k]);
        const Real* hk = tape.lstm[k].final_h();
        for (int b = 0; b < B; ++b) {
            Real* dst = tape.bn_in.data() + static_cast<std::size_t>(b) * W + k * H;
            const Real* src = hk + static_cast<std::size_t>(b) * H;
            std::copy(src, src + H, dst);
        }
    }

    const Real* gamma = net.params.data() + net.layout.bn_gamma;
    const Real* beta = net.params.data() + net.layout.bn_beta;
    if (mode == Mode::Train && update_running) {
        bn_update_running(tape.bn_in.data(), B, W, net.bn_running_mean.data(),
                          net.bn_running_var.data(), bn_momentum);
    }
    bn_forward_norm(gamma, beta, net.bn_running_mean.data(), net.bn_running_var.data(),
                    tape.bn_in.data(), B, W, tape.bn_out.data(), tape.bn);

    if (s.motor_skip_only) {
        const EncodedBatch<Real>& eb0 = streams[0];
        for (int b = 0; b < B; ++b) {
            Real* dst = tape.head_in.data() + static_cast<std::size_t>(b) * s.head_in();
            std::copy(tape.bn_out.data() + static_cast<std::size_t>(b) * W,
                      tape.bn_out.data() + static_cast<std::size_t>(b) * W + W, dst);
            // Gaze of the newest frame joins the head input directly.
            const Real* th = eb0.frame_tail(s.window - 1, b);
            dst[W] = th[0];
            dst[W + 1] = th[1];
        }
    } else {
        std::copy(tape.bn_out.begin(), tape.bn_out.end(), tape.head_in.begin());
    }

    linear_forward(net.params.data() + net.layout.head_w, net.params.data() + net.layout.head_b,
                   tape.head_in.data(), B, s.head_in(), kNumActions, q_out);
}

/// Backward pass matching a training-mode forward; accumulates into `grads`
/// (a flat vector shaped like `net.params`, caller zeroes it).
template <class Real>
inline void qnet_backward(QNet<Real>& net, const std::vector<EncodedBatch<Real>>& streams,
                          QTape<Real>& tape, const Real* dq, std::vector<Real>& grads) {
    const NetSpec& s = net.spec;
    const int B = tape.B;
    const int H = s.hidden, W = s.bn_width();
    tape.d_head_in.resize(static_cast<std::size_t>(B) * s.head_in());
    tape.d_bn_out.resize(static_cast<std::size_t>(B) * W);
    tape.d_bn_in.resize(static_cast<std::size_t>(B) * W);

    linear_backward(net.params.data() + net.layout.head_w, tape.head_in.data(), dq, B,
                    s.head_in(), kNumActions, tape.d_head_in.data(),
                    grads.data() + net.layout.head_w, grads.data() + net.layout.head_b);

    if (s.motor_skip_only) {
        for (int b = 0; b < B; ++b) {
            std::copy(tape.d_head_in.data() + static_cast<std::size_t>(b) * s.head_in(),
                      tape.d_head_in.data() + static_cast<std::size_t>(b) * s.head_in() + W,
                      tape.d_bn_out.data() + static_cast<std::size_t>(b) * W);
        }
    } else {
        std::copy(tape.d_head_in.begin(), tape.d_head_in.end(), tape.d_bn_out.begin());
    }

    bn_backward(net.params.data() + net.layout.bn_gamma, tape.bn, tape.d_bn_out.data(),
                tape.d_bn_in.data(), grads.data() + net.layout.bn_gamma,
                grads.data() + net.layout.bn_beta);

    std::vector<Real> dh(static_cast<std::size_t>(B) * H);
    for (int k = 0; k < s.n_streams(); ++k) {
        for (int b = 0; b < B; ++b) {
            const Real* src = tape.d_bn_in.data() + static_cast<std::size_t>(b) * W + k * H;
            std::copy(src, src + H, dh.data() + static_cast<std::size_t>(b) * H);
        }
        LstmGradView<Real> gv{grads.data() + net.layout.w_in[k],
                              grads.data() + net.layout.w_rec[k],
                              grads.data() + net.layout.bias[k]};
        lstm_backward(net.lstm_view(k), streams[k], tape.lstm[k], dh.data(), gv);
    }
}

}  // namespace gazerl::nn
