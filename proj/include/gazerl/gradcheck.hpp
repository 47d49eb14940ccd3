#pragma once

#include <memory>

#include "gazerl/qnet.hpp"

namespace gazerl::nn {

struct GradCheckReport {
    double max_rel_err = 0.0;
    std::size_t worst_index = 0;
    double analytic = 0.0;
    double numeric = 0.0;
    std::size_t n_params = 0;
};

namespace detail {

inline std::shared_ptr<const Observation> random_frame(int vis_flat, int aud_flat, Rng& rng) {
    auto o = std::make_shared<Observation>();
    o->visual = BitGrid(vis_flat);
    o->audio = BitGrid(aud_flat);
    o->theta_norm = {uniform01(rng), uniform01(rng)};
    const double pv = 8.0 / vis_flat;
    for (int i = 0; i < vis_flat; ++i)
        if (uniform01(rng) < pv) o->visual.set(i);
    for (int i = 0; i < aud_flat; ++i)
        if (uniform01(rng) < 0.2) o->audio.set(i);
    return o;
}

}  // namespace detail

/// Compares analytic gradients of the masked TD loss against central finite
/// differences on a small double-precision network with random sparse inputs.
/// Relative error uses max(1, |analytic|, |numeric|) in the denominator so
/// near-zero gradients do not blow up the ratio.
inline GradCheckReport gradcheck(Arch arch, std::uint64_t seed, bool motor_skip = false,
                                 double fd_step = 1e-5) {
    NetSpec spec;
    spec.arch = arch;
    spec.vis_flat = 3 * 3 * kNumJoints;
    spec.aud_flat = 3 * 3;
    spec.hidden = 8;
    spec.window = 4;
    spec.motor_skip_only = motor_skip;

    const int B = 3;
    QNet<double> net(spec);
    net.init_weights(seed);
    // Running stats never feed a training-mode forward, but perturb them away
    // from the defaults anyway so an accidental eval-path read would show up.
    Rng rng(derive_seed(seed, "gradcheck"));
    for (auto& x : net.bn_running_mean) x = uniform_in(rng, -0.5, 0.5);
    for (auto& x : net.bn_running_var) x = uniform_in(rng, 0.5, 2.0);

    std::vector<EncodedBatch<double>> streams;
    begin_encode(spec, B, streams);
    for (int b = 0; b < B; ++b) {
        std::vector<std::shared_ptr<const Observation>> window;
        for (int t = 0; t < spec.window; ++t)
            window.push_back(detail::random_frame(spec.vis_flat, spec.aud_flat, rng));
        encode_window(spec, window, b, streams);
    }

    std::vector<int> actions(B);
    std::vector<double> targets(B);
    for (int b = 0; b < B; ++b) {
        actions[b] = uniform_int(rng, 0, kNumActions - 1);
        targets[b] = gaussian(rng, 0.0, 1.0);
    }

    QTape<double> tape;
    std::vector<double> q(static_cast<std::size_t>(B) * kNumActions);
    auto loss_fn = [&]() {
        qnet_forward(net, streams, tape, Mode::Train, 0.9, /*update_running=*/false, q.data());
        double loss = 0.0;
        for (int b = 0; b < B; ++b) {
            const double d = q[static_cast<std::size_t>(b) * kNumActions + actions[b]] - targets[b];
            loss += d * d;
        }
        return loss / B;
    };

    loss_fn();
    std::vector<double> dq(static_cast<std::size_t>(B) * kNumActions, 0.0);
    for (int b = 0; b < B; ++b) {
        const std::size_t k = static_cast<std::size_t>(b) * kNumActions + actions[b];
        dq[k] = 2.0 * (q[k] - targets[b]) / B;
    }
    std::vector<double> grads(net.layout.total, 0.0);
    qnet_backward(net, streams, tape, dq.data(), grads);

    GradCheckReport rep;
    rep.n_params = net.layout.total;
    for (std::size_t i = 0; i < net.layout.total; ++i) {
        const double saved = net.params[i];
        net.params[i] = saved + fd_step;
        const double lp = loss_fn();
        net.params[i] = saved - fd_step;
        const double lm = loss_fn();
        net.params[i] = saved;
        const double fd = (lp - lm) / (2.0 * fd_step);
        const double rel = std::abs(grads[i] - fd) / std::max({1.0, std::abs(grads[i]), std::abs(fd)});
        if (rel > rep.max_rel_err) {
            rep.max_rel_err = rel;
            rep.worst_index = i;
            rep.analytic = grads[i];
            rep.numeric = fd;
        }
    }
    return rep;
}

}  // namespace gazerl::nn
