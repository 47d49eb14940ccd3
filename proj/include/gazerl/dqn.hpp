#pragma once

#include <chrono>
#include <cstdio>
#include <limits>
#include <memory>
#include <ostream>

#include "gazerl/adam.hpp"
#include "gazerl/eval.hpp"
#include "gazerl/observation.hpp"
#include "gazerl/qnet.hpp"

namespace gazerl {

using ObsPtr = std::shared_ptr<const Observation>;
using Window = std::vector<ObsPtr>;

struct TrainConfig {
    double gamma = 0.90;
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;
    int batch_size = 128;
    int total_steps = 150000;
    double eps_start = 0.9;
    double eps_end = 0.1;
    int eps_decay_steps = 120000;
    int replay_capacity = 100000;
    int warmup = 128;       // stored transitions required before updates start
    int target_sync = 1000; // environment steps between target refreshes
    int window_len = 5;     // frames per state (transition gap + 1)
    int lstm_hidden = 30;
    double bn_momentum = 0.99;
    double grad_clip = 10.0; // global L2 cap on the gradient, <= 0 disables
    double alpha = 1.0;     // speaker bonus weight in the reward
    bool motor_skip_only = false;
    int score_window = 10000;  // trailing steps averaged into the run score
};

inline double epsilon_at(const TrainConfig& c, long long step) {
    if (c.eps_decay_steps <= 0) return c.eps_end;
    const double f = std::min(1.0, static_cast<double>(step) / c.eps_decay_steps);
    return c.eps_start + (c.eps_end - c.eps_start) * f;
}

/// Bellman backup value for one transition. Terminal transitions do not
/// bootstrap: the target is the plain reward.
inline double td_target(double reward, bool terminal, double gamma, double max_next_q) {
    return terminal ? reward : reward + gamma * max_next_q;
}

/// Epsilon-greedy over q values; greedy ties resolve to the lowest index.
template <class Real>
inline int select_action(const Real* q, double eps, Rng& rng) {
    if (uniform01(rng) < eps) return uniform_int(rng, 0, kNumActions - 1);
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

struct ReplayEntry {
    Window state;
    int action = 0;
    float reward = 0.0f;
    bool terminal = false;
    Window next;
};

/// Fixed-capacity FIFO ring sampled uniformly with replacement.
class ReplayBuffer {
  public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        ring_.reserve(capacity);
    }

    void push(ReplayEntry e) {
        if (e.state.size() != e.next.size())
            throw std::logic_error("replay: window length mismatch");
        for (std::size_t i = 0; i + 1 < e.state.size(); ++i) {
            if (e.state[i + 1].get() != e.next[i].get())
                throw std::logic_error("replay: next window is not the state shifted by one");
        }
        if (ring_.size() < capacity_) {
            ring_.push_back(std::move(e));
        } else {
            ring_[head_] = std::move(e);
            head_ = (head_ + 1) % capacity_;
        }
    }

    std::size_t size() const { return ring_.size(); }
    const ReplayEntry& at(std::size_t i) const { return ring_[i]; }

  private:
    std::size_t capacity_;
    std::size_t head_ = 0;  // oldest entry once full
    std::vector<ReplayEntry> ring_;
};

struct MetricsRow {
    long long step;
    int episode;
    float reward;
    float loss;  // NaN while the buffer is still warming up
    float epsilon;
};

struct TrainResult {
    double final_score = 0.0;   // mean reward over the trailing score window
    double early_score = 0.0;   // mean reward over the leading score window
    double wall_seconds = 0.0;
    long long updates = 0;
    int episodes = 0;
    std::vector<MetricsRow> rows;
};

namespace detail {

template <class Real>
inline void assert_finite(double loss, const std::vector<Real>& grads, long long step) {
    if (!std::isfinite(loss))
        throw std::runtime_error("training diverged: non-finite loss at step " +
                                 std::to_string(step));
    for (Real g : grads) {
        if (!std::isfinite(static_cast<double>(g)))
            throw std::runtime_error("training diverged: non-finite gradient at step " +
                                     std::to_string(step));
    }
}

}  // namespace detail

/// One gradient step on a uniformly sampled batch: targets come from the
/// frozen snapshot in eval mode, the online net runs in training mode, and
/// the squared error is taken only on the replayed action of each row.
template <class Real>
inline double dqn_train_step(nn::QNet<Real>& net, nn::QNet<Real>& target,
                             const ReplayBuffer& buf, const TrainConfig& cfg,
                             nn::Adam<Real>& opt, Rng& rng,
                             std::vector<nn::EncodedBatch<Real>>& enc_state,
                             std::vector<nn::EncodedBatch<Real>>& enc_next,
                             nn::QTape<Real>& tape, nn::QTape<Real>& target_tape,
                             std::vector<Real>& grads, long long step) {
    const int B = cfg.batch_size;
    std::vector<std::size_t> picks(B);
    for (int b = 0; b < B; ++b)
        picks[b] = static_cast<std::size_t>(
            uniform_int(rng, 0, static_cast<int>(buf.size()) - 1));

    nn::begin_encode(net.spec, B, enc_state);
    nn::begin_encode(net.spec, B, enc_next);
    for (int b = 0; b < B; ++b) {
        nn::encode_window(net.spec, buf.at(picks[b]).state, b, enc_state);
        nn::encode_window(net.spec, buf.at(picks[b]).next, b, enc_next);
    }

    std::vector<Real> qn(static_cast<std::size_t>(B) * kNumActions);
    nn::qnet_forward(target, enc_next, target_tape, nn::Mode::Eval, cfg.bn_momentum, false,
                     qn.data());
    std::vector<double> y(B);
    for (int b = 0; b < B; ++b) {
        const ReplayEntry& e = buf.at(picks[b]);
        double best = qn[static_cast<std::size_t>(b) * kNumActions];
        for (int a = 1; a < kNumActions; ++a)
            best = std::max(best, static_cast<double>(qn[static_cast<std::size_t>(b) * kNumActions + a]));
        y[b] = td_target(e.reward, e.terminal, cfg.gamma, best);
    }

    std::vector<Real> q(static_cast<std::size_t>(B) * kNumActions);
    nn::qnet_forward(net, enc_state, tape, nn::Mode::Train, cfg.bn_momentum, true, q.data());

    double loss = 0.0;
    std::vector<Real> dq(static_cast<std::size_t>(B) * kNumActions, Real(0));
    for (int b = 0; b < B; ++b) {
        const std::size_t k = static_cast<std::size_t>(b) * kNumActions + buf.at(picks[b]).action;
        const double d = static_cast<double>(q[k]) - y[b];
        loss += d * d;
        dq[k] = Real(2.0 * d / B);
    }
    loss /= B;

    std::fill(grads.begin(), grads.end(), Real(0));
    nn::qnet_backward(net, enc_state, tape, dq.data(), grads);
    detail::assert_finite(loss, grads, step);
    if (cfg.grad_clip > 0.0) {
        double ss = 0.0;
        for (Real g : grads) ss += static_cast<double>(g) * static_cast<double>(g);
        const double norm = std::sqrt(ss);
        if (norm > cfg.grad_clip) {
            const Real scale = static_cast<Real>(cfg.grad_clip / norm);
            for (Real& g : grads) g *= scale;
        }
    }
    opt.step(net.params, grads);
    return loss;
}

namespace detail {

inline Window shifted(const Window& w, ObsPtr obs) {
    Window next(w.size());
    std::copy(w.begin() + 1, w.end(), next.begin());
    next.back() = std::move(obs);
    return next;
}

template <class Real>
inline int greedy_action(nn::QNet<Real>& net, const Window& window,
                         std::vector<nn::EncodedBatch<Real>>& enc, nn::QTape<Real>& tape,
                         std::vector<Real>& q) {
    nn::begin_encode(net.spec, 1, enc);
    nn::encode_window(net.spec, window, 0, enc);
    q.resize(kNumActions);
    nn::qnet_forward(net, enc, tape, nn::Mode::Eval, 0.9, false, q.data());
    int best = 0;
    for (int a = 1; a < kNumActions; ++a)
        if (q[a] > q[best]) best = a;
    return best;
}

}  // namespace detail

/// Full training run. Deterministic for a fixed (arch, configs, seed):
/// environment, policy, weight init and replay sampling use independent
/// derived streams. Returns per-step metrics plus trailing/leading scores;
/// `out_net` receives the final weights when provided.
template <class Real = float>
inline TrainResult train_run(nn::Arch arch, const EnvConfig& ecfg, const TrainConfig& tcfg,
                             std::uint64_t seed, nn::QNet<Real>* out_net = nullptr) {
    const auto t_begin = std::chrono::steady_clock::now();
    PoseLibrary lib = make_pose_library(ecfg);
    Rng env_rng(derive_seed(seed, "env"));
    Rng pol_rng(derive_seed(seed, "policy"));
    Rng rep_rng(derive_seed(seed, "replay"));

    nn::NetSpec spec;
    spec.arch = arch;
    spec.vis_flat = ecfg.visual_flat();
    spec.aud_flat = ecfg.audio_flat();
    spec.hidden = tcfg.lstm_hidden;
    spec.window = tcfg.window_len;
    spec.motor_skip_only = tcfg.motor_skip_only;

    nn::QNet<Real> net(spec);
    net.init_weights(derive_seed(seed, "init"));
    nn::QNet<Real> target = net;
    nn::Adam<Real> opt;
    opt.lr = tcfg.lr;
    opt.beta1 = tcfg.beta1;
    opt.beta2 = tcfg.beta2;
    opt.eps = tcfg.adam_eps;
    opt.reset(net.params.size());

    ReplayBuffer buf(static_cast<std::size_t>(tcfg.replay_capacity));
    const ObsPtr zero = std::make_shared<Observation>(zero_observation(ecfg));

    EnvState env = init_episode(ecfg, lib, env_rng);
    Window window(static_cast<std::size_t>(tcfg.window_len), zero);
    window.back() = std::make_shared<Observation>(make_observation(env, ecfg, env_rng));

    std::vector<nn::EncodedBatch<Real>> act_enc, enc_state, enc_next;
    nn::QTape<Real> act_tape, tape, target_tape;
    std::vector<Real> q_act;
    std::vector<Real> grads(net.layout.total, Real(0));

    TrainResult res;
    res.rows.reserve(tcfg.total_steps);
    const int min_fill = std::max(tcfg.warmup, tcfg.batch_size);
    int episode = 0;

    for (long long step = 0; step < tcfg.total_steps; ++step) {
        if (step % tcfg.target_sync == 0) {
            target.params = net.params;
            target.bn_running_mean = net.bn_running_mean;
            target.bn_running_var = net.bn_running_var;
        }

        const double eps = epsilon_at(tcfg, step);
        detail::greedy_action(net, window, act_enc, act_tape, q_act);  // fills q_act
        const int action = select_action(q_act.data(), eps, pol_rng);

        env_step(env, action, ecfg, lib, env_rng);
        ObsPtr obs = std::make_shared<Observation>(make_observation(env, ecfg, env_rng));
        const double reward = compute_reward(*obs, tcfg.alpha);
        const bool terminal = env.t >= ecfg.episode_length;

        Window next = detail::shifted(window, obs);
        buf.push({window, action, static_cast<float>(reward), terminal, next});
        window = std::move(next);

        float loss = std::numeric_limits<float>::quiet_NaN();
        if (static_cast<int>(buf.size()) >= min_fill) {
            loss = static_cast<float>(dqn_train_step(net, target, buf, tcfg, opt, rep_rng,
                                                     enc_state, enc_next, tape, target_tape,
                                                     grads, step));
            ++res.updates;
        }
        res.rows.push_back({step, episode, static_cast<float>(reward), loss,
                            static_cast<float>(eps)});

        if (terminal) {
            env = init_episode(ecfg, lib, env_rng);
            ++episode;
            window.assign(static_cast<std::size_t>(tcfg.window_len), zero);
            window.back() = std::make_shared<Observation>(make_observation(env, ecfg, env_rng));
        }
    }

    res.episodes = episode;
    const long long n = static_cast<long long>(res.rows.size());
    const long long k = std::min<long long>(tcfg.score_window, n);
    if (k > 0) {
        double head = 0.0, tail = 0.0;
        for (long long i = 0; i < k; ++i) head += res.rows[i].reward;
        for (long long i = n - k; i < n; ++i) tail += res.rows[i].reward;
        res.early_score = head / k;
        res.final_score = tail / k;
    }
    res.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_begin).count();
    if (out_net) *out_net = net;
    return res;
}

/// Greedy rollout of a trained net over freshly seeded evaluation episodes.
template <class Real>
inline EvalResult evaluate_greedy(nn::QNet<Real>& net, const EnvConfig& ecfg, double alpha,
                                  std::uint64_t seed, int episodes) {
    PoseLibrary lib = make_pose_library(ecfg);
    const ObsPtr zero = std::make_shared<Observation>(zero_observation(ecfg));
    std::vector<nn::EncodedBatch<Real>> enc;
    nn::QTape<Real> tape;
    std::vector<Real> q;

    std::vector<double> means;
    means.reserve(episodes);
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, kEvalEpisodeTag, static_cast<std::uint64_t>(e)));
        EnvState env = init_episode(ecfg, lib, rng);
        Window window(static_cast<std::size_t>(net.spec.window), zero);
        window.back() = std::make_shared<Observation>(make_observation(env, ecfg, rng));
        double total = 0.0;
        for (int t = 0; t < ecfg.episode_length; ++t) {
            const int action = detail::greedy_action(net, window, enc, tape, q);
            env_step(env, action, ecfg, lib, rng);
            ObsPtr obs = std::make_shared<Observation>(make_observation(env, ecfg, rng));
            total += compute_reward(*obs, alpha);
            window = detail::shifted(window, obs);
        }
        means.push_back(total / ecfg.episode_length);
    }
    return summarize_episodes(std::move(means));
}

inline void write_metrics_csv(const std::vector<MetricsRow>& rows, std::ostream& out) {
    out << "step,episode,reward,loss,epsilon\n";
    char buf[128];
    for (const auto& r : rows) {
        if (std::isnan(r.loss)) {
            std::snprintf(buf, sizeof(buf), "%lld,%d,%.6g,,%.6g\n", r.step, r.episode,
                          static_cast<double>(r.reward), static_cast<double>(r.epsilon));
        } else {
            std::snprintf(buf, sizeof(buf), "%lld,%d,%.6g,%.6g,%.6g\n", r.step, r.episode,
                          static_cast<double>(r.reward), static_cast<double>(r.loss),
                          static_cast<double>(r.epsilon));
        }
        out << buf;
    }
}

}  // namespace gazerl
