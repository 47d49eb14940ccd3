#pragma once

#include <map>

#include "gazerl/dqn.hpp"
#include "gazerl/eval.hpp"
#include "gazerl/observation.hpp"

namespace gazerl {

/// Environment settings with every stochastic element pinned: one person who
/// never moves, exact sensors, everyone speaking all the time. The gaze is
/// then the only moving part and optimal behavior is computable exactly.
inline EnvConfig micro_env_config() {
    EnvConfig cfg;
    cfg.forced_person_count = 1;
    cfg.static_persons = true;
    cfg.sigma = 0.0;
    cfg.miss_rate = 0.0;
    cfg.audio_false_rate = 0.0;
    cfg.always_speaking = true;
    cfg.episode_length = 50;
    return cfg;
}

/// Small training setup paired with micro_env_config(): 20k steps of a
/// late-fusion net is enough to recover near-optimal behavior there, and the
/// run stays in the minutes range on one core.
inline TrainConfig micro_train_config() {
    TrainConfig t;
    t.total_steps = 20000;
    t.window_len = 3;
    t.lstm_hidden = 16;
    t.batch_size = 64;
    t.warmup = 64;
    t.replay_capacity = 20000;
    t.target_sync = 500;
    t.eps_start = 0.9;
    t.eps_end = 0.02;
    t.eps_decay_steps = 15000;
    t.score_window = 2000;
    t.alpha = 1.0;
    return t;
}

/// Exact Q-iteration over the gaze lattice of one frozen scene. The motor
/// steps and the clamped borders generate a finite set of reachable gaze
/// positions; rewards are read from the real observation pipeline, which is
/// deterministic under the settings enforced in the constructor.
class TabularSolver {
  public:
    TabularSolver(const EnvConfig& cfg, const EnvState& scene, double alpha, double gamma)
        : cfg_(cfg), scene_(scene), gamma_(gamma) {
        if (!cfg.static_persons || cfg.sigma != 0.0 || cfg.miss_rate != 0.0 ||
            cfg.audio_false_rate != 0.0 || (alpha != 0.0 && !cfg.always_speaking))
            throw std::invalid_argument("TabularSolver: scene is not deterministic");
        alpha_ = alpha;

        // Breadth-first closure of the start gaze under the five actions.
        index_[key(scene.theta)] = 0;
        thetas_.push_back(scene.theta);
        for (std::size_t at = 0; at < thetas_.size(); ++at) {
            std::array<int, kNumActions> succ;
            for (int a = 0; a < kNumActions; ++a) {
                const Vec2 next = apply_action(thetas_[at], a, cfg_);
                auto [it, fresh] = index_.try_emplace(key(next),
                                                      static_cast<int>(thetas_.size()));
                if (fresh) thetas_.push_back(next);
                succ[a] = it->second;
            }
            next_.push_back(succ);
        }

        reward_.reserve(thetas_.size());
        for (const Vec2& t : thetas_) reward_.push_back(reward_observed_at(t));

        // Value iteration to convergence; gamma < 1 makes this a contraction.
        values_.assign(thetas_.size(), 0.0);
        std::vector<double> fresh(values_.size());
        for (int sweep = 0; sweep < 100000; ++sweep) {
            double delta = 0.0;
            for (std::size_t s = 0; s < values_.size(); ++s) {
                double best = -std::numeric_limits<double>::infinity();
                for (int a = 0; a < kNumActions; ++a) {
                    const int n = next_[s][a];
                    best = std::max(best, reward_[n] + gamma_ * values_[n]);
                }
                fresh[s] = best;
                delta = std::max(delta, std::abs(best - values_[s]));
            }
            values_.swap(fresh);
            if (delta < 1e-12) break;
        }
    }

    std::size_t state_count() const { return thetas_.size(); }
    bool has(Vec2 theta) const { return index_.count(key(theta)) > 0; }
    double value(Vec2 theta) const { return values_[state_index(theta)]; }
    double reward_at(Vec2 theta) const { return reward_[state_index(theta)]; }

    /// Optimal action, ties resolved to the lowest index like the learner.
    int greedy(Vec2 theta) const {
        const int s = state_index(theta);
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < kNumActions; ++a) {
            const int n = next_[s][a];
            const double q = reward_[n] + gamma_ * values_[n];
            if (q > best_q) {
                best_q = q;
                best = a;
            }
        }
        return best;
    }

  private:
    using Key = std::pair<long long, long long>;

    static Key key(Vec2 t) {
        return {std::llround(t.u * 1e9), std::llround(t.v * 1e9)};
    }

    int state_index(Vec2 theta) const {
        auto it = index_.find(key(theta));
        if (it == index_.end())
            throw std::out_of_range("TabularSolver: gaze position outside the reachable lattice");
        return it->second;
    }

    double reward_observed_at(Vec2 theta) const {
        EnvState probe = scene_;
        probe.theta = theta;
        Rng rng(0);  // consumed but irrelevant: the sensors are exact
        const Observation obs = make_observation(probe, cfg_, rng);
        return compute_reward(obs, alpha_);
    }

    EnvConfig cfg_;
    EnvState scene_;
    double alpha_;
    double gamma_;
    std::map<Key, int> index_;
    std::vector<Vec2> thetas_;
    std::vector<double> reward_;
    std::vector<std::array<int, kNumActions>> next_;
    std::vector<double> values_;
};

/// Greedy rollout of the exact solution over the shared evaluation episode
/// protocol; the returned means are directly comparable to a trained net
/// evaluated with the same seed.
inline EvalResult evaluate_tabular(const EnvConfig& cfg, double alpha, double gamma,
                                   std::uint64_t seed, int episodes) {
    PoseLibrary lib = make_pose_library(cfg);
    std::vector<double> means;
    means.reserve(episodes);
    for (int e = 0; e < episodes; ++e) {
        Rng rng(derive_seed(seed, kEvalEpisodeTag, static_cast<std::uint64_t>(e)));
        EnvState env = init_episode(cfg, lib, rng);
        make_observation(env, cfg, rng);  // draw parity with the net evaluator's first frame
        TabularSolver solver(cfg, env, alpha, gamma);
        double total = 0.0;
        for (int t = 0; t < cfg.episode_length; ++t) {
            const int action = solver.greedy(env.theta);
            env_step(env, action, cfg, lib, rng);
            const Observation obs = make_observation(env, cfg, rng);
            total += compute_reward(obs, alpha);
        }
        means.push_back(total / cfg.episode_length);
    }
    return summarize_episodes(std::move(means));
}

}  // namespace gazerl
