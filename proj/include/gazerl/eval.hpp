#pragma once

#include "gazerl/common.hpp"

namespace gazerl {

/// Seed tag shared by every evaluation routine so different policies face
/// identical episode initializations under the same seed.
constexpr const char* kEvalEpisodeTag = "eval-episode";

/// Seed tag for per-episode policy-side randomness during evaluation (random
/// fallbacks etc.), kept off the environment stream.
constexpr const char* kEvalPolicyTag = "eval-policy";

struct EvalResult {
    double mean_reward = 0.0;  // per environment step
    double std_reward = 0.0;   // across per-episode means, n-1 denominator
    int episodes = 0;
    std::vector<double> episode_means;
};

inline EvalResult summarize_episodes(std::vector<double> episode_means) {
    EvalResult r;
    MeanStd ms = mean_std(episode_means);
    r.mean_reward = ms.mean;
    r.std_reward = ms.std;
    r.episodes = static_cast<int>(episode_means.size());
    r.episode_means = std::move(episode_means);
    return r;
}

}  // namespace gazerl
