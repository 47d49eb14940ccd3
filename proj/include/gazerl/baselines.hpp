#pragma once

#include "gazerl/common.hpp"
#include "gazerl/env.hpp"
#include "gazerl/eval.hpp"
#include "gazerl/observation.hpp"

namespace gazerl {

/// Handcrafted comparison policies. The track_* family centers the nearest
/// detected face and differs only in what it does when no face is in view;
/// audio_sweep chases sound first, faces second, and otherwise pans the room.
enum class BaselineKind {
    kRandom,       // uniform random action every step
    kTrackRand,    // face tracker; random action when no face
    kTrackCenter,  // face tracker; drift back to the field center
    kTrackBody,    // face tracker; look up from any detected body part
    kTrackAudio,   // face tracker; revisit the last heard speaker cell
    kAudioSweep,   // sound first, then face centroid, then horizontal sweep
};

constexpr std::array<BaselineKind, 6> kAllBaselines = {
    BaselineKind::kRandom,     BaselineKind::kTrackRand,  BaselineKind::kTrackCenter,
    BaselineKind::kTrackBody,  BaselineKind::kTrackAudio, BaselineKind::kAudioSweep,
};

inline const char* baseline_name(BaselineKind k) {
    switch (k) {
        case BaselineKind::kRandom: return "random";
        case BaselineKind::kTrackRand: return "track-rand";
        case BaselineKind::kTrackCenter: return "track-center";
        case BaselineKind::kTrackBody: return "track-body";
        case BaselineKind::kTrackAudio: return "track-audio";
        case BaselineKind::kAudioSweep: return "audio-sweep";
    }
    return "?";
}

inline BaselineKind baseline_from_name(const std::string& name) {
    for (BaselineKind k : kAllBaselines) {
        if (name == baseline_name(k)) return k;
    }
    throw std::invalid_argument("unknown baseline: " + name);
}

/// What a policy wants this step: the action to take under the one-step
/// speed limit, plus the gaze point it is steering toward (when it has one)
/// for the infinite-speed evaluation protocol.
struct PolicyDecision {
    int action = kActStay;
    bool has_target = false;
    Vec2 target{0.0, 0.0};
};

/// Greedy single-axis step toward a world-coordinate target: move along the
/// axis of largest absolute offset (ties go horizontal); Stay once a step
/// along that axis would no longer shrink the offset.
inline int greedy_step_toward(Vec2 theta, Vec2 target, const EnvConfig& cfg) {
    const double du = target.u - theta.u;
    const double dv = target.v - theta.v;
    if (std::abs(du) >= std::abs(dv)) {
        if (std::abs(du) > cfg.action_step_u / 2) return du < 0 ? kActLeft : kActRight;
    } else {
        if (std::abs(dv) > cfg.action_step_v / 2) return dv < 0 ? kActDown : kActUp;
    }
    return kActStay;
}

struct GridCell {
    int row = 0;
    int col = 0;
};

namespace detail {

/// Nearest active cell of one visual channel, measured from the grid center
/// in cell units (Euclidean; row-major scan wins ties). False if the channel
/// is empty.
inline bool nearest_channel_cell(const Observation& o, const EnvConfig& cfg, int channel,
                                 GridCell& out) {
    const int cr = (cfg.vis_rows - 1) / 2;
    const int cc = (cfg.vis_cols - 1) / 2;
    bool found = false;
    int best = 0;
    for (int r = 0; r < cfg.vis_rows; ++r) {
        for (int c = 0; c < cfg.vis_cols; ++c) {
            if (!o.visual.test(visual_cell_index(cfg, channel, r, c))) continue;
            const int d2 = (r - cr) * (r - cr) + (c - cc) * (c - cc);
            if (!found || d2 < best) {
                found = true;
                best = d2;
                out = {r, c};
            }
        }
    }
    return found;
}

/// Centroid of the active cells of one visual channel, in fractional cell
/// coordinates. False if the channel is empty.
inline bool channel_centroid(const Observation& o, const EnvConfig& cfg, int channel,
                             double& row, double& col) {
    double sr = 0.0, sc = 0.0;
    int n = 0;
    for (int r = 0; r < cfg.vis_rows; ++r) {
        for (int c = 0; c < cfg.vis_cols; ++c) {
            if (!o.visual.test(visual_cell_index(cfg, channel, r, c))) continue;
            sr += r;
            sc += c;
            ++n;
        }
    }
    if (n == 0) return false;
    row = sr / n;
    col = sc / n;
    return true;
}

/// True if any channel other than the nose has an active cell.
inline bool any_body_cell(const Observation& o, const EnvConfig& cfg) {
    const int plane = cfg.vis_rows * cfg.vis_cols;
    for (int j = 0; j < cfg.vis_channels; ++j) {
        if (j == kNose) continue;
        for (int c = 0; c < plane; ++c) {
            if (o.visual.test(j * plane + c)) return true;
        }
    }
    return false;
}

/// Active audio cell whose center lies closest to the gaze (row-major scan
/// wins ties). False if the audio map is silent.
inline bool nearest_audio_cell(const Observation& o, const EnvConfig& cfg, Vec2 theta,
                               Vec2& center) {
    bool found = false;
    double best = 0.0;
    for (int r = 0; r < cfg.aud_rows; ++r) {
        for (int c = 0; c < cfg.aud_cols; ++c) {
            if (!o.audio.test(audio_cell_index(cfg, r, c))) continue;
            Vec2 p = audio_cell_center(cfg, r, c);
            const double d = (p - theta).norm();
            if (!found || d < best) {
                found = true;
                best = d;
                center = p;
            }
        }
    }
    return found;
}

/// Face-centering decision on the visual grid: Stay once the nearest active
/// nose cell sits within one cell of the grid center, otherwise step along
/// the grid axis with the larger cell offset (ties go horizontal).
inline PolicyDecision track_face(const EnvConfig& cfg, Vec2 theta, const GridCell& nose) {
    PolicyDecision d;
    d.has_target = true;
    d.target = clamp_box(visual_cell_center(cfg, theta, nose.row, nose.col), 1.0, 1.0);
    const int dr = nose.row - (cfg.vis_rows - 1) / 2;
    const int dc = nose.col - (cfg.vis_cols - 1) / 2;
    if (std::abs(dr) <= 1 && std::abs(dc) <= 1) {
        d.action = kActStay;
    } else if (std::abs(dc) >= std::abs(dr)) {
        d.action = dc < 0 ? kActLeft : kActRight;
    } else {
        d.action = dr < 0 ? kActUp : kActDown;  // row 0 is the top of the view
    }
    return d;
}

}  // namespace detail

/// One handcrafted policy plus its per-episode memory. Policies read only
/// the current observation (the gaze comes back out of theta_norm), so they
/// see exactly what the learned agents see.
struct BaselinePolicy {
    BaselineKind kind = BaselineKind::kRandom;

    // per-episode memory
    bool heard_ever = false;
    Vec2 heard_cell{0.0, 0.0};  // world center of the last heard speaker cell
    int sweep_dir = kActLeft;

    explicit BaselinePolicy(BaselineKind k = BaselineKind::kRandom) : kind(k) {}

    void reset() {
        heard_ever = false;
        heard_cell = {0.0, 0.0};
        sweep_dir = kActLeft;
    }

    PolicyDecision act(const Observation& obs, const EnvConfig& cfg, Rng& rng) {
        const Vec2 theta{obs.theta_norm[0] * 2.0 - 1.0, obs.theta_norm[1] * 2.0 - 1.0};

        Vec2 heard_now;
        if (detail::nearest_audio_cell(obs, cfg, theta, heard_now)) {
            heard_ever = true;
            heard_cell = heard_now;
        }

        PolicyDecision d;
        switch (kind) {
            case BaselineKind::kRandom:
                d.action = uniform_int(rng, 0, kNumActions - 1);
                return d;

            case BaselineKind::kTrackRand:
            case BaselineKind::kTrackCenter:
            case BaselineKind::kTrackBody:
            case BaselineKind::kTrackAudio: {
                GridCell nose;
                if (detail::nearest_channel_cell(obs, cfg, kNose, nose))
                    return detail::track_face(cfg, theta, nose);

                if (kind == BaselineKind::kTrackCenter) {
                    d.action = greedy_step_toward(theta, {0.0, 0.0}, cfg);
                    d.has_target = true;
                    d.target = {0.0, 0.0};
                } else if (kind == BaselineKind::kTrackBody && detail::any_body_cell(obs, cfg)) {
                    d.action = kActUp;  // the head is above whatever body part we saw
                } else if (kind == BaselineKind::kTrackAudio && heard_ever) {
                    d.action = greedy_step_toward(theta, heard_cell, cfg);
                    d.has_target = true;
                    d.target = heard_cell;
                } else {
                    d.action = uniform_int(rng, 0, kNumActions - 1);
                }
                return d;
            }

            case BaselineKind::kAudioSweep: {
                Vec2 cell;
                if (detail::nearest_audio_cell(obs, cfg, theta, cell)) {
                    d.action = greedy_step_toward(theta, cell, cfg);
                    d.has_target = true;
                    d.target = cell;
                    return d;
                }
                double row, col;
                if (detail::channel_centroid(obs, cfg, kNose, row, col)) {
                    Vec2 target = clamp_box(visual_cell_center(cfg, theta, row, col), 1.0, 1.0);
                    d.action = greedy_step_toward(theta, target, cfg);
                    d.has_target = true;
                    d.target = target;
                    return d;
                }
                // Nothing seen or heard: pan one way until the motor limit,
                // then come back the other way.
                if (sweep_dir == kActLeft && theta.u <= -1.0 + 1e-9) sweep_dir = kActRight;
                else if (sweep_dir == kActRight && theta.u >= 1.0 - 1e-9) sweep_dir = kActLeft;
                d.action = sweep_dir;
                d.has_target = true;
                d.target = {sweep_dir == kActLeft ? -1.0 : 1.0, theta.v};
                return d;
            }
        }
        return d;
    }
};

enum class SpeedMode { kEqual, kInfinite };

/// Greedy evaluation of one handcrafted policy over the same derived-seed
/// episode stream the learned agents are scored on. Equal speed applies the
/// policy's action; infinite speed teleports the gaze to the policy's target
/// (falling back to the action when the step has no point target).
inline EvalResult evaluate_baseline(BaselineKind kind, const EnvConfig& ecfg, double alpha,
                                    std::uint64_t seed, int episodes,
                                    SpeedMode speed = SpeedMode::kEqual) {
    PoseLibrary lib = make_pose_library(ecfg);
    BaselinePolicy pol(kind);
    std::vector<double> means;
    means.reserve(episodes);
    for (int e = 0; e < episodes; ++e) {
        Rng env_rng(derive_seed(seed, kEvalEpisodeTag, static_cast<std::uint64_t>(e)));
        Rng pol_rng(derive_seed(seed, kEvalPolicyTag, static_cast<std::uint64_t>(e)));
        pol.reset();
        EnvState env = init_episode(ecfg, lib, env_rng);
        Observation obs = make_observation(env, ecfg, env_rng);
        double total = 0.0;
        for (int t = 0; t < ecfg.episode_length; ++t) {
            PolicyDecision d = pol.act(obs, ecfg, pol_rng);
            if (speed == SpeedMode::kInfinite && d.has_target)
                env_step_teleport(env, d.target, ecfg, lib, env_rng);
            else
                env_step(env, d.action, ecfg, lib, env_rng);
            obs = make_observation(env, ecfg, env_rng);
            total += compute_reward(obs, alpha);
        }
        means.push_back(total / ecfg.episode_length);
    }
    return summarize_episodes(std::move(means));
}

}  // namespace gazerl
