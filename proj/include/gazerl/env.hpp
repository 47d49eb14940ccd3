#pragma once

#include "gazerl/common.hpp"
#include "gazerl/pose.hpp"

namespace gazerl {

/// All knobs of the simulated audio-visual scene and of the observation
/// grids built on top of it. One flat struct so a single JSON section
/// round-trips the whole environment.
struct EnvConfig {
    // Geometry. The gaze center theta lives in [-1,1]^2, person centers roam
    // the extended field [-xi, xi]^2, and the camera sees the axis-aligned
    // box theta +- (fov_half_w, fov_half_h).
    double xi = 1.4;
    double fov_half_w = 0.15;
    double fov_half_h = 0.10;
    double action_step_u = 0.15;
    double action_step_v = 0.10;

    // Dynamics.
    double delta = 0.1;    // kinematic time step
    double sigma = 0.1;    // per-axis Gaussian velocity noise
    double tau = 0.5;      // distance beyond which a person counts as far from the view
    double p_move_in_fov = 0.95;
    double p_move_far = 0.25;
    double p_move_near = 0.85;  // also used for reachable-but-never-caught cases

    // Population.
    int max_persons = 3;
    int forced_person_count = -1;  // test hook; -1 keeps N ~ U{1..max_persons}
    bool static_persons = false;   // test hook: freeze position, velocity and pose

    // Speech Markov model: with probability p_speech_stay the speaking set is
    // kept, otherwise the speaker count is redrawn from U{0..min(max_speakers, N)}.
    double p_speech_stay = 0.9;
    int max_speakers = 2;
    bool always_speaking = false;  // test hook: everyone speaks at every step

    // Poses.
    int pose_subset = 32;          // candidate count M for pose continuity sampling
    int pose_count = 256;          // synthetic library size
    std::uint64_t pose_seed = 20240915;
    std::string pose_file;         // optional JSONL library overriding the synthetic one

    // Episode.
    int episode_length = 200;

    // Observation grids and sensor noise.
    int vis_cols = 7;   // K_v
    int vis_rows = 5;   // L_v
    int vis_channels = kNumJoints;
    int aud_cols = 7;   // K_a
    int aud_rows = 5;   // L_a
    double miss_rate = 0.05;        // chance of dropping a visible landmark
    double audio_false_rate = 0.05; // chance of one spurious active audio cell

    int visual_flat() const { return vis_cols * vis_rows * vis_channels; }
    int audio_flat() const { return aud_cols * aud_rows; }
};

inline PoseLibrary make_pose_library(const EnvConfig& cfg) {
    if (!cfg.pose_file.empty()) return load_pose_library(cfg.pose_file);
    return synth_pose_library(cfg.pose_count, cfg.pose_seed);
}

struct PersonState {
    Vec2 h;           // body center in the extended field
    Vec2 hdot;        // velocity
    Pose pose;
    bool speaking = false;
    bool ever_seen = false;  // persons never caught by the camera do not move
};

struct EnvState {
    Vec2 theta;
    std::vector<PersonState> persons;
    int t = 0;
};

enum Action : int {
    kActStay = 0,
    kActLeft = 1,
    kActUp = 2,
    kActRight = 3,
    kActDown = 4,
};
constexpr int kNumActions = 5;

inline const char* action_name(int a) {
    static const char* names[kNumActions] = {"stay", "left", "up", "right", "down"};
    return names[a];
}

inline Vec2 apply_action(Vec2 theta, int action, const EnvConfig& cfg) {
    switch (action) {
        case kActLeft: theta.u -= cfg.action_step_u; break;
        case kActRight: theta.u += cfg.action_step_u; break;
        case kActUp: theta.v += cfg.action_step_v; break;
        case kActDown: theta.v -= cfg.action_step_v; break;
        case kActStay: break;
        default: throw std::invalid_argument("apply_action: bad action");
    }
    return clamp_box(theta, 1.0, 1.0);
}

inline bool in_fov(Vec2 p, Vec2 theta, const EnvConfig& cfg) {
    return in_box(p, theta, cfg.fov_half_w, cfg.fov_half_h);
}

/// True if the point lies outside the motor field [-1,1]^2: the gaze center
/// can never be placed on it.
inline bool motor_unreachable(Vec2 p) {
    return std::abs(p.u) > 1.0 || std::abs(p.v) > 1.0;
}

/// Probability that a person takes a motion step right now. Rules, in order:
/// never-seen persons are frozen; persons in view move almost surely; persons
/// beyond the motor field keep shuffling regardless of distance; persons far
/// from the gaze point mostly rest; everyone else moves at the base rate.
inline double motion_probability(const PersonState& p, Vec2 theta, const EnvConfig& cfg) {
    if (!p.ever_seen) return 0.0;
    if (in_fov(p.h, theta, cfg)) return cfg.p_move_in_fov;
    if (motor_unreachable(p.h)) return cfg.p_move_near;
    if ((p.h - theta).norm() > cfg.tau) return cfg.p_move_far;
    return cfg.p_move_near;
}

/// Per-person flags of one dynamics step, used by invariant checks.
struct PersonStepEvent {
    double p_move = 0.0;
    bool moved = false;
    bool exited_top = false;
    bool wrapped_u = false;
    bool wrapped_v = false;
    bool reflected_u = false;
    bool reflected_v = false;
};

namespace detail {

/// Boundary rule for one axis: inside stays put; exits either wrap to the
/// mirrored previous coordinate (keeping velocity) or reflect (keeping the
/// previous coordinate, negating velocity). `force_reflect` pins the top
/// border, where wrapping would teleport people in from below.
inline void boundary_axis(double tentative, double prev, double limit, bool force_reflect,
                          double& coord, double& vel, bool& wrapped, bool& reflected, Rng& rng) {
    if (std::abs(tentative) <= limit) {
        coord = tentative;
        return;
    }
    bool wrap = !force_reflect && uniform01(rng) < 0.5;
    if (wrap) {
        coord = -prev;
        wrapped = true;
    } else {
        coord = prev;
        vel = -vel;
        reflected = true;
    }
}

}  // namespace detail

/// Advances one person. Movers get a noisy kinematic step with per-axis
/// boundary handling; stayers hold position but redraw their velocity. The
/// pose always advances through the continuity sampler.
inline PersonStepEvent step_person(PersonState& p, Vec2 theta, const EnvConfig& cfg,
                                   const PoseLibrary& lib, Rng& rng) {
    PersonStepEvent ev;
    if (cfg.static_persons) return ev;

    ev.p_move = motion_probability(p, theta, cfg);
    ev.moved = uniform01(rng) < ev.p_move;
    if (ev.moved) {
        Vec2 vel{p.hdot.u + gaussian(rng, 0.0, cfg.sigma),
                 p.hdot.v + gaussian(rng, 0.0, cfg.sigma)};
        Vec2 tentative{p.h.u + cfg.delta * vel.u, p.h.v + cfg.delta * vel.v};
        ev.exited_top = tentative.v > cfg.xi;
        Vec2 pos;
        detail::boundary_axis(tentative.u, p.h.u, cfg.xi, false, pos.u, vel.u, ev.wrapped_u,
                              ev.reflected_u, rng);
        detail::boundary_axis(tentative.v, p.h.v, cfg.xi, ev.exited_top, pos.v, vel.v,
                              ev.wrapped_v, ev.reflected_v, rng);
        p.h = pos;
        p.hdot = vel;
    } else {
        p.hdot = {split_uniform(rng), split_uniform(rng)};
    }
    p.pose = sample_next_pose(lib, p.pose, cfg.pose_subset, rng);
    return ev;
}

/// Resampling step of the speech Markov chain.
inline void update_speech(EnvState& s, const EnvConfig& cfg, Rng& rng) {
    if (cfg.always_speaking) {
        for (auto& p : s.persons) p.speaking = true;
        return;
    }
    if (uniform01(rng) < cfg.p_speech_stay) return;
    int n = static_cast<int>(s.persons.size());
    int k = uniform_int(rng, 0, std::min(cfg.max_speakers, n));
    for (auto& p : s.persons) p.speaking = false;
    for (int i : sample_without_replacement(rng, n, k)) s.persons[i].speaking = true;
}

/// True if the camera at `theta` would report a face: some person with a
/// visible nose landmark sits inside the view.
inline bool face_in_view(const EnvState& s, Vec2 theta, const EnvConfig& cfg) {
    for (const auto& p : s.persons) {
        if (p.pose.joints[kNose].visible && in_fov(p.h, theta, cfg)) return true;
    }
    return false;
}

/// Draws a fresh episode: persons with uniform positions, split-uniform
/// velocities and library poses, an initial speaking set, and a gaze that
/// starts away from every face (rejection sampled; falls back to the corner
/// farthest from all persons). Nobody counts as seen until a step has run.
inline EnvState init_episode(const EnvConfig& cfg, const PoseLibrary& lib, Rng& rng) {
    EnvState s;
    int n = cfg.forced_person_count >= 0 ? cfg.forced_person_count
                                         : uniform_int(rng, 1, cfg.max_persons);
    s.persons.resize(n);
    for (auto& p : s.persons) {
        p.h = {uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0)};
        p.hdot = {split_uniform(rng), split_uniform(rng)};
        p.pose = lib[uniform_int(rng, 0, static_cast<int>(lib.size()) - 1)];
    }
    if (cfg.always_speaking) {
        for (auto& p : s.persons) p.speaking = true;
    } else if (n > 0) {
        int k = uniform_int(rng, 0, std::min(cfg.max_speakers, n));
        for (int i : sample_without_replacement(rng, n, k)) s.persons[i].speaking = true;
    }

    bool placed = false;
    for (int trial = 0; trial < 100 && !placed; ++trial) {
        Vec2 cand{uniform_in(rng, -1.0, 1.0), uniform_in(rng, -1.0, 1.0)};
        if (!face_in_view(s, cand, cfg)) {
            s.theta = cand;
            placed = true;
        }
    }
    if (!placed) {
        double best = -1.0;
        for (double cu : {-1.0, 1.0}) {
            for (double cv : {-1.0, 1.0}) {
                double nearest = std::numeric_limits<double>::infinity();
                for (const auto& p : s.persons) nearest = std::min(nearest, (p.h - Vec2{cu, cv}).norm());
                if (nearest > best) {
                    best = nearest;
                    s.theta = {cu, cv};
                }
            }
        }
    }
    return s;
}

namespace detail {

/// World dynamics after the gaze has been placed: resample speech, advance
/// every person against the new gaze, refresh visibility flags.
inline void env_step_core(EnvState& s, const EnvConfig& cfg, const PoseLibrary& lib, Rng& rng,
                          std::vector<PersonStepEvent>* events) {
    update_speech(s, cfg, rng);
    if (events) events->clear();
    for (auto& p : s.persons) {
        PersonStepEvent ev = step_person(p, s.theta, cfg, lib, rng);
        if (events) events->push_back(ev);
    }
    for (auto& p : s.persons) {
        if (in_fov(p.h, s.theta, cfg)) p.ever_seen = true;
    }
    ++s.t;
}

}  // namespace detail

/// One world transition driven by a motor action.
inline void env_step(EnvState& s, int action, const EnvConfig& cfg, const PoseLibrary& lib,
                     Rng& rng, std::vector<PersonStepEvent>* events = nullptr) {
    s.theta = apply_action(s.theta, action, cfg);
    detail::env_step_core(s, cfg, lib, rng, events);
}

/// One world transition with the gaze teleported to `target` (clamped to the
/// motor field). Used by the infinite-speed evaluation protocol only.
inline void env_step_teleport(EnvState& s, Vec2 target, const EnvConfig& cfg,
                              const PoseLibrary& lib, Rng& rng,
                              std::vector<PersonStepEvent>* events = nullptr) {
    s.theta = clamp_box(target, 1.0, 1.0);
    detail::env_step_core(s, cfg, lib, rng, events);
}

}  // namespace gazerl
