#pragma once

#include <json.hpp>

#include "gazerl/common.hpp"
#include "gazerl/env.hpp"

namespace gazerl {

/// One sensor frame. All maps are binary; `visual` is indexed channel-major
/// then row-major (index = (channel * rows + row) * cols + col, row 0 at the
/// top of the view), `audio` row-major over the motor field.
struct Observation {
    std::array<double, 2> theta_norm{0.0, 0.0};  // gaze mapped to [0,1]^2
    BitGrid visual;
    BitGrid audio;
    int face_count = 0;     // F: active cells in the nose channel
    int speech_in_view = 0; // Sigma: 1 if an active audio cell center is in view

    bool operator==(const Observation& o) const {
        return theta_norm == o.theta_norm && visual == o.visual && audio == o.audio &&
               face_count == o.face_count && speech_in_view == o.speech_in_view;
    }
};

inline Observation zero_observation(const EnvConfig& cfg) {
    Observation o;
    o.visual = BitGrid(cfg.visual_flat());
    o.audio = BitGrid(cfg.audio_flat());
    return o;
}

/// Bins x in [lo, hi] into k cells. Bins share boundaries; a value exactly on
/// a shared boundary falls into the lower-index cell, and values at (or
/// beyond) the outer edges are clamped to the edge cells.
inline int bin_index(double x, double lo, double hi, int k) {
    double t = (x - lo) / (hi - lo) * k;
    int i = static_cast<int>(std::ceil(t)) - 1;
    return std::min(std::max(i, 0), k - 1);
}

inline int visual_cell_index(const EnvConfig& cfg, int channel, int row, int col) {
    return (channel * cfg.vis_rows + row) * cfg.vis_cols + col;
}

inline int audio_cell_index(const EnvConfig& cfg, int row, int col) {
    return row * cfg.aud_cols + col;
}

/// Center of an audio cell in motor-field coordinates. Row 0 is the top row.
inline Vec2 audio_cell_center(const EnvConfig& cfg, int row, int col) {
    return {-1.0 + (col + 0.5) * 2.0 / cfg.aud_cols,
            1.0 - (row + 0.5) * 2.0 / cfg.aud_rows};
}

/// World position of a visual cell center for a camera pointed at `theta`.
/// Fractional (row, col) give points between cell centers (e.g. centroids).
inline Vec2 visual_cell_center(const EnvConfig& cfg, Vec2 theta, double row, double col) {
    return {theta.u - cfg.fov_half_w + (col + 0.5) * 2.0 * cfg.fov_half_w / cfg.vis_cols,
            theta.v + cfg.fov_half_h - (row + 0.5) * 2.0 * cfg.fov_half_h / cfg.vis_rows};
}

/// Builds the frame seen after the world settled at state `s`.
///
/// Visual map: every visible landmark of every person is projected to world
/// coordinates; landmarks inside the view are binned into the per-channel
/// grid over the view box, each surviving an independent miss draw. Audio
/// map: each speaking person inside the motor field activates the cell under
/// its center (independent of the gaze), plus at most one spurious cell.
inline Observation make_observation(const EnvState& s, const EnvConfig& cfg, Rng& rng) {
    Observation o = zero_observation(cfg);
    o.theta_norm = {(s.theta.u + 1.0) / 2.0, (s.theta.v + 1.0) / 2.0};

    double lo_u = s.theta.u - cfg.fov_half_w, hi_u = s.theta.u + cfg.fov_half_w;
    double lo_v = s.theta.v - cfg.fov_half_h, hi_v = s.theta.v + cfg.fov_half_h;
    for (const auto& p : s.persons) {
        for (int j = 0; j < cfg.vis_channels; ++j) {
            if (!p.pose.joints[j].visible) continue;
            Vec2 w = joint_world(p.pose, j, p.h);
            if (!in_fov(w, s.theta, cfg)) continue;
            if (uniform01(rng) < cfg.miss_rate) continue;
            int col = bin_index(w.u, lo_u, hi_u, cfg.vis_cols);
            int row = bin_index(-w.v, -hi_v, -lo_v, cfg.vis_rows);  // row 0 on top
            o.visual.set(visual_cell_index(cfg, j, row, col));
        }
    }

    for (const auto& p : s.persons) {
        if (!p.speaking) continue;
        if (std::abs(p.h.u) > 1.0 || std::abs(p.h.v) > 1.0) continue;
        int col = bin_index(p.h.u, -1.0, 1.0, cfg.aud_cols);
        int row = bin_index(-p.h.v, -1.0, 1.0, cfg.aud_rows);
        o.audio.set(audio_cell_index(cfg, row, col));
    }
    if (uniform01(rng) < cfg.audio_false_rate) {
        o.audio.set(uniform_int(rng, 0, cfg.audio_flat() - 1));
    }

    for (int c = 0; c < cfg.vis_rows * cfg.vis_cols; ++c) {
        if (o.visual.test(kNose * cfg.vis_rows * cfg.vis_cols + c)) ++o.face_count;
    }
    // A single-row audio map carries no vertical information (one microphone
    // band across the whole field), so its in-view test is horizontal only.
    for (int row = 0; row < cfg.aud_rows && !o.speech_in_view; ++row) {
        for (int col = 0; col < cfg.aud_cols; ++col) {
            if (!o.audio.test(audio_cell_index(cfg, row, col))) continue;
            Vec2 c = audio_cell_center(cfg, row, col);
            bool heard_in_view = cfg.aud_rows == 1
                                     ? std::abs(c.u - s.theta.u) <= cfg.fov_half_w
                                     : in_fov(c, s.theta, cfg);
            if (heard_in_view) {
                o.speech_in_view = 1;
                break;
            }
        }
    }
    return o;
}

/// Reward: faces found, plus the speaker bonus when enabled.
inline double compute_reward(const Observation& o, double alpha) {
    if (alpha < 0.0) throw std::invalid_argument("compute_reward: alpha must be >= 0");
    return o.face_count + alpha * o.speech_in_view;
}

/// Dense JSON dump (debugging / external tooling).
inline nlohmann::json obs_to_json(const Observation& o, const EnvConfig& cfg) {
    nlohmann::json v = nlohmann::json::array();
    for (int i = 0; i < o.visual.size; ++i) v.push_back(o.visual.test(i) ? 1 : 0);
    nlohmann::json w = nlohmann::json::array();
    for (int i = 0; i < o.audio.size; ++i) w.push_back(o.audio.test(i) ? 1 : 0);
    return {{"theta_norm", {o.theta_norm[0], o.theta_norm[1]}},
            {"dims",
             {{"vis_cols", cfg.vis_cols},
              {"vis_rows", cfg.vis_rows},
              {"vis_channels", cfg.vis_channels},
              {"aud_cols", cfg.aud_cols},
              {"aud_rows", cfg.aud_rows}}},
            {"V", std::move(v)},
            {"W", std::move(w)},
            {"F", o.face_count},
            {"Sigma", o.speech_in_view}};
}

}  // namespace gazerl
