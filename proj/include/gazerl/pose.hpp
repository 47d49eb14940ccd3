#pragma once

#include <fstream>
#include <limits>
#include <sstream>

#include <json.hpp>

#include "gazerl/common.hpp"

namespace gazerl {

constexpr int kNumJoints = 18;

/// COCO 18-part landmark indices (OpenPose ordering).
enum Joint : int {
    kNose = 0,
    kNeck = 1,
    kRShoulder = 2,
    kRElbow = 3,
    kRWrist = 4,
    kLShoulder = 5,
    kLElbow = 6,
    kLWrist = 7,
    kRHip = 8,
    kRKnee = 9,
    kRAnkle = 10,
    kLHip = 11,
    kLKnee = 12,
    kLAnkle = 13,
    kREye = 14,
    kLEye = 15,
    kREar = 16,
    kLEar = 17,
};

inline const char* joint_name(int j) {
    static const char* names[kNumJoints] = {
        "nose",      "neck",      "r_shoulder", "r_elbow", "r_wrist", "l_shoulder",
        "l_elbow",   "l_wrist",   "r_hip",      "r_knee",  "r_ankle", "l_hip",
        "l_knee",    "l_ankle",   "r_eye",      "l_eye",   "r_ear",   "l_ear"};
    return names[j];
}

/// One landmark in standardized pose-local coordinates (+u right, +v DOWN,
/// image convention). Invisible joints are stored as (0, 0, visible=false).
struct PoseJoint {
    double u = 0.0;
    double v = 0.0;
    bool visible = false;
};

/// A standardized body pose: nose-centered, torso height 1, clamped to [-1,1]^2.
struct Pose {
    std::array<PoseJoint, kNumJoints> joints;

    bool operator==(const Pose& o) const {
        for (int j = 0; j < kNumJoints; ++j) {
            if (joints[j].visible != o.joints[j].visible) return false;
            if (joints[j].visible &&
                (joints[j].u != o.joints[j].u || joints[j].v != o.joints[j].v))
                return false;
        }
        return true;
    }
};

/// Scale factor from pose-local units to world units: the [-1,1]^2 pose box
/// maps onto a 0.5 x 0.5 world box around the person center.
constexpr double kPoseWorldScale = 0.25;

/// World position of a joint for a person centered at `center`.
/// Pose-local +v points down while world +v points up, so v flips sign.
inline Vec2 joint_world(const Pose& pose, int j, Vec2 center) {
    return {center.u + pose.joints[j].u * kPoseWorldScale,
            center.v - pose.joints[j].v * kPoseWorldScale};
}

/// True if the two poses share at least one visible joint, i.e. their
/// distance is defined.
inline bool poses_comparable(const Pose& a, const Pose& b) {
    for (int j = 0; j < kNumJoints; ++j) {
        if (a.joints[j].visible && b.joints[j].visible) return true;
    }
    return false;
}

/// Mean Euclidean distance over joints visible in both poses. Comparing two
/// poses with no shared visible joint is a caller bug, not a large distance.
inline double pose_distance(const Pose& a, const Pose& b) {
    double sum = 0.0;
    int shared = 0;
    for (int j = 0; j < kNumJoints; ++j) {
        if (!a.joints[j].visible || !b.joints[j].visible) continue;
        sum += std::hypot(a.joints[j].u - b.joints[j].u, a.joints[j].v - b.joints[j].v);
        ++shared;
    }
    if (shared == 0) throw std::domain_error("pose_distance: poses share no visible joint");
    return sum / shared;
}

/// Centers a raw pose on the nose (falling back to neck, then to the visible
/// centroid), rescales so the neck-to-mid-hip distance is 1, and clamps each
/// joint to [-1,1]^2. Poses without a measurable torso keep their raw scale.
inline Pose standardize_pose(const Pose& raw) {
    Vec2 center{0.0, 0.0};
    if (raw.joints[kNose].visible) {
        center = {raw.joints[kNose].u, raw.joints[kNose].v};
    } else if (raw.joints[kNeck].visible) {
        center = {raw.joints[kNeck].u, raw.joints[kNeck].v};
    } else {
        int n = 0;
        for (const auto& jt : raw.joints) {
            if (!jt.visible) continue;
            center.u += jt.u;
            center.v += jt.v;
            ++n;
        }
        if (n > 0) {
            center.u /= n;
            center.v /= n;
        }
    }

    double torso = 0.0;
    if (raw.joints[kNeck].visible) {
        Vec2 hip{0.0, 0.0};
        int nh = 0;
        for (int j : {kRHip, kLHip}) {
            if (!raw.joints[j].visible) continue;
            hip.u += raw.joints[j].u;
            hip.v += raw.joints[j].v;
            ++nh;
        }
        if (nh > 0) {
            hip.u /= nh;
            hip.v /= nh;
            torso = std::hypot(raw.joints[kNeck].u - hip.u, raw.joints[kNeck].v - hip.v);
        }
    }
    double scale = torso > 1e-12 ? 1.0 / torso : 1.0;

    Pose out;
    for (int j = 0; j < kNumJoints; ++j) {
        if (!raw.joints[j].visible) continue;
        out.joints[j].visible = true;
        out.joints[j].u = clamp((raw.joints[j].u - center.u) * scale, -1.0, 1.0);
        out.joints[j].v = clamp((raw.joints[j].v - center.v) * scale, -1.0, 1.0);
    }
    return out;
}

using PoseLibrary = std::vector<Pose>;

/// Draws `m` distinct library indices and returns the candidate closest to
/// `current` (first drawn wins ties). Candidates sharing no visible joint
/// with `current` are skipped; if every draw is incomparable the person
/// simply keeps the pose they have. With m = |library| this scans the whole
/// library, so a pose that is present in it maps to itself.
inline const Pose& sample_next_pose(const PoseLibrary& lib, const Pose& current, int m, Rng& rng) {
    if (lib.empty()) throw std::invalid_argument("sample_next_pose: empty pose library");
    m = std::min<int>(std::max(m, 1), static_cast<int>(lib.size()));
    std::vector<int> picks = sample_without_replacement(rng, static_cast<int>(lib.size()), m);
    const Pose* best = &current;
    double best_d = std::numeric_limits<double>::infinity();
    for (int i = 0; i < m; ++i) {
        const Pose& cand = lib[picks[i]];
        if (!poses_comparable(current, cand)) continue;
        double d = pose_distance(current, cand);
        if (d < best_d) {
            best_d = d;
            best = &cand;
        }
    }
    return *best;
}

namespace detail {

inline void synth_limb(Pose& p, int from, int to, double len, double angle, Rng& rng,
                       double keep_prob) {
    // angle is measured from straight down (+v), in radians.
    p.joints[to].u = p.joints[from].u + len * std::sin(angle);
    p.joints[to].v = p.joints[from].v + len * std::cos(angle);
    p.joints[to].visible = p.joints[from].visible && uniform01(rng) < keep_prob;
}

}  // namespace detail

/// Generates one plausible frontal stick figure in image coordinates
/// (+v down) and standardizes it. Visibility is sampled per joint so the
/// library contains partially observed bodies, but the neck and at least one
/// hip are always kept to anchor standardization.
inline Pose synth_pose(Rng& rng) {
    Pose p;
    auto& j = p.joints;

    double lean = uniform_in(rng, -0.18, 0.18);  // whole-body lean, radians

    j[kNeck] = {0.0, 0.0, true};
    double torso_len = 1.0;
    double hip_w = uniform_in(rng, 0.28, 0.40);
    Vec2 mid_hip{torso_len * std::sin(lean), torso_len * std::cos(lean)};
    j[kRHip] = {mid_hip.u - hip_w / 2, mid_hip.v, uniform01(rng) < 0.9};
    j[kLHip] = {mid_hip.u + hip_w / 2, mid_hip.v, uniform01(rng) < 0.9};
    if (!j[kRHip].visible && !j[kLHip].visible) j[kRHip].visible = true;

    double head_len = uniform_in(rng, 0.22, 0.30);
    double head_tilt = lean + uniform_in(rng, -0.25, 0.25);
    j[kNose] = {-head_len * std::sin(head_tilt) + uniform_in(rng, -0.03, 0.03),
                -head_len * std::cos(head_tilt), uniform01(rng) < 0.9};
    j[kREye] = {j[kNose].u - 0.06, j[kNose].v - 0.05, uniform01(rng) < 0.85};
    j[kLEye] = {j[kNose].u + 0.06, j[kNose].v - 0.05, uniform01(rng) < 0.85};
    j[kREar] = {j[kNose].u - 0.12, j[kNose].v + 0.02, uniform01(rng) < 0.7};
    j[kLEar] = {j[kNose].u + 0.12, j[kNose].v + 0.02, uniform01(rng) < 0.7};

    double shoulder_w = uniform_in(rng, 0.40, 0.55);
    j[kRShoulder] = {-shoulder_w / 2, 0.04, uniform01(rng) < 0.95};
    j[kLShoulder] = {shoulder_w / 2, 0.04, uniform01(rng) < 0.95};

    double upper_arm = uniform_in(rng, 0.30, 0.38);
    double fore_arm = uniform_in(rng, 0.26, 0.34);
    detail::synth_limb(p, kRShoulder, kRElbow, upper_arm, uniform_in(rng, -0.9, 0.5), rng, 0.85);
    detail::synth_limb(p, kRElbow, kRWrist, fore_arm, uniform_in(rng, -1.6, 0.6), rng, 0.8);
    detail::synth_limb(p, kLShoulder, kLElbow, upper_arm, uniform_in(rng, -0.5, 0.9), rng, 0.85);
    detail::synth_limb(p, kLElbow, kLWrist, fore_arm, uniform_in(rng, -0.6, 1.6), rng, 0.8);

    double thigh = uniform_in(rng, 0.42, 0.52);
    double shin = uniform_in(rng, 0.38, 0.48);
    detail::synth_limb(p, kRHip, kRKnee, thigh, lean + uniform_in(rng, -0.3, 0.3), rng, 0.7);
    detail::synth_limb(p, kRKnee, kRAnkle, shin, lean + uniform_in(rng, -0.4, 0.3), rng, 0.65);
    detail::synth_limb(p, kLHip, kLKnee, thigh, lean + uniform_in(rng, -0.3, 0.3), rng, 0.7);
    detail::synth_limb(p, kLKnee, kLAnkle, shin, lean + uniform_in(rng, -0.3, 0.4), rng, 0.65);

    for (auto& jt : j) {
        if (!jt.visible) jt = PoseJoint{};
    }
    return standardize_pose(p);
}

inline PoseLibrary synth_pose_library(int count, std::uint64_t seed) {
    Rng rng(derive_seed(seed, "pose-library"));
    PoseLibrary lib;
    lib.reserve(count);
    for (int i = 0; i < count; ++i) lib.push_back(synth_pose(rng));
    return lib;
}

/// Pose files are JSONL: one {"joints": [[u, v, visible] x 18]} object per line.
inline PoseLibrary load_pose_library(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open pose file: " + path);
    PoseLibrary lib;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json doc;
        try {
            doc = nlohmann::json::parse(line);
        } catch (const std::exception& e) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": bad JSON: " + e.what());
        }
        if (!doc.contains("joints") || !doc["joints"].is_array() ||
            doc["joints"].size() != kNumJoints) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": expected a \"joints\" array of " +
                                     std::to_string(kNumJoints) + " [u, v, visible] triples");
        }
        Pose raw;
        for (int j = 0; j < kNumJoints; ++j) {
            const auto& t = doc["joints"][j];
            if (!t.is_array() || t.size() != 3) {
                throw std::runtime_error(path + ":" + std::to_string(line_no) + ": joint " +
                                         std::to_string(j) + " is not an [u, v, visible] triple");
            }
            raw.joints[j].u = t[0].get<double>();
            raw.joints[j].v = t[1].get<double>();
            raw.joints[j].visible = t[2].get<double>() != 0.0;
            if (!raw.joints[j].visible) raw.joints[j] = PoseJoint{};
        }
        bool any_visible = false;
        for (const auto& jt : raw.joints) any_visible = any_visible || jt.visible;
        if (!any_visible) {
            throw std::runtime_error(path + ":" + std::to_string(line_no) +
                                     ": pose has no visible joints");
        }
        lib.push_back(standardize_pose(raw));
    }
    if (lib.empty()) throw std::runtime_error(path + ": pose file contains no poses");
    return lib;
}

inline void save_pose_library(const PoseLibrary& lib, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write pose file: " + path);
    for (const auto& pose : lib) {
        nlohmann::json joints = nlohmann::json::array();
        for (const auto& jt : pose.joints) {
            joints.push_back({jt.u, jt.v, jt.visible ? 1 : 0});
        }
        out << nlohmann::json{{"joints", joints}}.dump() << "\n";
    }
}

}  // namespace gazerl
