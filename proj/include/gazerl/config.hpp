#pragma once
// JSON experiment configs. Parsing is strict: unknown keys are an error, so a
// typo in a sweep file fails loudly instead of silently training the default.
// Also provides a stable content hash used to cache finished training runs.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "gazerl/dqn.hpp"

namespace gazerl {

struct SweepAxis {
    std::string field;           // one of: window_len, gamma, lstm_hidden
    std::vector<double> values;
};

struct ExperimentSpec {
    EnvConfig env;
    TrainConfig train;
    nn::Arch arch = nn::Arch::LF;
    std::vector<std::uint64_t> seeds{1, 2, 3, 4, 5};
    std::vector<SweepAxis> sweep;
};

namespace cfg {

inline void fail(const std::string& msg) { throw std::runtime_error("config: " + msg); }

inline void require_object(const nlohmann::json& j, const char* where) {
    if (!j.is_object()) fail(std::string(where) + " must be a JSON object");
}

inline void check_keys(const nlohmann::json& j, const char* where,
                       std::initializer_list<const char*> allowed) {
    for (const auto& item : j.items()) {
        bool known = false;
        for (const char* k : allowed)
            if (item.key() == k) { known = true; break; }
        if (!known) fail("unknown key '" + item.key() + "' in section '" + where + "'");
    }
}

template <class T>
void read_field(const nlohmann::json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        fail(std::string("bad value for '") + key + "'");
    }
}

inline void parse_env(const nlohmann::json& j, EnvConfig& e) {
    require_object(j, "env");
    check_keys(j, "env",
               {"xi", "fov_half_w", "fov_half_h", "action_step_u", "action_step_v",
                "delta", "sigma", "tau", "p_move_in_fov", "p_move_far", "p_move_near",
                "max_persons", "forced_person_count", "static_persons",
                "p_speech_stay", "max_speakers", "always_speaking",
                "pose_subset", "pose_count", "pose_seed", "pose_file",
                "episode_length", "vis_cols", "vis_rows", "vis_channels",
                "aud_cols", "aud_rows", "miss_rate", "audio_false_rate"});
    read_field(j, "xi", e.xi);
    read_field(j, "fov_half_w", e.fov_half_w);
    read_field(j, "fov_half_h", e.fov_half_h);
    read_field(j, "action_step_u", e.action_step_u);
    read_field(j, "action_step_v", e.action_step_v);
    read_field(j, "delta", e.delta);
    read_field(j, "sigma", e.sigma);
    read_field(j, "tau", e.tau);
    read_field(j, "p_move_in_fov", e.p_move_in_fov);
    read_field(j, "p_move_far", e.p_move_far);
    read_field(j, "p_move_near", e.p_move_near);
    read_field(j, "max_persons", e.max_persons);
    read_field(j, "forced_person_count", e.forced_person_count);
    read_field(j, "static_persons", e.static_persons);
    read_field(j, "p_speech_stay", e.p_speech_stay);
    read_field(j, "max_speakers", e.max_speakers);
    read_field(j, "always_speaking", e.always_speaking);
    read_field(j, "pose_subset", e.pose_subset);
    read_field(j, "pose_count", e.pose_count);
    read_field(j, "pose_seed", e.pose_seed);
    read_field(j, "pose_file", e.pose_file);
    read_field(j, "episode_length", e.episode_length);
    read_field(j, "vis_cols", e.vis_cols);
    read_field(j, "vis_rows", e.vis_rows);
    read_field(j, "vis_channels", e.vis_channels);
    read_field(j, "aud_cols", e.aud_cols);
    read_field(j, "aud_rows", e.aud_rows);
    read_field(j, "miss_rate", e.miss_rate);
    read_field(j, "audio_false_rate", e.audio_false_rate);
}

inline void parse_train(const nlohmann::json& j, TrainConfig& t) {
    require_object(j, "train");
    check_keys(j, "train",
               {"gamma", "lr", "beta1", "beta2", "adam_eps", "batch_size",
                "total_steps", "eps_start", "eps_end", "eps_decay_steps",
                "replay_capacity", "warmup", "target_sync", "window_len",
                "lstm_hidden", "bn_momentum", "grad_clip", "alpha",
                "motor_skip_only", "score_window"});
    read_field(j, "gamma", t.gamma);
    read_field(j, "lr", t.lr);
    read_field(j, "beta1", t.beta1);
    read_field(j, "beta2", t.beta2);
    read_field(j, "adam_eps", t.adam_eps);
    read_field(j, "batch_size", t.batch_size);
    read_field(j, "total_steps", t.total_steps);
    read_field(j, "eps_start", t.eps_start);
    read_field(j, "eps_end", t.eps_end);
    read_field(j, "eps_decay_steps", t.eps_decay_steps);
    read_field(j, "replay_capacity", t.replay_capacity);
    read_field(j, "warmup", t.warmup);
    read_field(j, "target_sync", t.target_sync);
    read_field(j, "window_len", t.window_len);
    read_field(j, "lstm_hidden", t.lstm_hidden);
    read_field(j, "bn_momentum", t.bn_momentum);
    read_field(j, "grad_clip", t.grad_clip);
    read_field(j, "alpha", t.alpha);
    read_field(j, "motor_skip_only", t.motor_skip_only);
    read_field(j, "score_window", t.score_window);
}

inline const std::vector<std::string>& sweepable_fields() {
    static const std::vector<std::string> fields = {"window_len", "gamma", "lstm_hidden"};
    return fields;
}

inline void parse_sweep(const nlohmann::json& j, std::vector<SweepAxis>& sweep) {
    require_object(j, "sweep");
    for (const auto& item : j.items()) {
        bool known = false;
        for (const auto& f : sweepable_fields())
            if (f == item.key()) { known = true; break; }
        if (!known) fail("sweep axis '" + item.key() + "' does not name a sweepable field");
        SweepAxis axis;
        axis.field = item.key();
        if (!item.value().is_array() || item.value().empty())
            fail("sweep axis '" + item.key() + "' must be a non-empty array");
        for (const auto& v : item.value()) {
            if (!v.is_number()) fail("sweep axis '" + item.key() + "' has a non-numeric value");
            axis.values.push_back(v.get<double>());
        }
        sweep.push_back(std::move(axis));
    }
}

inline void parse_experiment(const nlohmann::json& j, ExperimentSpec& s) {
    require_object(j, "experiment");
    check_keys(j, "experiment", {"arch", "seeds", "sweep"});
    if (j.contains("arch")) {
        std::string name;
        read_field(j, "arch", name);
        s.arch = nn::arch_from_name(name);
    }
    if (j.contains("seeds")) {
        if (!j.at("seeds").is_array()) fail("'seeds' must be an array");
        s.seeds.clear();
        for (const auto& v : j.at("seeds")) {
            if (!v.is_number_unsigned() && !v.is_number_integer())
                fail("'seeds' entries must be non-negative integers");
            const auto sv = v.get<std::int64_t>();
            if (sv < 0) fail("'seeds' entries must be non-negative integers");
            s.seeds.push_back(static_cast<std::uint64_t>(sv));
        }
    }
    if (j.contains("sweep")) parse_sweep(j.at("sweep"), s.sweep);
}

inline void validate(const ExperimentSpec& s) {
    if (s.seeds.empty()) fail("seed list must not be empty");
    if (s.env.vis_cols < 1 || s.env.vis_rows < 1 || s.env.aud_cols < 1 || s.env.aud_rows < 1)
        fail("grid dimensions must be positive");
    if (s.env.episode_length < 1) fail("episode_length must be positive");
    if (s.env.fov_half_w <= 0.0 || s.env.fov_half_h <= 0.0) fail("view half-sizes must be positive");
    if (s.env.xi < 1.0) fail("xi must be >= 1");
    if (s.train.batch_size < 2) fail("batch_size must be >= 2 (batch norm needs it)");
    if (s.train.total_steps < 1) fail("total_steps must be positive");
    if (s.train.window_len < 1) fail("window_len must be positive");
    if (s.train.lstm_hidden < 1) fail("lstm_hidden must be positive");
    if (s.train.replay_capacity < s.train.batch_size) fail("replay_capacity must hold a batch");
    if (s.train.alpha != 0.0 && s.train.alpha != 1.0) fail("alpha must be 0 or 1");
    for (const auto& axis : s.sweep) {
        for (double v : axis.values) {
            if (axis.field == "gamma") {
                if (v < 0.0 || v >= 1.0) fail("sweep gamma values must lie in [0, 1)");
            } else {
                if (v < 1.0 || v != static_cast<double>(static_cast<long long>(v)))
                    fail("sweep " + axis.field + " values must be positive integers");
            }
        }
    }
}

inline nlohmann::json to_json(const EnvConfig& e) {
    nlohmann::json j;
    j["xi"] = e.xi;
    j["fov_half_w"] = e.fov_half_w;
    j["fov_half_h"] = e.fov_half_h;
    j["action_step_u"] = e.action_step_u;
    j["action_step_v"] = e.action_step_v;
    j["delta"] = e.delta;
    j["sigma"] = e.sigma;
    j["tau"] = e.tau;
    j["p_move_in_fov"] = e.p_move_in_fov;
    j["p_move_far"] = e.p_move_far;
    j["p_move_near"] = e.p_move_near;
    j["max_persons"] = e.max_persons;
    j["forced_person_count"] = e.forced_person_count;
    j["static_persons"] = e.static_persons;
    j["p_speech_stay"] = e.p_speech_stay;
    j["max_speakers"] = e.max_speakers;
    j["always_speaking"] = e.always_speaking;
    j["pose_subset"] = e.pose_subset;
    j["pose_count"] = e.pose_count;
    j["pose_seed"] = e.pose_seed;
    j["pose_file"] = e.pose_file;
    j["episode_length"] = e.episode_length;
    j["vis_cols"] = e.vis_cols;
    j["vis_rows"] = e.vis_rows;
    j["vis_channels"] = e.vis_channels;
    j["aud_cols"] = e.aud_cols;
    j["aud_rows"] = e.aud_rows;
    j["miss_rate"] = e.miss_rate;
    j["audio_false_rate"] = e.audio_false_rate;
    return j;
}

inline nlohmann::json to_json(const TrainConfig& t) {
    nlohmann::json j;
    j["gamma"] = t.gamma;
    j["lr"] = t.lr;
    j["beta1"] = t.beta1;
    j["beta2"] = t.beta2;
    j["adam_eps"] = t.adam_eps;
    j["batch_size"] = t.batch_size;
    j["total_steps"] = t.total_steps;
    j["eps_start"] = t.eps_start;
    j["eps_end"] = t.eps_end;
    j["eps_decay_steps"] = t.eps_decay_steps;
    j["replay_capacity"] = t.replay_capacity;
    j["warmup"] = t.warmup;
    j["target_sync"] = t.target_sync;
    j["window_len"] = t.window_len;
    j["lstm_hidden"] = t.lstm_hidden;
    j["bn_momentum"] = t.bn_momentum;
    j["grad_clip"] = t.grad_clip;
    j["alpha"] = t.alpha;
    j["motor_skip_only"] = t.motor_skip_only;
    j["score_window"] = t.score_window;
    return j;
}

inline nlohmann::json to_json(const ExperimentSpec& s) {
    nlohmann::json j;
    j["env"] = to_json(s.env);
    j["train"] = to_json(s.train);
    nlohmann::json ex;
    ex["arch"] = nn::arch_name(s.arch);
    ex["seeds"] = s.seeds;
    if (!s.sweep.empty()) {
        nlohmann::json sw;
        for (const auto& axis : s.sweep) sw[axis.field] = axis.values;
        ex["sweep"] = sw;
    }
    j["experiment"] = ex;
    return j;
}

inline ExperimentSpec parse_spec(const nlohmann::json& j) {
    ExperimentSpec s;
    require_object(j, "top level");
    check_keys(j, "top level", {"env", "train", "experiment"});
    if (j.contains("env")) parse_env(j.at("env"), s.env);
    if (j.contains("train")) parse_train(j.at("train"), s.train);
    if (j.contains("experiment")) parse_experiment(j.at("experiment"), s);
    validate(s);
    return s;
}

inline ExperimentSpec parse_spec_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        fail(std::string("invalid JSON: ") + e.what());
    }
    return parse_spec(j);
}

inline ExperimentSpec load_spec(const std::string& path) {
    std::ifstream in(path);
    if (!in) fail("cannot open '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    return parse_spec_text(buf.str());
}

// Content hash for caching finished runs. FNV-1a over the canonical JSON dump
// (nlohmann sorts object keys, and doubles round-trip exactly), so the same
// (env, train, arch, seed) always maps to the same key across processes.
inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 1099511628211ULL;
    }
    return h;
}

inline std::string run_key(const EnvConfig& e, const TrainConfig& t, nn::Arch arch,
                           std::uint64_t seed) {
    nlohmann::json j;
    j["arch"] = nn::arch_name(arch);
    j["env"] = to_json(e);
    j["seed"] = seed;
    j["train"] = to_json(t);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(j.dump())));
    return std::string(buf);
}

// One line per config field for report headers. Fields whose values we picked
// ourselves (no published value to copy) carry the "non-paper default" flag.
struct FieldNote {
    std::string name;
    std::string value;
    bool non_paper = false;
};

namespace detail {

inline std::string fmt_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}
inline std::string fmt_value(int v) { return std::to_string(v); }
inline std::string fmt_value(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt_value(bool v) { return v ? "true" : "false"; }

}  // namespace detail

inline std::vector<FieldNote> env_field_notes(const EnvConfig& e) {
    using detail::fmt_value;
    std::vector<FieldNote> out = {
        {"xi", fmt_value(e.xi), false},
        {"fov_half_w", fmt_value(e.fov_half_w), true},
        {"fov_half_h", fmt_value(e.fov_half_h), true},
        {"action_step_u", fmt_value(e.action_step_u), false},
        {"action_step_v", fmt_value(e.action_step_v), false},
        {"delta", fmt_value(e.delta), true},
        {"sigma", fmt_value(e.sigma), true},
        {"tau", fmt_value(e.tau), true},
        {"p_move_in_fov", fmt_value(e.p_move_in_fov), false},
        {"p_move_far", fmt_value(e.p_move_far), false},
        {"p_move_near", fmt_value(e.p_move_near), false},
        {"max_persons", fmt_value(e.max_persons), true},
        {"p_speech_stay", fmt_value(e.p_speech_stay), true},
        {"max_speakers", fmt_value(e.max_speakers), false},
        {"pose_subset", fmt_value(e.pose_subset), true},
        {"pose_count", fmt_value(e.pose_count), true},
        {"pose_seed", fmt_value(e.pose_seed), true},
        {"episode_length", fmt_value(e.episode_length), true},
        {"vis_cols", fmt_value(e.vis_cols), false},
        {"vis_rows", fmt_value(e.vis_rows), false},
        {"vis_channels", fmt_value(e.vis_channels), false},
        {"aud_cols", fmt_value(e.aud_cols), false},
        {"aud_rows", fmt_value(e.aud_rows), false},
        {"miss_rate", fmt_value(e.miss_rate), true},
        {"audio_false_rate", fmt_value(e.audio_false_rate), true},
    };
    if (e.forced_person_count >= 0)
        out.push_back({"forced_person_count", fmt_value(e.forced_person_count), true});
    if (e.static_persons) out.push_back({"static_persons", "true", true});
    if (e.always_speaking) out.push_back({"always_speaking", "true", true});
    if (!e.pose_file.empty()) out.push_back({"pose_file", e.pose_file, true});
    return out;
}

inline std::vector<FieldNote> train_field_notes(const TrainConfig& t) {
    using detail::fmt_value;
    std::vector<FieldNote> out = {
        {"gamma", fmt_value(t.gamma), false},
        {"lr", fmt_value(t.lr), true},
        {"beta1", fmt_value(t.beta1), true},
        {"beta2", fmt_value(t.beta2), true},
        {"adam_eps", fmt_value(t.adam_eps), true},
        {"batch_size", fmt_value(t.batch_size), false},
        {"total_steps", fmt_value(t.total_steps), false},
        {"eps_start", fmt_value(t.eps_start), false},
        {"eps_end", fmt_value(t.eps_end), false},
        {"eps_decay_steps", fmt_value(t.eps_decay_steps), false},
        {"replay_capacity", fmt_value(t.replay_capacity), true},
        {"warmup", fmt_value(t.warmup), true},
        {"target_sync", fmt_value(t.target_sync), true},
        {"window_len", fmt_value(t.window_len), false},
        {"lstm_hidden", fmt_value(t.lstm_hidden), false},
        {"bn_momentum", fmt_value(t.bn_momentum), true},
        {"grad_clip", fmt_value(t.grad_clip), true},
        {"alpha", fmt_value(t.alpha), false},
        {"score_window", fmt_value(t.score_window), false},
    };
    if (t.motor_skip_only) out.push_back({"motor_skip_only", "true", true});
    return out;
}

}  // namespace cfg

}  // namespace gazerl
