#include <catch2/catch_amalgamated.hpp>

#include "gazerl/baselines.hpp"
#include "gazerl/tabular.hpp"
#include "test_util.hpp"

using namespace gazerl;
using Catch::Approx;

namespace {

struct Cell {
    int channel, row, col;
};

Observation grid_obs(const EnvConfig& cfg, const std::vector<Cell>& vis,
                     const std::vector<GridCell>& aud, Vec2 theta = {0.0, 0.0}) {
    Observation o = zero_observation(cfg);
    for (const Cell& c : vis) o.visual.set(visual_cell_index(cfg, c.channel, c.row, c.col));
    for (const GridCell& c : aud) o.audio.set(audio_cell_index(cfg, c.row, c.col));
    o.theta_norm = {(theta.u + 1.0) / 2.0, (theta.v + 1.0) / 2.0};
    return o;
}

}  // namespace

TEST_CASE("baseline names round-trip", "[baselines]") {
    for (BaselineKind k : kAllBaselines) REQUIRE(baseline_from_name(baseline_name(k)) == k);
    REQUIRE(baseline_name(BaselineKind::kAudioSweep) == std::string("audio-sweep"));
    REQUIRE_THROWS_AS(baseline_from_name("nonsense"), std::invalid_argument);
}

TEST_CASE("greedy stepping picks the dominant axis and knows when to stop", "[baselines]") {
    EnvConfig cfg;  // steps 0.15 / 0.10
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.5, 0.0}, cfg) == kActRight);
    REQUIRE(greedy_step_toward({0.5, 0.0}, {0.0, 0.0}, cfg) == kActLeft);
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.05, 0.3}, cfg) == kActUp);
    REQUIRE(greedy_step_toward({0.0, 0.3}, {0.05, 0.0}, cfg) == kActDown);
    // Ties between the axes go horizontal.
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.2, 0.2}, cfg) == kActRight);
    REQUIRE(greedy_step_toward({0.0, 0.0}, {-0.2, 0.2}, cfg) == kActLeft);
    // Within half a step of the target the policy parks.
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.0749, 0.0}, cfg) == kActStay);
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.0751, 0.0}, cfg) == kActRight);
    REQUIRE(greedy_step_toward({0.0, 0.0}, {0.0, 0.049}, cfg) == kActStay);
}

TEST_CASE("face tracking centers the nearest nose on the grid", "[baselines]") {
    EnvConfig cfg;  // 7x5 grid, center cell (2, 3)
    BaselinePolicy pol(BaselineKind::kTrackRand);
    Rng rng(3);

    auto act = [&](const Observation& o) { return pol.act(o, cfg, rng); };

    // A nose at or next to the center cell means hold still.
    REQUIRE(act(grid_obs(cfg, {{kNose, 2, 3}}, {})).action == kActStay);
    REQUIRE(act(grid_obs(cfg, {{kNose, 3, 4}}, {})).action == kActStay);
    REQUIRE(act(grid_obs(cfg, {{kNose, 1, 2}}, {})).action == kActStay);

    // Farther out, step along the dominant grid offset; row 0 is the top.
    REQUIRE(act(grid_obs(cfg, {{kNose, 2, 0}}, {})).action == kActLeft);
    REQUIRE(act(grid_obs(cfg, {{kNose, 2, 6}}, {})).action == kActRight);
    REQUIRE(act(grid_obs(cfg, {{kNose, 0, 3}}, {})).action == kActUp);
    REQUIRE(act(grid_obs(cfg, {{kNose, 4, 3}}, {})).action == kActDown);
    // Grid-offset ties go horizontal too.
    REQUIRE(act(grid_obs(cfg, {{kNose, 0, 1}}, {})).action == kActLeft);

    // Of several noses the one nearest the grid center wins...
    REQUIRE(act(grid_obs(cfg, {{kNose, 2, 2}, {kNose, 0, 6}}, {})).action == kActStay);
    // ...and equal distances resolve in row-major scan order.
    REQUIRE(act(grid_obs(cfg, {{kNose, 0, 3}, {kNose, 2, 1}}, {})).action == kActUp);

    // The decision also carries the nose cell's world position for the
    // infinite-speed protocol.
    PolicyDecision d = act(grid_obs(cfg, {{kNose, 2, 0}}, {}, {0.5, 0.0}));
    REQUIRE(d.has_target);
    REQUIRE(d.target ==
            clamp_box(visual_cell_center(cfg, {0.5, 0.0}, 2.0, 0.0), 1.0, 1.0));
}

TEST_CASE("faceless fallbacks differ per tracking variant", "[baselines]") {
    EnvConfig cfg;
    Rng rng(9);
    const Observation blank = grid_obs(cfg, {}, {}, {0.5, 0.0});

    SECTION("drift back to the field center") {
        BaselinePolicy pol(BaselineKind::kTrackCenter);
        PolicyDecision d = pol.act(blank, cfg, rng);
        REQUIRE(d.action == kActLeft);
        REQUIRE(d.has_target);
        REQUIRE(d.target == Vec2{0.0, 0.0});
    }
    SECTION("a detected body part pulls the gaze up") {
        BaselinePolicy pol(BaselineKind::kTrackBody);
        REQUIRE(pol.act(grid_obs(cfg, {{kRWrist, 4, 6}}, {}), cfg, rng).action == kActUp);
        REQUIRE(pol.act(grid_obs(cfg, {{kLAnkle, 0, 0}}, {}), cfg, rng).action == kActUp);
        // A nose is not a body part: tracking takes precedence anyway.
        REQUIRE(pol.act(grid_obs(cfg, {{kNose, 2, 3}, {kRWrist, 4, 6}}, {}), cfg, rng).action ==
                kActStay);
    }
    SECTION("remembered speech guides the audio variant") {
        BaselinePolicy pol(BaselineKind::kTrackAudio);
        // The memory records the heard cell even while a face is tracked.
        PolicyDecision tracked =
            pol.act(grid_obs(cfg, {{kNose, 2, 3}}, {{2, 2}}), cfg, rng);
        REQUIRE(tracked.action == kActStay);

        PolicyDecision d = pol.act(blank, cfg, rng);
        REQUIRE(d.action == kActLeft);  // heard cell center sits at u = -2/7
        REQUIRE(d.has_target);
        REQUIRE(d.target == audio_cell_center(cfg, 2, 2));

        pol.reset();
        REQUIRE_FALSE(pol.heard_ever);
    }
    SECTION("random fallbacks draw from the policy stream") {
        for (BaselineKind k : {BaselineKind::kTrackRand, BaselineKind::kTrackBody,
                               BaselineKind::kTrackAudio, BaselineKind::kRandom}) {
            BaselinePolicy pol(k);
            Rng a(42), b(42);
            const int first = pol.act(blank, cfg, a).action;
            BaselinePolicy pol2(k);
            REQUIRE(pol2.act(blank, cfg, b).action == first);
            std::array<int, kNumActions> hist{};
            Rng r(7);
            BaselinePolicy pol3(k);
            for (int i = 0; i < 5000; ++i) ++hist[pol3.act(blank, cfg, r).action];
            for (int a2 = 0; a2 < kNumActions; ++a2) REQUIRE(hist[a2] > 800);
        }
    }
}

TEST_CASE("the sweep policy chases sound, then faces, then pans", "[baselines]") {
    EnvConfig cfg;
    cfg.fov_half_w = 0.40;  // wide view: the nose-centroid pull below needs
    cfg.fov_half_h = 0.45;  // cell offsets bigger than half an action step
    Rng rng(5);
    BaselinePolicy pol(BaselineKind::kAudioSweep);

    // Current speech wins: the nearest active audio cell sets the course.
    PolicyDecision d = pol.act(grid_obs(cfg, {}, {{2, 2}}), cfg, rng);
    REQUIRE(d.action == kActLeft);
    REQUIRE(d.target == audio_cell_center(cfg, 2, 2));
    d = pol.act(grid_obs(cfg, {}, {{2, 2}, {2, 6}}), cfg, rng);
    REQUIRE(d.target == audio_cell_center(cfg, 2, 2));  // nearer of the two

    // Sound beats a visible face.
    d = pol.act(grid_obs(cfg, {{kNose, 2, 6}}, {{2, 2}}), cfg, rng);
    REQUIRE(d.action == kActLeft);

    // Silent: the nose centroid is the target. Two noses straddling the
    // upper half pull the gaze up.
    pol.reset();
    d = pol.act(grid_obs(cfg, {{kNose, 0, 3}, {kNose, 2, 3}}, {}), cfg, rng);
    REQUIRE(d.action == kActUp);
    REQUIRE(d.has_target);

    // Nothing at all: pan left until the motor limit, then turn around.
    pol.reset();
    const Observation blank_mid = grid_obs(cfg, {}, {}, {0.0, 0.0});
    const Observation blank_left = grid_obs(cfg, {}, {}, {-1.0, 0.0});
    const Observation blank_right = grid_obs(cfg, {}, {}, {1.0, 0.0});
    REQUIRE(pol.act(blank_mid, cfg, rng).action == kActLeft);
    REQUIRE(pol.act(blank_left, cfg, rng).action == kActRight);
    REQUIRE(pol.act(blank_mid, cfg, rng).action == kActRight);  // direction persists
    REQUIRE(pol.act(blank_right, cfg, rng).action == kActLeft);
    d = pol.act(blank_mid, cfg, rng);
    REQUIRE(d.action == kActLeft);
    REQUIRE(d.target == Vec2{-1.0, 0.0});
}

TEST_CASE("an empty room scores zero for every policy", "[baselines]") {
    EnvConfig cfg;
    cfg.forced_person_count = 0;
    cfg.audio_false_rate = 0.0;  // no phantom sound either
    cfg.episode_length = 30;
    for (BaselineKind k : kAllBaselines) {
        EvalResult r = evaluate_baseline(k, cfg, 1.0, 77, 3);
        REQUIRE(r.mean_reward == 0.0);
        REQUIRE(r.episodes == 3);
    }
}

TEST_CASE("baseline evaluation is reproducible per seed", "[baselines]") {
    EnvConfig cfg;
    cfg.fov_half_w = 0.40;  // wide view so rewards are plentiful enough that
    cfg.fov_half_h = 0.45;  // different seeds cannot tie at all-zero
    cfg.episode_length = 40;
    for (BaselineKind k : {BaselineKind::kRandom, BaselineKind::kTrackAudio}) {
        EvalResult a = evaluate_baseline(k, cfg, 1.0, 2024, 4);
        EvalResult b = evaluate_baseline(k, cfg, 1.0, 2024, 4);
        REQUIRE(a.episode_means == b.episode_means);
        EvalResult c = evaluate_baseline(k, cfg, 1.0, 2025, 4);
        REQUIRE(a.episode_means != c.episode_means);
        REQUIRE(a.mean_reward >= 0.0);
        REQUIRE(a.mean_reward <= 4.0);
    }
}

TEST_CASE("the center-drift tracker locks onto a static face", "[baselines]") {
    // One frozen person; the tracker drifts toward the middle, picks up the
    // face on the way and parks with it centered, collecting reward forever.
    EnvConfig cfg = micro_env_config();
    cfg.fov_half_w = 0.40;  // wide enough to pick the face up while drifting
    cfg.fov_half_h = 0.45;
    PoseLibrary lib = make_pose_library(cfg);
    EnvState env;
    env.theta = {0.9, 0.8};
    PersonState person;
    person.h = {0.25, -0.2};
    person.pose = testutil::nose_only_pose();
    person.speaking = true;
    env.persons = {person};

    BaselinePolicy pol(BaselineKind::kTrackCenter);
    Rng pol_rng(derive_seed(1, kEvalPolicyTag));
    Rng env_rng(derive_seed(1, kEvalEpisodeTag));
    std::vector<int> actions;
    std::vector<double> rewards;
    Observation obs = make_observation(env, cfg, env_rng);
    for (int t = 0; t < 60; ++t) {
        PolicyDecision d = pol.act(obs, cfg, pol_rng);
        actions.push_back(d.action);
        env_step(env, d.action, cfg, lib, env_rng);
        obs = make_observation(env, cfg, env_rng);
        rewards.push_back(compute_reward(obs, 0.0));
    }
    for (int t = 45; t < 60; ++t) {
        REQUIRE(actions[t] == kActStay);
        REQUIRE(rewards[t] >= 1.0);
    }
}

TEST_CASE("infinite speed teleports the gaze onto the policy target", "[baselines]") {
    EnvConfig cfg = micro_env_config();
    cfg.fov_half_w = 0.40;  // wide enough to pick the face up while drifting
    cfg.fov_half_h = 0.45;
    PoseLibrary lib = make_pose_library(cfg);
    EnvState env;
    env.theta = {0.9, 0.8};
    env.persons.clear();

    BaselinePolicy pol(BaselineKind::kTrackCenter);
    Rng pol_rng(1), env_rng(2);
    Observation obs = make_observation(env, cfg, env_rng);
    PolicyDecision d = pol.act(obs, cfg, pol_rng);
    REQUIRE(d.has_target);
    env_step_teleport(env, d.target, cfg, lib, env_rng);
    REQUIRE(env.theta == Vec2{0.0, 0.0});

    // Through the evaluator, removing the speed limit can only help a
    // point-chasing policy; with constant speech the gap is decisive.
    EnvConfig loud = micro_env_config();
    loud.static_persons = false;
    loud.episode_length = 60;
    EvalResult slow = evaluate_baseline(BaselineKind::kAudioSweep, loud, 1.0, 11, 8,
                                        SpeedMode::kEqual);
    EvalResult fast = evaluate_baseline(BaselineKind::kAudioSweep, loud, 1.0, 11, 8,
                                        SpeedMode::kInfinite);
    REQUIRE(fast.mean_reward > slow.mean_reward);
}
