#include <catch2/catch_amalgamated.hpp>

#include "gazerl/pose.hpp"
#include "test_util.hpp"

using namespace gazerl;
using testutil::TempFile;

namespace {

Pose pose_with(std::initializer_list<std::tuple<int, double, double>> joints) {
    Pose p;
    for (auto [j, u, v] : joints) p.joints[j] = {u, v, true};
    return p;
}

}  // namespace

TEST_CASE("pose distance identity and visibility weighting", "[pose]") {
    Pose a = pose_with({{kNose, 0.1, -0.2}, {kNeck, 0.0, 0.1}, {kRWrist, 0.5, 0.4}});
    CHECK(pose_distance(a, a) == 0.0);

    SECTION("single shared joint displaced by (3,4) gives 5") {
        Pose p = testutil::single_joint_pose(kNeck, 0.0, 0.0);
        Pose q = testutil::single_joint_pose(kNeck, 3.0, 4.0);
        // give q an extra joint p cannot see; it must not contribute
        q.joints[kRWrist] = {100.0, 100.0, true};
        CHECK(pose_distance(p, q) == Catch::Approx(5.0));
    }

    SECTION("two shared joints with distances 0 and 10 average to 5") {
        Pose p = pose_with({{kNeck, 0.0, 0.0}, {kNose, 1.0, 1.0}});
        Pose q = pose_with({{kNeck, 0.0, 0.0}, {kNose, 1.0, 11.0}});
        CHECK(pose_distance(p, q) == Catch::Approx(5.0));
    }

    SECTION("invisible joints' coordinates are ignored") {
        Pose p = pose_with({{kNeck, 0.2, 0.3}});
        Pose q1 = pose_with({{kNeck, 0.5, 0.7}});
        Pose q2 = q1;
        q2.joints[kLAnkle] = {123.0, -456.0, false};
        p.joints[kREar] = {9.0, 9.0, false};
        CHECK(pose_distance(p, q1) == pose_distance(p, q2));
    }

    SECTION("symmetric over random pose pairs") {
        Rng rng(42);
        for (int i = 0; i < 50; ++i) {
            Pose p = synth_pose(rng);
            Pose q = synth_pose(rng);
            REQUIRE(poses_comparable(p, q));  // synthetic poses always share the neck
            CHECK(pose_distance(p, q) == pose_distance(q, p));
        }
    }

    SECTION("no shared visible joint is an error") {
        Pose p = testutil::single_joint_pose(kNose, 0.0, 0.0);
        Pose q = testutil::single_joint_pose(kLAnkle, 0.0, 0.0);
        CHECK_FALSE(poses_comparable(p, q));
        CHECK_THROWS_AS(pose_distance(p, q), std::domain_error);
    }
}

TEST_CASE("standardization centers, scales and clamps", "[pose]") {
    SECTION("nose becomes the origin and torso height becomes 1") {
        Pose raw = pose_with({{kNose, 2.0, 1.0},
                              {kNeck, 2.0, 1.4},
                              {kRHip, 1.9, 1.8},
                              {kLHip, 2.1, 1.8}});
        Pose std = standardize_pose(raw);
        CHECK(std.joints[kNose].u == Catch::Approx(0.0));
        CHECK(std.joints[kNose].v == Catch::Approx(0.0));
        // neck-to-midhip was 0.4 raw, so everything scales by 2.5
        CHECK(std.joints[kNeck].v == Catch::Approx(1.0));  // (1.4 - 1.0) * 2.5
        // hips land at v = 2.0 pre-clamp and must be clamped to the box
        CHECK(std.joints[kRHip].v == 1.0);
        CHECK(std.joints[kLHip].v == 1.0);
    }

    SECTION("neck is the fallback center when the nose is hidden") {
        Pose raw = pose_with({{kNeck, 5.0, -3.0}, {kRShoulder, 5.2, -3.0}});
        Pose std = standardize_pose(raw);
        CHECK(std.joints[kNeck].u == Catch::Approx(0.0));
        CHECK(std.joints[kNeck].v == Catch::Approx(0.0));
        CHECK(std.joints[kRShoulder].u == Catch::Approx(0.2));
    }

    SECTION("visible centroid is the last-resort center") {
        Pose raw = pose_with({{kRWrist, 1.0, 0.0}, {kLWrist, 3.0, 0.0}});
        Pose std = standardize_pose(raw);
        CHECK(std.joints[kRWrist].u == Catch::Approx(-1.0));
        CHECK(std.joints[kLWrist].u == Catch::Approx(1.0));
    }

    SECTION("all coordinates land in the unit box") {
        Rng rng(7);
        for (int i = 0; i < 200; ++i) {
            Pose p = synth_pose(rng);
            for (const auto& jt : p.joints) {
                if (!jt.visible) continue;
                CHECK(std::abs(jt.u) <= 1.0);
                CHECK(std::abs(jt.v) <= 1.0);
            }
        }
    }
}

TEST_CASE("synthetic pose library", "[pose]") {
    SECTION("deterministic given the seed") {
        PoseLibrary a = synth_pose_library(100, 7);
        PoseLibrary b = synth_pose_library(100, 7);
        REQUIRE(a.size() == 100);
        CHECK(a == b);
        PoseLibrary c = synth_pose_library(100, 8);
        CHECK(a != c);
    }

    SECTION("count one works") {
        CHECK(synth_pose_library(1, 3).size() == 1);
    }

    SECTION("every pose is self-distance zero with an anchored torso") {
        PoseLibrary lib = synth_pose_library(64, 11);
        for (const auto& p : lib) {
            CHECK(pose_distance(p, p) == 0.0);
            CHECK(p.joints[kNeck].visible);
            CHECK((p.joints[kRHip].visible || p.joints[kLHip].visible));
        }
    }
}

TEST_CASE("pose continuity sampling", "[pose]") {
    PoseLibrary lib = synth_pose_library(64, 5);

    SECTION("full-library subset returns the current pose when it is a member") {
        Rng rng(3);
        const Pose& out = sample_next_pose(lib, lib[17], static_cast<int>(lib.size()), rng);
        CHECK(out == lib[17]);
    }

    SECTION("deterministic given the rng state") {
        Rng r1(99), r2(99);
        CHECK(sample_next_pose(lib, lib[0], 8, r1) == sample_next_pose(lib, lib[0], 8, r2));
    }

    SECTION("result is always a library member or the current pose") {
        Rng rng(123);
        Pose outside = testutil::single_joint_pose(kNeck, 0.123, 0.456);
        for (int i = 0; i < 200; ++i) {
            Pose out = sample_next_pose(lib, outside, 8, rng);
            bool in_lib = false;
            for (const auto& p : lib) in_lib = in_lib || p == out;
            CHECK((in_lib || out == outside));
        }
    }

    SECTION("expected distance to the current pose shrinks as M grows") {
        Rng rng(2024);
        const int trials = 1500;
        double mean_d[3] = {0, 0, 0};
        const int ms[3] = {1, 8, 64};
        for (int i = 0; i < trials; ++i) {
            const Pose& cur = lib[uniform_int(rng, 0, static_cast<int>(lib.size()) - 1)];
            for (int k = 0; k < 3; ++k)
                mean_d[k] += pose_distance(cur, sample_next_pose(lib, cur, ms[k], rng));
        }
        CHECK(mean_d[0] > mean_d[1]);
        CHECK(mean_d[1] > mean_d[2]);
        CHECK(mean_d[2] == 0.0);  // M = |lib| always finds the pose itself
    }

    SECTION("incomparable candidates are skipped, not preferred") {
        // library of poses that share nothing with the current pose, plus one
        // that does; only the comparable one (or `current`) may come back
        PoseLibrary mixed;
        for (int i = 0; i < 7; ++i)
            mixed.push_back(testutil::single_joint_pose(kLAnkle, 0.1 * i, 0.0));
        Pose friendly = testutil::single_joint_pose(kNeck, 0.9, 0.9);
        mixed.push_back(friendly);
        Pose cur = testutil::single_joint_pose(kNeck, 0.0, 0.0);
        Rng rng(1);
        for (int i = 0; i < 100; ++i) {
            Pose out = sample_next_pose(mixed, cur, static_cast<int>(mixed.size()), rng);
            CHECK(out == friendly);  // always drawn, always the only comparable pick
        }
        PoseLibrary hostile(mixed.begin(), mixed.begin() + 7);
        for (int i = 0; i < 100; ++i) {
            Pose out = sample_next_pose(hostile, cur, static_cast<int>(hostile.size()), rng);
            CHECK(out == cur);
        }
    }
}

TEST_CASE("pose library files", "[pose]") {
    auto line_for = [](const Pose& p) {
        nlohmann::json joints = nlohmann::json::array();
        for (const auto& jt : p.joints) joints.push_back({jt.u, jt.v, jt.visible ? 1 : 0});
        return nlohmann::json{{"joints", joints}}.dump();
    };

    SECTION("three valid lines load as three poses") {
        Rng rng(9);
        TempFile f("poses");
        std::string text;
        for (int i = 0; i < 3; ++i) text += line_for(synth_pose(rng)) + "\n";
        f.write(text);
        CHECK(load_pose_library(f.path()).size() == 3);
    }

    SECTION("a pose with no visible joints is rejected with its line number") {
        TempFile f("poses");
        Pose blank;  // all joints invisible
        f.write(line_for(testutil::nose_only_pose()) + "\n" + line_for(blank) + "\n");
        CHECK_THROWS_WITH(load_pose_library(f.path()),
                          Catch::Matchers::ContainsSubstring(":2:") &&
                              Catch::Matchers::ContainsSubstring("no visible joints"));
    }

    SECTION("empty file is an error") {
        TempFile f("poses");
        f.write("");
        CHECK_THROWS_WITH(load_pose_library(f.path()),
                          Catch::Matchers::ContainsSubstring("no poses"));
    }

    SECTION("missing file is an error") {
        CHECK_THROWS_WITH(load_pose_library("/nonexistent/poses.jsonl"),
                          Catch::Matchers::ContainsSubstring("cannot open"));
    }

    SECTION("malformed JSON reports the line") {
        TempFile f("poses");
        f.write(line_for(testutil::nose_only_pose()) + "\n{oops\n");
        CHECK_THROWS_WITH(load_pose_library(f.path()),
                          Catch::Matchers::ContainsSubstring(":2:"));
    }

    SECTION("wrong joint count reports the line") {
        TempFile f("poses");
        f.write(std::string("{\"joints\": [[0, 0, 1]]}\n"));
        CHECK_THROWS_WITH(load_pose_library(f.path()),
                          Catch::Matchers::ContainsSubstring(":1:"));
    }

    SECTION("save then load reproduces standardization of the saved poses") {
        PoseLibrary lib = synth_pose_library(16, 21);
        TempFile f("poses");
        save_pose_library(lib, f.path());
        PoseLibrary loaded = load_pose_library(f.path());
        REQUIRE(loaded.size() == lib.size());
        for (std::size_t i = 0; i < lib.size(); ++i) CHECK(loaded[i] == standardize_pose(lib[i]));
    }
}

TEST_CASE("joint world placement flips the vertical axis", "[pose]") {
    Pose p = testutil::single_joint_pose(kRWrist, 0.4, 0.8);  // +v is down locally
    Vec2 w = joint_world(p, kRWrist, {0.1, 0.2});
    CHECK(w.u == Catch::Approx(0.1 + 0.4 * 0.25));
    CHECK(w.v == Catch::Approx(0.2 - 0.8 * 0.25));
}
