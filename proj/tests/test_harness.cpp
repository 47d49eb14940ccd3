// Experiment harness: config parsing, sweep expansion, aggregation, caching
// and smoothed plot curves.

#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "gazerl/harness.hpp"
#include "test_util.hpp"

using namespace gazerl;
using Catch::Matchers::ContainsSubstring;
namespace fs = std::filesystem;

namespace {

ExperimentSpec tiny_spec() {
    ExperimentSpec s;
    s.env.vis_cols = 3;
    s.env.vis_rows = 3;
    s.env.aud_cols = 3;
    s.env.aud_rows = 3;
    s.env.episode_length = 20;
    s.env.pose_count = 16;
    s.train.batch_size = 8;
    s.train.warmup = 8;
    s.train.total_steps = 60;
    s.train.window_len = 2;
    s.train.lstm_hidden = 4;
    s.train.target_sync = 20;
    s.train.replay_capacity = 500;
    s.train.eps_decay_steps = 40;
    s.train.score_window = 20;
    s.arch = nn::Arch::Aud;
    s.seeds = {1, 2, 3, 4, 5};
    return s;
}

std::string read_file(const fs::path& p) {
    std::ifstream in(p);
    REQUIRE(in);
    std::stringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

}  // namespace

TEST_CASE("config: parse, defaults and strict rejection", "[harness]") {
    const auto s = cfg::parse_spec_text(
        R"({"env":{"tau":0.7,"miss_rate":0},
            "train":{"gamma":0.8,"batch_size":16},
            "experiment":{"arch":"visnet","seeds":[7,8]}})");
    CHECK(s.env.tau == 0.7);
    CHECK(s.env.miss_rate == 0.0);
    CHECK(s.env.xi == 1.4);  // untouched fields keep their defaults
    CHECK(s.train.gamma == 0.8);
    CHECK(s.train.batch_size == 16);
    CHECK(s.arch == nn::Arch::Vis);
    CHECK(s.seeds == std::vector<std::uint64_t>{7, 8});
    CHECK(s.sweep.empty());

    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"env":{"fov_w":1}})"),
                      ContainsSubstring("unknown key 'fov_w'"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"extra":{}})"),
                      ContainsSubstring("unknown key 'extra'"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"arch":"resnet"}})"),
                      ContainsSubstring("unknown arch"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"seeds":[]}})"),
                      ContainsSubstring("seed list must not be empty"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"seeds":[-1]}})"),
                      ContainsSubstring("non-negative"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"train":{"batch_size":1}})"),
                      ContainsSubstring("batch_size must be >= 2"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"train":{"gamma":"hot"}})"),
                      ContainsSubstring("bad value for 'gamma'"));
    CHECK_THROWS_WITH(cfg::parse_spec_text("not json at all"), ContainsSubstring("invalid JSON"));
    CHECK_THROWS_WITH(cfg::load_spec("/nonexistent/spec.json"),
                      ContainsSubstring("cannot open"));
}

TEST_CASE("config: sweep axes validated against known fields", "[harness]") {
    const auto s = cfg::parse_spec_text(
        R"({"experiment":{"sweep":{"window_len":[1,2,3,5,10,20]}}})");
    REQUIRE(s.sweep.size() == 1);
    CHECK(s.sweep[0].field == "window_len");
    CHECK(s.sweep[0].values == std::vector<double>{1, 2, 3, 5, 10, 20});

    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"sweep":{"lr":[0.1]}}})"),
                      ContainsSubstring("does not name a sweepable field"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"sweep":{"gamma":[]}}})"),
                      ContainsSubstring("non-empty array"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"sweep":{"gamma":[1.5]}}})"),
                      ContainsSubstring("must lie in [0, 1)"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"sweep":{"window_len":[2.5]}}})"),
                      ContainsSubstring("positive integers"));
    CHECK_THROWS_WITH(cfg::parse_spec_text(R"({"experiment":{"sweep":{"gamma":["x"]}}})"),
                      ContainsSubstring("non-numeric"));
}

TEST_CASE("config: serialization round-trips", "[harness]") {
    ExperimentSpec s = tiny_spec();
    s.sweep.push_back({"gamma", {0.5, 0.9}});
    s.env.pose_file = "poses.jsonl";
    const auto dumped = cfg::to_json(s).dump();
    const auto reparsed = cfg::parse_spec_text(dumped);
    CHECK(cfg::to_json(reparsed).dump() == dumped);
}

TEST_CASE("config: run key is stable and input-sensitive", "[harness]") {
    const ExperimentSpec s = tiny_spec();
    const auto k = cfg::run_key(s.env, s.train, s.arch, 1);
    CHECK(k == cfg::run_key(s.env, s.train, s.arch, 1));
    CHECK(k.size() == 16);
    CHECK(k != cfg::run_key(s.env, s.train, s.arch, 2));
    CHECK(k != cfg::run_key(s.env, s.train, nn::Arch::Vis, 1));
    TrainConfig t = s.train;
    t.gamma += 1e-12;
    CHECK(k != cfg::run_key(s.env, t, s.arch, 1));
}

TEST_CASE("sweep expansion covers the grid in declaration order", "[harness]") {
    ExperimentSpec s = tiny_spec();
    auto pts = harness::expand_points(s);
    REQUIRE(pts.size() == 1);
    CHECK(pts[0].label == "default");

    s.sweep = {{"window_len", {1, 2, 3, 5, 10, 20}}};
    pts = harness::expand_points(s);
    REQUIRE(pts.size() == 6);
    CHECK(pts[0].label == "window_len=1");
    CHECK(pts[5].label == "window_len=20");
    for (std::size_t i = 0; i < pts.size(); ++i)
        CHECK(pts[i].train.window_len == static_cast<int>(s.sweep[0].values[i]));
    CHECK(pts[2].train.lstm_hidden == s.train.lstm_hidden);  // other fields untouched

    s.sweep = {{"window_len", {1, 2}}, {"gamma", {0.8, 0.9}}};
    pts = harness::expand_points(s);
    REQUIRE(pts.size() == 4);
    CHECK(pts[0].label == "window_len=1,gamma=0.8");
    CHECK(pts[1].label == "window_len=1,gamma=0.9");
    CHECK(pts[3].label == "window_len=2,gamma=0.9");
    CHECK(pts[3].train.window_len == 2);
    CHECK(pts[3].train.gamma == 0.9);
}

TEST_CASE("five seeds aggregate into one summary row", "[harness]") {
    testutil::TempDir dir("harness-agg");
    const ExperimentSpec s = tiny_spec();
    const auto res = run_experiment(s, dir.sub("out"));

    REQUIRE(res.runs.size() == 5);
    for (const auto& r : res.runs) CHECK(r.ok);
    CHECK_FALSE(res.any_failed());
    REQUIRE(res.summary.size() == 1);
    const auto& row = res.summary[0];
    CHECK(row.point == "default");
    CHECK(row.n_runs == 5);
    CHECK(row.n_failed == 0);

    double mean = 0.0;
    for (const auto& r : res.runs) mean += r.train.final_score;
    mean /= 5.0;
    double ss = 0.0;
    for (const auto& r : res.runs)
        ss += (r.train.final_score - mean) * (r.train.final_score - mean);
    CHECK(row.mean_final == Catch::Approx(mean).margin(1e-12));
    CHECK(row.std_final == Catch::Approx(std::sqrt(ss / 4.0)).margin(1e-12));

    for (std::uint64_t seed : s.seeds)
        CHECK(fs::exists(fs::path(dir.sub("out")) / "runs" / (std::to_string(seed) + ".csv")));
    CHECK(fs::exists(fs::path(dir.sub("out")) / "config.json"));
    const std::string summary = read_file(fs::path(dir.sub("out")) / "summary.csv");
    CHECK(summary.rfind("point,n_runs,n_failed,mean_final,std_final,mean_early\n", 0) == 0);
    const std::string report = read_file(fs::path(dir.sub("out")) / "report.md");
    CHECK_THAT(report, ContainsSubstring("non-paper default"));
    CHECK_THAT(report, ContainsSubstring("n-1 denominator"));
    CHECK_THAT(report, ContainsSubstring("| default | 5 | 0 |"));
}

TEST_CASE("identical specs produce identical artifacts", "[harness]") {
    testutil::TempDir dir("harness-det");
    ExperimentSpec s = tiny_spec();
    s.seeds = {11, 12, 13};
    run_experiment(s, dir.sub("a"));
    run_experiment(s, dir.sub("b"));
    CHECK(read_file(dir.sub("a") + "/summary.csv") == read_file(dir.sub("b") + "/summary.csv"));
    CHECK(read_file(dir.sub("a") + "/report.md") == read_file(dir.sub("b") + "/report.md"));
    CHECK(read_file(dir.sub("a") + "/runs/12.csv") == read_file(dir.sub("b") + "/runs/12.csv"));
}

TEST_CASE("a failing point is recorded while the rest continue", "[harness]") {
    testutil::TempDir dir("harness-fail");
    ExperimentSpec s = tiny_spec();
    s.seeds = {1, 2};
    // NaN gamma poisons the TD target, so the divergence guard trips on the
    // first update of that point; the healthy point must still complete.
    s.sweep = {{"gamma", {0.9, std::nan("")}}};
    const auto res = run_experiment(s, dir.sub("out"));

    REQUIRE(res.runs.size() == 4);
    CHECK(res.runs[0].ok);
    CHECK(res.runs[1].ok);
    CHECK_FALSE(res.runs[2].ok);
    CHECK_FALSE(res.runs[3].ok);
    CHECK_THAT(res.runs[2].error, ContainsSubstring("diverged"));
    CHECK(res.any_failed());

    REQUIRE(res.summary.size() == 2);
    CHECK(res.summary[0].point == "gamma=0.9");
    CHECK(res.summary[0].n_failed == 0);
    CHECK(res.summary[1].point == "gamma=nan");
    CHECK(res.summary[1].n_runs == 2);
    CHECK(res.summary[1].n_failed == 2);

    CHECK(fs::exists(fs::path(dir.sub("out")) / "runs" / "gamma=0.9" / "1.csv"));
    CHECK_FALSE(fs::exists(fs::path(dir.sub("out")) / "runs" / "gamma=nan" / "1.csv"));
    CHECK_THAT(read_file(fs::path(dir.sub("out")) / "report.md"),
               ContainsSubstring("## Failures"));
}

TEST_CASE("cache supplies finished runs on the second pass", "[harness]") {
    testutil::TempDir dir("harness-cache");
    ExperimentSpec s = tiny_spec();
    s.seeds = {1, 2};
    const std::string cache = dir.sub("cache");

    const auto first = run_experiment(s, dir.sub("a"), cache);
    for (const auto& r : first.runs) CHECK_FALSE(r.from_cache);
    const auto second = run_experiment(s, dir.sub("b"), cache);
    for (const auto& r : second.runs) CHECK(r.from_cache);
    CHECK(read_file(dir.sub("a") + "/summary.csv") == read_file(dir.sub("b") + "/summary.csv"));
    CHECK(read_file(dir.sub("a") + "/runs/1.csv") == read_file(dir.sub("b") + "/runs/1.csv"));

    // Prove results really come from the cache: doctor one entry and rerun.
    const std::string key1 = cfg::run_key(s.env, s.train, s.arch, 1);
    {
        nlohmann::json j;
        std::ifstream in(cache + "/" + key1 + ".json");
        in >> j;
        j["final_score"] = 99.5;
        std::ofstream out(cache + "/" + key1 + ".json");
        out << j.dump();
    }
    const auto doctored = run_experiment(s, dir.sub("c"), cache);
    CHECK(doctored.runs[0].train.final_score == 99.5);

    // A corrupt entry falls back to a fresh run and gets rewritten.
    {
        std::ofstream out(cache + "/" + key1 + ".json");
        out << "truncated";
    }
    const auto repaired = run_experiment(s, dir.sub("d"), cache);
    CHECK_FALSE(repaired.runs[0].from_cache);
    CHECK(repaired.runs[1].from_cache);
    CHECK(read_file(dir.sub("a") + "/summary.csv") == read_file(dir.sub("d") + "/summary.csv"));
}

TEST_CASE("smoothing buckets rewards by step count", "[harness]") {
    std::vector<std::pair<long long, double>> samples;
    for (int i = 0; i < 10; ++i) samples.emplace_back(i, static_cast<double>(i));

    const Curve c4 = smooth_trace(samples, 4);
    REQUIRE(c4.size() == 3);
    CHECK(c4[0].step == 3);
    CHECK(c4[0].value == Catch::Approx(1.5));
    CHECK(c4[1].step == 7);
    CHECK(c4[1].value == Catch::Approx(5.5));
    CHECK(c4[2].step == 9);  // trailing partial bucket
    CHECK(c4[2].value == Catch::Approx(8.5));

    // Window longer than the trace: one point, the overall mean.
    const Curve c100 = smooth_trace(samples, 100);
    REQUIRE(c100.size() == 1);
    CHECK(c100[0].step == 9);
    CHECK(c100[0].value == Catch::Approx(4.5));

    // A constant trace smooths to a constant curve.
    std::vector<std::pair<long long, double>> flat(7, {0, 3.25});
    for (int i = 0; i < 7; ++i) flat[i].first = i;
    for (const auto& p : smooth_trace(flat, 3)) CHECK(p.value == Catch::Approx(3.25));

    CHECK_THROWS_AS(smooth_trace(samples, 0), std::invalid_argument);

    std::vector<MetricsRow> rows(5);
    for (int i = 0; i < 5; ++i) rows[i] = {i, 0, static_cast<float>(2 * i), NAN, 0.5f};
    const Curve cr = smooth_rewards(rows, 5);
    REQUIRE(cr.size() == 1);
    CHECK(cr[0].value == Catch::Approx(4.0));
}

TEST_CASE("mean curve truncates to the shortest run", "[harness]") {
    const Curve a = {{10, 1.0}, {20, 2.0}, {30, 3.0}};
    const Curve b = {{10, 3.0}, {20, 6.0}};
    const Curve m = mean_curve({a, b});
    REQUIRE(m.size() == 2);
    CHECK(m[0].step == 10);
    CHECK(m[0].value == Catch::Approx(2.0));
    CHECK(m[1].value == Catch::Approx(4.0));
    CHECK(mean_curve({}).empty());
}

TEST_CASE("plot data covers every trace plus the mean", "[harness]") {
    testutil::TempDir dir("harness-plot");
    const std::string runs = dir.sub("runs");
    fs::create_directories(fs::path(runs) / "sub");

    std::vector<MetricsRow> a(6), b(4);
    for (int i = 0; i < 6; ++i) a[i] = {i, 0, static_cast<float>(i + 1), NAN, 0.5f};
    for (int i = 0; i < 4; ++i) b[i] = {i, 0, 2.0f, NAN, 0.5f};
    {
        std::ofstream out(fs::path(runs) / "a.csv");
        write_metrics_csv(a, out);
    }
    {
        std::ofstream out(fs::path(runs) / "sub" / "b.csv");
        write_metrics_csv(b, out);
    }
    {
        std::ofstream out(fs::path(runs) / "summary.csv");  // wrong header: skipped
        out << "point,n_runs\nx,1\n";
    }

    CHECK(emit_plot_data(runs, dir.sub("plot"), 2) == 2);
    REQUIRE(fs::exists(fs::path(dir.sub("plot")) / "a.csv"));
    REQUIRE(fs::exists(fs::path(dir.sub("plot")) / "sub_b.csv"));
    REQUIRE(fs::exists(fs::path(dir.sub("plot")) / "mean.csv"));
    CHECK_FALSE(fs::exists(fs::path(dir.sub("plot")) / "summary.csv"));

    const std::string mean = read_file(fs::path(dir.sub("plot")) / "mean.csv");
    std::istringstream in(mean);
    std::string line;
    std::getline(in, line);
    CHECK(line == "step,smoothed_reward");
    std::getline(in, line);
    CHECK(line == "1,1.75");  // ((1+2)/2 + 2) / 2
    std::getline(in, line);
    CHECK(line == "3,2.75");

    CHECK_THROWS_WITH(emit_plot_data(dir.sub("empty"), dir.sub("plot2"), 2),
                      ContainsSubstring("is not a directory"));
    fs::create_directories(dir.sub("empty"));
    CHECK_THROWS_WITH(emit_plot_data(dir.sub("empty"), dir.sub("plot2"), 2),
                      ContainsSubstring("no metrics traces"));
}
