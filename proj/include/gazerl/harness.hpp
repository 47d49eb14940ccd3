#pragma once
// Experiment runner: expands an ExperimentSpec into (config point x seed)
// runs, executes or retrieves them from a cache, and writes per-run traces,
// an aggregate summary table, a markdown report and smoothed reward curves.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "gazerl/checkpoint.hpp"
#include "gazerl/config.hpp"

namespace gazerl {

struct ConfigPoint {
    std::string label;  // "default", or "window_len=3" / "window_len=3,gamma=0.8"
    TrainConfig train;
};

struct RunResult {
    std::string point;
    std::uint64_t seed = 0;
    bool ok = false;
    bool from_cache = false;
    std::string error;
    TrainResult train;  // rows empty when loaded from cache
};

struct SummaryRow {
    std::string point;
    int n_runs = 0;
    int n_failed = 0;
    // Across-run statistics of the per-run final scores (trailing-window mean
    // reward). std_final uses the sample standard deviation, n-1 denominator.
    double mean_final = 0.0;
    double std_final = 0.0;
    double mean_early = 0.0;
};

struct ExperimentResult {
    std::vector<RunResult> runs;
    std::vector<SummaryRow> summary;

    bool any_failed() const {
        for (const auto& r : runs)
            if (!r.ok) return true;
        return false;
    }
};

namespace harness {

namespace fs = std::filesystem;

inline std::string fmt_axis_value(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%g", v);
    return std::string(buf);
}

inline void apply_axis_value(TrainConfig& t, const std::string& field, double v) {
    if (field == "window_len")
        t.window_len = static_cast<int>(std::llround(v));
    else if (field == "gamma")
        t.gamma = v;
    else if (field == "lstm_hidden")
        t.lstm_hidden = static_cast<int>(std::llround(v));
    else
        throw std::logic_error("harness: unknown sweep field '" + field + "'");
}

/// Cartesian expansion of the sweep axes, in declaration order. Without a
/// sweep the spec collapses to one point labelled "default".
inline std::vector<ConfigPoint> expand_points(const ExperimentSpec& spec) {
    if (spec.sweep.empty()) return {{"default", spec.train}};
    std::vector<ConfigPoint> points{{"", spec.train}};
    for (const auto& axis : spec.sweep) {
        std::vector<ConfigPoint> next;
        next.reserve(points.size() * axis.values.size());
        for (const auto& base : points) {
            for (double v : axis.values) {
                ConfigPoint p = base;
                apply_axis_value(p.train, axis.field, v);
                const std::string tag = axis.field + "=" + fmt_axis_value(v);
                p.label = p.label.empty() ? tag : p.label + "," + tag;
                next.push_back(std::move(p));
            }
        }
        points = std::move(next);
    }
    return points;
}

inline fs::path run_csv_path(const fs::path& out_dir, const std::string& point,
                             std::uint64_t seed) {
    fs::path dir = out_dir / "runs";
    if (point != "default") dir /= point;
    return dir / (std::to_string(seed) + ".csv");
}

// ---- run cache -------------------------------------------------------------

inline bool cache_lookup(const fs::path& cache_dir, const std::string& key, TrainResult& out) {
    const fs::path jpath = cache_dir / (key + ".json");
    const fs::path cpath = cache_dir / (key + ".csv");
    std::ifstream in(jpath);
    if (!in || !fs::exists(cpath)) return false;
    nlohmann::json j;
    try {
        in >> j;
        out.final_score = j.at("final_score").get<double>();
        out.early_score = j.at("early_score").get<double>();
        out.wall_seconds = j.at("wall_seconds").get<double>();
        out.updates = j.at("updates").get<long long>();
        out.episodes = j.at("episodes").get<int>();
    } catch (const nlohmann::json::exception&) {
        return false;  // stale or truncated entry: fall through to a fresh run
    }
    out.rows.clear();
    return true;
}

inline void cache_store(const fs::path& cache_dir, const std::string& key,
                        const TrainResult& r) {
    fs::create_directories(cache_dir);
    nlohmann::json j;
    j["final_score"] = r.final_score;
    j["early_score"] = r.early_score;
    j["wall_seconds"] = r.wall_seconds;
    j["updates"] = r.updates;
    j["episodes"] = r.episodes;
    {
        std::ofstream out(cache_dir / (key + ".csv"));
        write_metrics_csv(r.rows, out);
    }
    // JSON last: a cache entry counts as present only when both files exist,
    // so an interrupted writer leaves a miss instead of a torn entry.
    std::ofstream out(cache_dir / (key + ".json"));
    out << j.dump(2) << "\n";
}

// ---- aggregation -----------------------------------------------------------

inline SummaryRow summarize_point(const std::string& label, const std::vector<RunResult>& runs) {
    SummaryRow row;
    row.point = label;
    double sum_final = 0.0, sum_early = 0.0;
    std::vector<double> finals;
    for (const auto& r : runs) {
        if (r.point != label) continue;
        ++row.n_runs;
        if (!r.ok) {
            ++row.n_failed;
            continue;
        }
        finals.push_back(r.train.final_score);
        sum_final += r.train.final_score;
        sum_early += r.train.early_score;
    }
    const int n = static_cast<int>(finals.size());
    if (n > 0) {
        row.mean_final = sum_final / n;
        row.mean_early = sum_early / n;
        double ss = 0.0;
        for (double f : finals) ss += (f - row.mean_final) * (f - row.mean_final);
        row.std_final = n > 1 ? std::sqrt(ss / (n - 1)) : 0.0;
    }
    return row;
}

inline std::string csv_field(const std::string& s) {
    if (s.find(',') == std::string::npos) return s;
    return "\"" + s + "\"";  // multi-axis labels carry commas
}

inline std::string summary_csv(const std::vector<SummaryRow>& rows) {
    std::ostringstream out;
    out << "point,n_runs,n_failed,mean_final,std_final,mean_early\n";
    char buf[160];
    for (const auto& r : rows) {
        std::snprintf(buf, sizeof(buf), ",%d,%d,%.10g,%.10g,%.10g\n", r.n_runs, r.n_failed,
                      r.mean_final, r.std_final, r.mean_early);
        out << csv_field(r.point) << buf;
    }
    return out.str();
}

inline std::string report_md(const ExperimentSpec& spec, const ExperimentResult& res) {
    std::ostringstream out;
    out << "# Experiment report\n\n";
    out << "Architecture: `" << nn::arch_name(spec.arch) << "`. Seeds:";
    for (std::uint64_t s : spec.seeds) out << " " << s;
    out << ".\n\n";
    out << "Scores are mean reward per step: `final` over the trailing " << spec.train.score_window
        << " training steps, `early` over the leading " << spec.train.score_window
        << ". The spread column is the across-seed sample standard deviation"
           " (n-1 denominator).\n\n";
    out << "Values marked \"non-paper default\" were chosen for this implementation;"
           " the rest follow the published setup.\n\n";
    auto dump_notes = [&out](const char* title, const std::vector<cfg::FieldNote>& notes) {
        out << "### " << title << "\n\n";
        for (const auto& n : notes) {
            out << "- `" << n.name << " = " << n.value << "`";
            if (n.non_paper) out << " (non-paper default)";
            out << "\n";
        }
        out << "\n";
    };
    dump_notes("Environment", cfg::env_field_notes(spec.env));
    dump_notes("Training", cfg::train_field_notes(spec.train));

    out << "## Results\n\n";
    out << "| point | runs | failed | final (mean +- std) | early mean |\n";
    out << "|---|---|---|---|---|\n";
    char buf[160];
    for (const auto& r : res.summary) {
        if (r.n_runs == r.n_failed) {
            out << "| " << r.point << " | " << r.n_runs << " | " << r.n_failed
                << " | - | - |\n";
            continue;
        }
        std::snprintf(buf, sizeof(buf), " %d | %d | %.4f +- %.4f | %.4f |\n", r.n_runs,
                      r.n_failed, r.mean_final, r.std_final, r.mean_early);
        out << "| " << r.point << " |" << buf;
    }
    out << "\n## Runs\n\n";
    out << "| point | seed | final | early | source |\n";
    out << "|---|---|---|---|---|\n";
    for (const auto& r : res.runs) {
        out << "| " << r.point << " | " << r.seed << " | ";
        if (r.ok) {
            std::snprintf(buf, sizeof(buf), "%.4f | %.4f | %s |\n", r.train.final_score,
                          r.train.early_score, r.from_cache ? "cache" : "fresh");
            out << buf;
        } else {
            out << "failed | - | - |\n";
        }
    }
    bool any_failed = false;
    for (const auto& r : res.runs) any_failed = any_failed || !r.ok;
    if (any_failed) {
        out << "\n## Failures\n\n";
        for (const auto& r : res.runs)
            if (!r.ok) out << "- " << r.point << " seed " << r.seed << ": " << r.error << "\n";
    }
    return out.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
}

}  // namespace harness

/// Runs every (config point, seed) pair of the spec. Individual run failures
/// are recorded and the remaining runs continue; callers should exit non-zero
/// when ExperimentResult::any_failed(). With a cache directory, finished runs
/// are reused by content hash of (env, train, arch, seed).
inline ExperimentResult run_experiment(const ExperimentSpec& spec, const std::string& out_dir,
                                       const std::string& cache_dir = "",
                                       bool save_nets = false, bool verbose = false) {
    namespace fs = std::filesystem;
    const auto points = harness::expand_points(spec);
    ExperimentResult result;
    fs::create_directories(fs::path(out_dir) / "runs");
    harness::write_text(fs::path(out_dir) / "config.json", cfg::to_json(spec).dump(2) + "\n");

    for (const auto& point : points) {
        for (std::uint64_t seed : spec.seeds) {
            RunResult run;
            run.point = point.label;
            run.seed = seed;
            const std::string key = cfg::run_key(spec.env, point.train, spec.arch, seed);
            const fs::path csv_path = harness::run_csv_path(out_dir, point.label, seed);
            fs::create_directories(csv_path.parent_path());

            TrainResult cached;
            if (!cache_dir.empty() && harness::cache_lookup(cache_dir, key, cached)) {
                run.ok = true;
                run.from_cache = true;
                run.train = std::move(cached);
                fs::copy_file(fs::path(cache_dir) / (key + ".csv"), csv_path,
                              fs::copy_options::overwrite_existing);
            } else {
                try {
                    nn::QNet<float> net;
                    run.train = train_run<float>(spec.arch, spec.env, point.train, seed,
                                                 save_nets ? &net : nullptr);
                    run.ok = true;
                    if (!cache_dir.empty()) harness::cache_store(cache_dir, key, run.train);
                    std::ofstream out(csv_path);
                    write_metrics_csv(run.train.rows, out);
                    if (save_nets) {
                        fs::path ck = csv_path;
                        ck.replace_extension(".ckpt.json");
                        nn::save_checkpoint(net, static_cast<nn::Adam<float>*>(nullptr),
                                            point.train.total_steps, ck.string());
                    }
                } catch (const std::exception& e) {
                    run.ok = false;
                    run.error = e.what();
                }
            }
            if (verbose) {
                std::printf("[%s seed %llu] %s", point.label.c_str(),
                            static_cast<unsigned long long>(seed),
                            run.from_cache ? "(cached) " : "");
                if (run.ok)
                    std::printf("final %.4f early %.4f (%.0fs)\n", run.train.final_score,
                                run.train.early_score, run.train.wall_seconds);
                else
                    std::printf("FAILED: %s\n", run.error.c_str());
                std::fflush(stdout);
            }
            result.runs.push_back(std::move(run));
        }
    }
    for (const auto& point : points)
        result.summary.push_back(harness::summarize_point(point.label, result.runs));

    harness::write_text(fs::path(out_dir) / "summary.csv", harness::summary_csv(result.summary));
    harness::write_text(fs::path(out_dir) / "report.md", harness::report_md(spec, result));
    return result;
}

// ---- smoothed reward curves -------------------------------------------------

struct CurvePoint {
    long long step = 0;
    double value = 0.0;
};
using Curve = std::vector<CurvePoint>;

/// Means over consecutive buckets of `window` samples; each point is stamped
/// with the step of the last sample it covers. A trailing partial bucket is
/// emitted too, so a trace shorter than the window yields one point.
inline Curve smooth_trace(const std::vector<std::pair<long long, double>>& samples, int window) {
    if (window < 1) throw std::invalid_argument("smooth_trace: window must be >= 1");
    Curve curve;
    double acc = 0.0;
    int count = 0;
    for (const auto& [step, value] : samples) {
        acc += value;
        ++count;
        if (count == window) {
            curve.push_back({step, acc / count});
            acc = 0.0;
            count = 0;
        }
    }
    if (count > 0) curve.push_back({samples.back().first, acc / count});
    return curve;
}

inline Curve smooth_rewards(const std::vector<MetricsRow>& rows, int window) {
    std::vector<std::pair<long long, double>> samples;
    samples.reserve(rows.size());
    for (const auto& r : rows) samples.emplace_back(r.step, static_cast<double>(r.reward));
    return smooth_trace(samples, window);
}

/// Pointwise mean across curves, truncated to the shortest; steps come from
/// the first curve.
inline Curve mean_curve(const std::vector<Curve>& curves) {
    if (curves.empty()) return {};
    std::size_t len = curves.front().size();
    for (const auto& c : curves) len = std::min(len, c.size());
    Curve mean(len);
    for (std::size_t i = 0; i < len; ++i) {
        mean[i].step = curves.front()[i].step;
        double acc = 0.0;
        for (const auto& c : curves) acc += c[i].value;
        mean[i].value = acc / static_cast<double>(curves.size());
    }
    return mean;
}

namespace harness {

inline std::string curve_csv(const Curve& curve) {
    std::ostringstream out;
    out << "step,smoothed_reward\n";
    char buf[64];
    for (const auto& p : curve) {
        std::snprintf(buf, sizeof(buf), "%lld,%.10g\n", p.step, p.value);
        out << buf;
    }
    return out.str();
}

inline std::vector<std::pair<long long, double>> read_reward_trace(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("step,episode,reward", 0) != 0)
        throw std::runtime_error(path.string() + " is not a metrics trace");
    std::vector<std::pair<long long, double>> samples;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const char* p = line.c_str();
        char* end = nullptr;
        const long long step = std::strtoll(p, &end, 10);
        // skip the episode column, then parse the reward
        const char* c1 = std::strchr(end, ',');
        const char* c2 = c1 ? std::strchr(c1 + 1, ',') : nullptr;
        if (!c2) throw std::runtime_error("malformed row in " + path.string());
        samples.emplace_back(step, std::strtod(c2 + 1, nullptr));
    }
    return samples;
}

}  // namespace harness

/// Turns every metrics trace under `runs_dir` into a smoothed curve CSV in
/// `out_dir` (slashes in relative paths become underscores), plus mean.csv
/// with the pointwise mean across runs. Returns the number of traces found.
inline int emit_plot_data(const std::string& runs_dir, const std::string& out_dir,
                          int window = 5000) {
    namespace fs = std::filesystem;
    if (!fs::is_directory(runs_dir))
        throw std::runtime_error("plotdata: " + runs_dir + " is not a directory");
    std::vector<fs::path> files;
    for (const auto& entry : fs::recursive_directory_iterator(runs_dir)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".csv") continue;
        std::ifstream probe(entry.path());
        std::string head;
        if (std::getline(probe, head) && head.rfind("step,episode,reward", 0) == 0)
            files.push_back(entry.path());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw std::runtime_error("plotdata: no metrics traces in " + runs_dir);

    std::vector<Curve> curves;
    for (const auto& file : files) {
        const Curve c = smooth_trace(harness::read_reward_trace(file), window);
        std::string name = fs::relative(file, runs_dir).string();
        std::replace(name.begin(), name.end(), '/', '_');
        harness::write_text(fs::path(out_dir) / name, harness::curve_csv(c));
        curves.push_back(c);
    }
    harness::write_text(fs::path(out_dir) / "mean.csv", harness::curve_csv(mean_curve(curves)));
    return static_cast<int>(files.size());
}

}  // namespace gazerl
