// Command-line front end: train/sweep experiments, evaluate checkpoints and
// handcrafted baselines, run the gradient and tabular-oracle checks, and turn
// finished runs into smoothed plot curves.

#include <cstdio>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "gazerl/baselines.hpp"
#include "gazerl/gradcheck.hpp"
#include "gazerl/harness.hpp"
#include "gazerl/tabular.hpp"

using namespace gazerl;

namespace {

struct CommonOpts {
    std::string config;
    std::string arch;
    int alpha = -1;  // -1: keep the config value
    std::vector<std::uint64_t> seeds;
    std::string out;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool need_out) {
    cmd->add_option("--config", o.config, "JSON config with env/train/experiment sections")
        ->check(CLI::ExistingFile);
    cmd->add_option("--arch", o.arch, "network architecture")
        ->check(CLI::IsMember({"efnet", "lfnet", "audnet", "visnet"}));
    cmd->add_option("--alpha", o.alpha, "reward mix: 0 = faces only, 1 = faces + speakers")
        ->check(CLI::IsMember({0, 1}));
    cmd->add_option("--seeds", o.seeds, "comma-separated seed list")->delimiter(',');
    auto* out = cmd->add_option("--out", o.out, "output directory");
    if (need_out) out->required();
}

ExperimentSpec make_spec(const CommonOpts& o) {
    ExperimentSpec spec;
    if (!o.config.empty()) spec = cfg::load_spec(o.config);
    if (!o.arch.empty()) spec.arch = nn::arch_from_name(o.arch);
    if (o.alpha >= 0) spec.train.alpha = static_cast<double>(o.alpha);
    if (!o.seeds.empty()) spec.seeds = o.seeds;
    cfg::validate(spec);
    return spec;
}

void print_summary(const ExperimentResult& res) {
    std::printf("\n%-28s %6s %6s %12s %12s %12s\n", "point", "runs", "failed", "mean_final",
                "std_final", "mean_early");
    for (const auto& row : res.summary) {
        if (row.n_runs == row.n_failed) {
            std::printf("%-28s %6d %6d %12s %12s %12s\n", row.point.c_str(), row.n_runs,
                        row.n_failed, "-", "-", "-");
        } else {
            std::printf("%-28s %6d %6d %12.4f %12.4f %12.4f\n", row.point.c_str(), row.n_runs,
                        row.n_failed, row.mean_final, row.std_final, row.mean_early);
        }
    }
}

int cmd_train(const CommonOpts& o, const std::string& cache, bool save_nets, bool want_sweep) {
    ExperimentSpec spec = make_spec(o);
    if (want_sweep && spec.sweep.empty())
        throw std::runtime_error("sweep: the config has no experiment.sweep section");
    if (!want_sweep && !spec.sweep.empty())
        throw std::runtime_error("train: the config defines a sweep; use the sweep command");
    const auto res = run_experiment(spec, o.out, cache, save_nets, /*verbose=*/true);
    print_summary(res);
    std::printf("\nwrote %s/summary.csv and report.md\n", o.out.c_str());
    if (res.any_failed()) {
        std::fprintf(stderr, "some runs failed; see %s/report.md\n", o.out.c_str());
        return 1;
    }
    return 0;
}

int cmd_eval(const CommonOpts& o, const std::string& ckpt, std::uint64_t seed, int episodes) {
    ExperimentSpec spec;
    if (!o.config.empty()) spec = cfg::load_spec(o.config);
    const double alpha = o.alpha >= 0 ? static_cast<double>(o.alpha) : spec.train.alpha;
    nn::QNet<float> net;
    nn::load_checkpoint<float>(ckpt, net, nullptr);
    const EvalResult r = evaluate_greedy(net, spec.env, alpha, seed, episodes);
    std::printf("%s: %d episodes, mean reward per step %.4f +- %.4f (alpha=%g)\n",
                nn::arch_name(net.spec.arch), r.episodes, r.mean_reward, r.std_reward, alpha);
    return 0;
}

int cmd_baseline(const CommonOpts& o, const std::string& name, const std::string& speed_name,
                 int episodes) {
    ExperimentSpec spec;
    if (!o.config.empty()) spec = cfg::load_spec(o.config);
    const double alpha = o.alpha >= 0 ? static_cast<double>(o.alpha) : spec.train.alpha;
    const std::vector<std::uint64_t> seeds = o.seeds.empty() ? spec.seeds : o.seeds;
    const SpeedMode speed =
        speed_name == "infinite" ? SpeedMode::kInfinite : SpeedMode::kEqual;
    std::vector<BaselineKind> kinds;
    if (name.empty())
        kinds.assign(kAllBaselines.begin(), kAllBaselines.end());
    else
        kinds.push_back(baseline_from_name(name));

    std::string csv = "baseline,speed,alpha,seed,mean_reward\n";
    std::printf("%-14s %10s  per-step reward, %d episodes x %zu seeds\n", "baseline",
                speed_name.c_str(), episodes, seeds.size());
    char buf[160];
    for (BaselineKind kind : kinds) {
        std::vector<double> means;
        for (std::uint64_t seed : seeds) {
            const EvalResult r = evaluate_baseline(kind, spec.env, alpha, seed, episodes, speed);
            means.push_back(r.mean_reward);
            std::snprintf(buf, sizeof(buf), "%s,%s,%g,%llu,%.10g\n", baseline_name(kind),
                          speed_name.c_str(), alpha, static_cast<unsigned long long>(seed),
                          r.mean_reward);
            csv += buf;
        }
        const MeanStd ms = mean_std(means);
        std::printf("%-14s %10.4f +- %.4f\n", baseline_name(kind), ms.mean, ms.std);
    }
    if (!o.out.empty()) {
        harness::write_text(std::filesystem::path(o.out) / "baselines.csv", csv);
        std::printf("wrote %s/baselines.csv\n", o.out.c_str());
    }
    return 0;
}

int cmd_gradcheck(int draws, double tol, std::uint64_t seed0) {
    bool ok = true;
    for (nn::Arch arch : {nn::Arch::EF, nn::Arch::LF, nn::Arch::Aud, nn::Arch::Vis}) {
        double worst = 0.0;
        for (int d = 0; d < draws; ++d) {
            const auto rep = nn::gradcheck(arch, seed0 + static_cast<std::uint64_t>(d));
            worst = std::max(worst, rep.max_rel_err);
        }
        const bool pass = worst < tol;
        ok = ok && pass;
        std::printf("%-7s max rel err %.3e over %d draws  %s\n", nn::arch_name(arch), worst,
                    draws, pass ? "ok" : "FAIL");
    }
    return ok ? 0 : 1;
}

int cmd_oracle(std::uint64_t seed, int steps, int episodes) {
    const EnvConfig env = micro_env_config();
    TrainConfig train = micro_train_config();
    train.total_steps = steps;

    std::printf("training %s for %d steps on the degenerate one-person environment...\n",
                nn::arch_name(nn::Arch::LF), steps);
    nn::QNet<float> net;
    const TrainResult tr = train_run<float>(nn::Arch::LF, env, train, seed, &net);
    const EvalResult dqn = evaluate_greedy(net, env, train.alpha, seed, episodes);
    const EvalResult tab = evaluate_tabular(env, train.alpha, train.gamma, seed, episodes);
    std::printf("trained net : %.4f +- %.4f per step (%d episodes, %.0fs train)\n",
                dqn.mean_reward, dqn.std_reward, dqn.episodes, tr.wall_seconds);
    std::printf("exact policy: %.4f +- %.4f per step\n", tab.mean_reward, tab.std_reward);
    const double ratio = tab.mean_reward > 0 ? dqn.mean_reward / tab.mean_reward : 0.0;
    std::printf("ratio %.4f\n", ratio);
    return ratio >= 0.95 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"gaze-control RL workbench"};
    app.require_subcommand(1);

    CommonOpts train_o, sweep_o, eval_o, base_o;
    std::string train_cache, sweep_cache;
    bool train_save = false, sweep_save = false;

    auto* train = app.add_subcommand("train", "train one config point over several seeds");
    add_common(train, train_o, /*need_out=*/true);
    train->add_option("--cache", train_cache, "directory for reusable finished runs");
    train->add_flag("--save-nets", train_save, "write a checkpoint next to each run trace");

    auto* sweep = app.add_subcommand("sweep", "train every point of the config's sweep grid");
    add_common(sweep, sweep_o, /*need_out=*/true);
    sweep->add_option("--cache", sweep_cache, "directory for reusable finished runs");
    sweep->add_flag("--save-nets", sweep_save, "write a checkpoint next to each run trace");

    auto* eval = app.add_subcommand("eval", "greedy rollout of a saved checkpoint");
    std::string eval_ckpt;
    std::uint64_t eval_seed = 1;
    int eval_episodes = 200;
    add_common(eval, eval_o, /*need_out=*/false);
    eval->add_option("--ckpt", eval_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--seed", eval_seed, "evaluation seed");
    eval->add_option("--episodes", eval_episodes, "number of evaluation episodes");

    auto* baseline = app.add_subcommand("baseline", "evaluate handcrafted gaze policies");
    std::string base_name, base_speed = "equal";
    int base_episodes = 50;
    add_common(baseline, base_o, /*need_out=*/false);
    baseline->add_option("--name", base_name, "one baseline (default: all)");
    baseline->add_option("--speed", base_speed, "motor speed model")
        ->check(CLI::IsMember({"equal", "infinite"}));
    baseline->add_option("--episodes", base_episodes, "episodes per seed");

    auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient check");
    int gc_draws = 5;
    double gc_tol = 1e-4;
    std::uint64_t gc_seed = 1234;
    gradcheck->add_option("--draws", gc_draws, "random draws per architecture");
    gradcheck->add_option("--tol", gc_tol, "max relative error allowed");
    gradcheck->add_option("--seed", gc_seed, "first draw seed");

    auto* oracle = app.add_subcommand("oracle", "compare a small trained net against exact "
                                                "Q-iteration on a degenerate environment");
    std::uint64_t or_seed = 7;
    int or_steps = 20000, or_episodes = 200;
    oracle->add_option("--seed", or_seed, "training/evaluation seed");
    oracle->add_option("--steps", or_steps, "training steps");
    oracle->add_option("--episodes", or_episodes, "evaluation episodes");

    auto* plotdata = app.add_subcommand("plotdata", "smooth run traces into plot curves");
    std::string pd_runs, pd_out;
    int pd_window = 5000;
    plotdata->add_option("--runs", pd_runs, "directory holding run traces")
        ->required()
        ->check(CLI::ExistingDirectory);
    plotdata->add_option("--out", pd_out, "output directory")->required();
    plotdata->add_option("--window", pd_window, "smoothing window in steps");

    CLI11_PARSE(app, argc, argv);

    try {
        if (train->parsed()) return cmd_train(train_o, train_cache, train_save, false);
        if (sweep->parsed()) return cmd_train(sweep_o, sweep_cache, sweep_save, true);
        if (eval->parsed()) return cmd_eval(eval_o, eval_ckpt, eval_seed, eval_episodes);
        if (baseline->parsed()) return cmd_baseline(base_o, base_name, base_speed, base_episodes);
        if (gradcheck->parsed()) return cmd_gradcheck(gc_draws, gc_tol, gc_seed);
        if (oracle->parsed()) return cmd_oracle(or_seed, or_steps, or_episodes);
        if (plotdata->parsed()) {
            const int n = emit_plot_data(pd_runs, pd_out, pd_window);
            std::printf("wrote %d curves plus mean.csv to %s\n", n, pd_out.c_str());
            return 0;
        }
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
