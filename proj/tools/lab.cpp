// lab: command-line front end for the experiment runner.
//
//   lab run <config> [--out DIR] [--seed N] [--reps N] [--plot]
//   lab bounds-compare [--n 1000] [--delta 0.01] [--grid 1001] [--out DIR] [--plot]
//   lab replay --log FILE --policy NAME [--mode iw|rs] [--seed N]
//   lab selftest
//
// Exit codes: 0 success, 2 configuration or usage error, 3 runtime error.

#include <CLI11.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "sulab/environments.hpp"
#include "sulab/lab.hpp"
#include "sulab/online_policies.hpp"

namespace fs = std::filesystem;
using namespace sulab;

namespace {

constexpr int kConfigError = 2;
constexpr int kRuntimeError = 3;

void write_outputs(const std::vector<lab::AggregateTrace>& traces, const std::string& dir, const std::string& stem,
                   bool plot, const lab::PlotStyle& style) {
    fs::create_directories(dir);
    const auto csv = (fs::path(dir) / (stem + ".csv")).string();
    lab::emit_csv(traces, csv);
    std::cout << "wrote " << csv << '\n';
    if (plot) {
        const auto svg = (fs::path(dir) / (stem + ".svg")).string();
        lab::render_plot(traces, style, svg);
        std::cout << "wrote " << svg << '\n';
    }
}

void print_final(const std::vector<lab::AggregateTrace>& traces) {
    for (const auto& t : traces) {
        if (t.size() == 0) continue;
        std::cout << "  " << t.series << ": final mean " << lab::format_number(t.mean.back()) << ", std "
                  << lab::format_number(t.std.back()) << " (x = " << lab::format_number(t.x.back()) << ")\n";
    }
}

std::unique_ptr<Policy> policy_by_name(const std::string& name, std::size_t K, std::size_t records) {
    if (name == "ucb1" || name == "ucb1_improved") return std::make_unique<Ucb1>(UcbVariant::improved);
    if (name == "ucb1_original") return std::make_unique<Ucb1>(UcbVariant::original);
    if (name == "exp3") return std::make_unique<Exp3>(RateSchedule{RateKind::anytime, 1.0});
    if (name == "exp3_fixed") {
        const double k = static_cast<double>(K);
        const double T = static_cast<double>(std::max<std::size_t>(records, 1));
        return std::make_unique<Exp3>(RateSchedule{RateKind::fixed, std::sqrt(2.0 * std::log(k) / (k * T))});
    }
    if (name == "uniform") return std::make_unique<UniformPolicy>();
    if (name.rfind("fixed:", 0) == 0) {
        const auto arm = name.substr(6);
        if (arm.empty() || arm.find_first_not_of("0123456789") != std::string::npos || std::stoul(arm) >= K)
            throw lab::ConfigError("bad arm in policy '" + name + "'");
        return std::make_unique<FixedPolicy>(std::stoul(arm));
    }
    throw lab::ConfigError("unknown policy '" + name +
                           "' (expected ucb1, ucb1_original, exp3, exp3_fixed, uniform or fixed:<arm>)");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Selection-under-uncertainty lab: bandit games, concentration and PAC-Bayes bound experiments"};
    app.require_subcommand(1);

    auto* run = app.add_subcommand("run", "Run an experiment config");
    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> reps;
    bool plot = false;
    run->add_option("config", config_path, "Config file")->required();
    run->add_option("--out", out_dir, "Output directory (overrides experiment.output)");
    run->add_option("--seed", seed, "Master seed override");
    run->add_option("--reps", reps, "Repetition count override");
    run->add_flag("--plot", plot, "Also render an SVG plot");

    auto* bc = app.add_subcommand("bounds-compare", "Hoeffding, kl and Pinsker-type bounds over a grid of p_hat");
    std::size_t bc_n = 1000, bc_grid = 1001;
    double bc_delta = 0.01;
    std::string bc_out = "out";
    bool bc_plot = false;
    bc->add_option("--n", bc_n, "Sample size")->capture_default_str();
    bc->add_option("--delta", bc_delta, "Confidence parameter")->capture_default_str();
    bc->add_option("--grid", bc_grid, "Number of p_hat grid points")->capture_default_str();
    bc->add_option("--out", bc_out, "Output directory")->capture_default_str();
    bc->add_flag("--plot", bc_plot, "Also render an SVG plot");

    auto* rp = app.add_subcommand("replay", "Offline evaluation of a policy on a logged-data file");
    std::string log_path, policy_name, mode = "iw";
    std::uint64_t rp_seed = 0;
    rp->add_option("--log", log_path, "Log file (K=<int> header, 12 integers per line)")->required();
    rp->add_option("--policy", policy_name, "ucb1 | ucb1_original | exp3 | exp3_fixed | uniform | fixed:<arm>")
        ->required();
    rp->add_option("--mode", mode, "iw (importance weighting) or rs (rejection sampling)")
        ->check(CLI::IsMember({"iw", "rs"}))
        ->capture_default_str();
    rp->add_option("--seed", rp_seed, "Policy seed")->capture_default_str();

    auto* st = app.add_subcommand("selftest", "Run the invariant checks");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kConfigError;
    }

    try {
        if (*run) {
            auto cfg = lab::parse_config_file(config_path);
            if (seed) cfg.seed = *seed;
            if (reps) {
                if (*reps == 0) throw lab::ConfigError("--reps must be >= 1");
                cfg.repetitions = *reps;
            }
            const auto res = lab::run_experiment(cfg);
            std::cout << cfg.name << " (" << cfg.kind << ", R=" << cfg.repetitions << ")\n";
            print_final(res.traces);
            lab::PlotStyle style;
            style.title = cfg.name;
            style.x_label = cfg.x_label;
            style.y_label = cfg.y_label;
            write_outputs(res.traces, out_dir.empty() ? cfg.output : out_dir, cfg.name, plot, style);
        } else if (*bc) {
            const auto traces = lab::bounds_compare(bc_n, bc_delta, bc_grid);
            for (const auto& t : traces)
                std::cout << "  " << t.series << " at p_hat=0: " << lab::format_number(t.mean.front()) << '\n';
            lab::PlotStyle style;
            style.title = "bounds on p, n=" + std::to_string(bc_n);
            style.x_label = "p_hat";
            style.y_label = "bound";
            style.show_std = false;
            write_outputs(traces, bc_out, "bounds-compare", bc_plot, style);
        } else if (*rp) {
            const auto log = read_log_file(log_path);
            auto policy = policy_by_name(policy_name, log.K, log.records.size());
            const auto res = mode == "iw" ? replay_importance_weighted(*policy, log, rp_seed)
                                          : replay_rejection_sampling(*policy, log, rp_seed);
            std::cout << "policy " << policy_name << ", mode " << mode << ", K=" << log.K << '\n'
                      << "  records read: " << res.records_read << '\n'
                      << "  rounds: " << res.rounds() << '\n'
                      << "  mean reward: " << lab::format_number(res.mean_reward()) << '\n';
        } else if (*st) {
            return lab::run_selftest(std::cout) ? 0 : kRuntimeError;
        }
    } catch (const lab::ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kRuntimeError;
    }
    return 0;
}
