// Command-line front end: run a benchmark, replay a manifest, list names.

#include <iomanip>
#include <sstream>
#include <iostream>

#include <CLI11.hpp>

#include "activegp/errors.hpp"
#include "activegp/harness.hpp"

namespace {

using namespace activegp;

void print_summary(const Report& report)
{
    std::cout << std::left << std::setw(11) << "system" << std::setw(8) << "strategy" << std::right << std::setw(6)
              << "ok" << std::setw(8) << "failed" << std::setw(22) << "final RMSE" << std::setw(22)
              << "coverage %" << "\n";
    for (const auto& c : report.cells) {
        std::cout << std::left << std::setw(11) << c.system << std::setw(8) << to_string(c.strategy) << std::right
                  << std::setw(6) << c.trials_ok << std::setw(8) << c.trials_failed;
        if (c.rmse_final && c.coverage) {
            std::ostringstream r, v;
            r << std::fixed << std::setprecision(3) << c.rmse_final->mean << " +- " << c.rmse_final->stddev;
            v << std::fixed << std::setprecision(1) << c.coverage->mean << " +- " << c.coverage->stddev;
            std::cout << std::setw(22) << r.str() << std::setw(22) << v.str();
        } else {
            std::cout << std::setw(22) << "missing" << std::setw(22) << "missing";
        }
        std::cout << "\n";
    }
}

RunOptions progress_options(bool quiet)
{
    RunOptions opts;
    if (!quiet) {
        opts.on_trial = [](const TrialResult& t) {
            std::ostringstream line;
            line << std::fixed << "[" << t.system << "/" << to_string(t.strategy) << "] seed " << t.seed << ": ";
            if (t.ok())
                line << std::setprecision(4) << "rmse " << t.final_rmse() << ", coverage " << std::setprecision(1)
                     << t.coverage_final << "%";
            else
                line << t.status;
            line << std::setprecision(1) << " (" << t.wall_seconds << " s)\n";
            std::clog << line.str();
        };
    }
    return opts;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Active exploration benchmark for Gaussian-process dynamics learning"};
    app.require_subcommand(1);

    bool quiet = false;
    app.add_flag("-q,--quiet", quiet, "Suppress per-trial progress");

    auto* run = app.add_subcommand("run", "Run a benchmark from a config file");
    std::string config_file;
    std::string system_name, strategy_name;
    std::optional<int> trials;
    std::optional<std::uint64_t> seed;
    std::string out_dir = "results";
    run->add_option("--config", config_file, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
    run->add_option("--system", system_name, "Restrict to one system");
    run->add_option("--strategy", strategy_name, "Restrict to one strategy");
    run->add_option("--trials", trials, "Trials per (system, strategy)")->check(CLI::PositiveNumber);
    run->add_option("--seed", seed, "Base seed");
    run->add_option("--out", out_dir, "Output directory");

    auto* rep = app.add_subcommand("replay", "Re-run the configuration recorded in a run manifest");
    std::string manifest_file;
    std::string replay_out;
    rep->add_option("--manifest", manifest_file, "manifest.json of a previous run")->required()->check(CLI::ExistingFile);
    rep->add_option("--out", replay_out, "Output directory (default: <manifest dir>/replay)");

    auto* list_systems = app.add_subcommand("list-systems", "Print the available systems");
    auto* list_strategies = app.add_subcommand("list-strategies", "Print the available strategies");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*list_systems) {
            for (const auto& name : system_names()) {
                const auto sys = make_system(name);
                std::cout << name << "  d_x=" << sys->spec().state_dim << " d_u=" << sys->spec().control_dim
                          << " dt=" << sys->spec().dt << "\n";
            }
            return 0;
        }
        if (*list_strategies) {
            for (StrategyKind k : kAllStrategies)
                std::cout << to_string(k) << "\n";
            return 0;
        }
        if (*run) {
            BenchmarkConfig cfg = BenchmarkConfig::load(config_file);
            if (!system_name.empty()) {
                make_system(system_name);
                cfg.systems = {system_name};
            }
            if (!strategy_name.empty())
                cfg.strategies = {parse_strategy(strategy_name)};
            if (trials)
                cfg.trials = *trials;
            if (seed)
                cfg.base_seed = *seed;
            cfg.validate();
            const Report report = run_benchmark(cfg, progress_options(quiet));
            emit_results(report, cfg, out_dir);
            print_summary(report);
            std::cout << "results written to " << out_dir << "\n";
            return 0;
        }
        if (*rep) {
            const std::filesystem::path mf(manifest_file);
            const std::filesystem::path out = replay_out.empty() ? mf.parent_path() / "replay" : std::filesystem::path(replay_out);
            const Report report = replay(mf, out, progress_options(quiet));
            print_summary(report);
            std::cout << "replay written to " << out.string() << "\n";
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
