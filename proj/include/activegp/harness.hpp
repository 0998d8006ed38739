#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "activegp/dynamics.hpp"
#include "activegp/gp.hpp"
#include "activegp/metrics.hpp"
#include "activegp/strategies.hpp"

namespace activegp {

struct GpSettings {
    HyperOptConfig hyperopt;
    int min_fit_points = 10;       // hyperparameters re-optimized only from this many points on
    int reopt_cap_after = 200;     // above this dataset size ...
    int reopt_every = 5;           // ... re-optimize on every 5th update event only
};

struct MetricsSettings {
    Index grid_points = 2000;
    std::uint64_t grid_seed = 20200601;
    int checkpoint_interval = 10;
};

/// One (system, strategy) cell of a benchmark.
struct ExperimentConfig {
    std::string system = "pendulum";
    StrategyKind strategy = StrategyKind::rec;
    int trials = 10;
    long steps = 150;              // N
    std::uint64_t base_seed = 1;
    int coverage_cells = 10;
    int max_consecutive_planning_failures = 5;
    StrategyConfig strategy_config;
    GpSettings gp;
    MetricsSettings metrics;
    nlohmann::json system_parameters = nlohmann::json::object();

    /// Per-trial seed: base seed XOR trial index.
    std::uint64_t trial_seed(int trial) const { return base_seed ^ static_cast<std::uint64_t>(trial); }

    void validate() const;
};

/// A benchmark: every listed system crossed with every listed strategy,
/// sharing all other settings.
struct BenchmarkConfig {
    std::vector<std::string> systems{"pendulum"};
    std::vector<StrategyKind> strategies{kAllStrategies.begin(), kAllStrategies.end()};
    int trials = 10;
    std::map<std::string, long> steps;          // per system; missing -> system default
    std::map<std::string, int> coverage_cells;  // per system; missing -> system default
    int horizon = 15;
    std::uint64_t base_seed = 1;
    int warmup_steps = 5;
    double chirp_f_low = 0.1;
    double chirp_f_high = 2.0;
    int max_consecutive_planning_failures = 5;
    OptimizerConfig optimizer;
    GpSettings gp;
    MetricsSettings metrics;
    nlohmann::json system_parameters = default_system_parameters();

    std::vector<ExperimentConfig> expand() const;
    void validate() const;

    /// Fully resolved form: every default written out.
    nlohmann::json to_json() const;
    static BenchmarkConfig from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});
    static BenchmarkConfig load(const std::filesystem::path& file);
};

struct Checkpoint {
    long step = 0;
    double rmse = 0.0;
};

struct StepLog {
    long step = 0;
    Vector control;
    std::string status;
};

struct TrialResult {
    std::string system;
    StrategyKind strategy = StrategyKind::prbs;
    std::uint64_t seed = 0;
    std::vector<Checkpoint> checkpoints;
    double coverage_final = 0.0;
    double wall_seconds = 0.0;
    std::string status = "ok";  // "ok" or "failed: <diagnostic>"
    std::vector<StepLog> steps;
    long observations = 0;
    long gp_updates = 0;
    long hyperopt_calls = 0;
    long hyperopt_regressions = 0;  // optimized likelihood below the starting value

    bool ok() const { return status == "ok"; }
    double final_rmse() const { return checkpoints.empty() ? 0.0 : checkpoints.back().rmse; }
};

/// Reproducible from (config, seed, grid). Failures are reported in the
/// result's status, never thrown.
TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed, const DynamicalSystem& system,
                      const EvaluationGrid& grid);

/// Convenience overload building the system and evaluation grid.
TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed);

struct Stats {
    double mean = 0.0;
    double stddev = 0.0;  // sample standard deviation, 0 for a single value
    double median = 0.0;
};

Stats describe(std::vector<double> values);

struct CheckpointSummary {
    long step = 0;
    int count = 0;
    Stats rmse;
};

struct CellSummary {
    std::string system;
    StrategyKind strategy = StrategyKind::prbs;
    int trials_ok = 0;
    int trials_failed = 0;
    std::optional<Stats> rmse_final;  // empty when no trial succeeded
    std::optional<Stats> coverage;
    std::vector<CheckpointSummary> checkpoints;
};

struct Report {
    std::vector<TrialResult> trials;
    std::vector<CellSummary> cells;
    std::map<std::string, std::uint64_t> grid_hashes;
};

/// Summaries in the order cells first appear in `trials`.
std::vector<CellSummary> summarize(const std::vector<TrialResult>& trials);

struct RunOptions {
    std::function<void(const TrialResult&)> on_trial;  // called serially
};

/// Trials run in an OpenMP worker pool; results are ordered by
/// (system, strategy, trial) regardless of scheduling.
Report run_benchmark(const BenchmarkConfig& config, const RunOptions& options = {});

std::string code_version();

/// Writes trials.csv, summary.csv, checkpoints.csv, controls.csv and
/// manifest.json into `out_dir` (created if needed).
void emit_results(const Report& report, const BenchmarkConfig& config, const std::filesystem::path& out_dir);

std::string trials_csv(const Report& report);
std::string summary_csv(const Report& report);
std::string checkpoints_csv(const Report& report);
nlohmann::json manifest(const Report& report, const BenchmarkConfig& config);

/// Parses trials.csv back into results; only the CSV-recorded fields are set.
std::vector<TrialResult> parse_trials_csv(const std::string& text);

/// Re-runs the configuration recorded in a manifest and writes the outputs
/// to `out_dir`. Throws if the rebuilt evaluation grids differ.
Report replay(const std::filesystem::path& manifest_file, const std::filesystem::path& out_dir,
              const RunOptions& options = {});

} // namespace activegp
