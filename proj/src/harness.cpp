#include "activegp/harness.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

#include <omp.h>

#include "activegp/csv.hpp"
#include "activegp/errors.hpp"

#ifndef ACTIVEGP_VERSION
#define ACTIVEGP_VERSION "0.0.0"
#endif
#ifndef ACTIVEGP_GIT_DESCRIBE
#define ACTIVEGP_GIT_DESCRIBE "unknown"
#endif

namespace activegp {

namespace {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Independent generator per (trial seed, purpose).
std::mt19937_64 stream(std::uint64_t seed, std::uint64_t purpose)
{
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(purpose)};
    return std::mt19937_64(seq);
}

enum Stream : std::uint64_t { kEnvironment = 1, kStrategy = 2, kHyperopt = 3 };

// Owns the learner's data and model and applies the refit policy.
class ModelKeeper {
public:
    ModelKeeper(const SystemSpec& spec, const GpSettings& settings, std::uint64_t seed)
        : settings_(settings), noise_(std::max(spec.noise_variance, 1e-6)), seed_(seed),
          data_(spec.state_dim + spec.control_dim, spec.state_dim)
    {
        hyp_ = initial_hyperparameters(data_, noise_);
        model_ = fit(data_, hyp_);
    }

    void add(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& y) { data_.append_row(z, y); }

    bool stale() const { return model_.size() != data_.size(); }
    const GPModel& model() const { return model_; }
    long observations() const { return data_.size(); }
    long updates() const { return events_; }
    long hyperopt_calls() const { return hyperopt_calls_; }
    long hyperopt_regressions() const { return regressions_; }

    void update()
    {
        if (!stale())
            return;
        const Index n = data_.size();
        if (n < settings_.min_fit_points) {
            hyp_ = initial_hyperparameters(data_, noise_);
            model_ = fit(data_, hyp_);
        } else if (n <= settings_.reopt_cap_after || events_ % settings_.reopt_every == 0) {
            const std::vector<Hyperparameters> heuristic = initial_hyperparameters(data_, noise_);
            for (Index d = 0; d < data_.output_dim(); ++d) {
                const std::size_t di = static_cast<std::size_t>(d);
                HyperOptConfig cfg = settings_.hyperopt;
                cfg.seed = splitmix64(seed_ ^ splitmix64((static_cast<std::uint64_t>(events_) << 8) | di));
                const Hyperparameters& start = optimized_ ? hyp_[di] : heuristic[di];
                const HyperOptResult res = optimize_hyperparameters(data_, d, start, cfg);
                ++hyperopt_calls_;
                if (res.log_likelihood < res.initial_log_likelihood)
                    ++regressions_;
                hyp_[di] = res.hyp;
            }
            optimized_ = true;
            model_ = fit(data_, hyp_);
        } else {
            const Index m = model_.size();
            model_ = add_observations(model_, data_.inputs.bottomRows(n - m), data_.targets.bottomRows(n - m));
        }
        ++events_;
    }

private:
    GpSettings settings_;
    double noise_;
    std::uint64_t seed_;
    Dataset data_;
    std::vector<Hyperparameters> hyp_;
    GPModel model_;
    bool optimized_ = false;
    long events_ = 0;
    long hyperopt_calls_ = 0;
    long regressions_ = 0;
};

bool is_planning_failure(const std::string& status)
{
    return status.find("planning-failure") != std::string::npos;
}

} // namespace

// ---------------------------------------------------------------------------

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed, const DynamicalSystem& system,
                      const EvaluationGrid& grid)
{
    const auto started = std::chrono::steady_clock::now();
    const SystemSpec& spec = system.spec();

    TrialResult result;
    result.system = config.system;
    result.strategy = config.strategy;
    result.seed = seed;

    try {
        config.validate();
        std::mt19937_64 env_rng = stream(seed, kEnvironment);
        std::mt19937_64 strategy_rng = stream(seed, kStrategy);
        ModelKeeper keeper(spec, config.gp, splitmix64(seed ^ kHyperopt));

        const UpdateCadence cadence = cadence_of(config.strategy);
        const bool model_based = is_model_based(config.strategy);
        const StrategyContext ctx{config.strategy, &spec, &config.strategy_config, config.steps};

        ExplorationState state;
        CoverageGrid cover(spec.region_of_interest, config.coverage_cells);
        Vector x = spec.initial_state;
        cover.visit(x);
        int consecutive_failures = 0;

        for (long k = 0; k < config.steps;) {
            if (state.pending.empty()) {
                if (cadence == UpdateCadence::per_round)
                    keeper.update();
                const GPModel* model = model_based ? &keeper.model() : nullptr;
                std::vector<Vector> batch = next_controls(state, ctx, model, x, strategy_rng);
                if (batch.empty())
                    throw PlanningFailure("strategy returned no controls");
                const long room = config.steps - k;
                if (static_cast<long>(batch.size()) > room)
                    batch.resize(static_cast<std::size_t>(room));
                for (auto& u : batch)
                    state.pending.push_back(std::move(u));

                consecutive_failures = is_planning_failure(state.last_status) ? consecutive_failures + 1 : 0;
                if (consecutive_failures >= config.max_consecutive_planning_failures)
                    throw PlanningFailure("repeated planning failure (" + std::to_string(consecutive_failures) +
                                          " consecutive) at step " + std::to_string(k));
            }

            const Vector u = state.pending.front();
            state.pending.pop_front();
            if (!spec.control_bounds.contains(u, 1e-12))
                throw ContractViolation("strategy emitted an out-of-bounds control at step " + std::to_string(k));

            const Vector next = true_step(system, x, u, k);
            const Vector y = observe(system, next, env_rng);
            Vector z(spec.state_dim + spec.control_dim);
            z << x, u;
            keeper.add(z, y);
            result.steps.push_back({k, u, state.last_status});
            cover.visit(next);
            x = next;
            ++k;
            state.step = k;

            if (cadence == UpdateCadence::per_step)
                keeper.update();

            if (k % config.metrics.checkpoint_interval == 0 || k == config.steps) {
                if (cadence == UpdateCadence::checkpoint_only || (k == config.steps && cadence != UpdateCadence::per_round))
                    keeper.update();
                if (keeper.stale()) {
                    // mid-round: evaluate a current fit without touching the strategy's model
                    ModelKeeper snapshot = keeper;
                    snapshot.update();
                    result.checkpoints.push_back({k, rmse(snapshot.model(), grid)});
                } else {
                    result.checkpoints.push_back({k, rmse(keeper.model(), grid)});
                }
            }
        }

        result.coverage_final = cover.percent();
        result.observations = keeper.observations();
        result.gp_updates = keeper.updates();
        result.hyperopt_calls = keeper.hyperopt_calls();
        result.hyperopt_regressions = keeper.hyperopt_regressions();
    } catch (const std::exception& e) {
        result.status = std::string("failed: ") + e.what();
    }

    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
}

TrialResult run_trial(const ExperimentConfig& config, std::uint64_t seed)
{
    const auto system = make_system(config.system, config.system_parameters);
    const EvaluationGrid grid = make_evaluation_grid(*system, config.metrics.grid_points, config.metrics.grid_seed);
    return run_trial(config, seed, *system, grid);
}

// ---------------------------------------------------------------------------
// Aggregation

Stats describe(std::vector<double> values)
{
    Stats s;
    if (values.empty())
        return s;
    const double n = static_cast<double>(values.size());
    double sum = 0.0;
    for (double v : values)
        sum += v;
    s.mean = sum / n;
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values)
            ss += (v - s.mean) * (v - s.mean);
        s.stddev = std::sqrt(ss / (n - 1.0));
    }
    std::sort(values.begin(), values.end());
    const std::size_t mid = values.size() / 2;
    s.median = values.size() % 2 == 1 ? values[mid] : 0.5 * (values[mid - 1] + values[mid]);
    return s;
}

std::vector<CellSummary> summarize(const std::vector<TrialResult>& trials)
{
    std::vector<CellSummary> cells;
    auto find_cell = [&](const TrialResult& t) -> CellSummary& {
        for (auto& c : cells)
            if (c.system == t.system && c.strategy == t.strategy)
                return c;
        cells.push_back({});
        cells.back().system = t.system;
        cells.back().strategy = t.strategy;
        return cells.back();
    };
    for (const auto& t : trials)
        find_cell(t);

    for (auto& cell : cells) {
        std::vector<double> final_rmse, cov;
        std::map<long, std::vector<double>> by_step;
        for (const auto& t : trials) {
            if (t.system != cell.system || t.strategy != cell.strategy)
                continue;
            if (!t.ok()) {
                ++cell.trials_failed;
                continue;
            }
            ++cell.trials_ok;
            final_rmse.push_back(t.final_rmse());
            cov.push_back(t.coverage_final);
            for (const auto& c : t.checkpoints)
                by_step[c.step].push_back(c.rmse);
        }
        if (cell.trials_ok > 0) {
            cell.rmse_final = describe(final_rmse);
            cell.coverage = describe(cov);
        }
        for (auto& [step, values] : by_step)
            cell.checkpoints.push_back({step, static_cast<int>(values.size()), describe(values)});
    }
    return cells;
}

Report run_benchmark(const BenchmarkConfig& config, const RunOptions& options)
{
    config.validate();
    const std::vector<ExperimentConfig> cells = config.expand();

    Report report;
    std::map<std::string, std::unique_ptr<DynamicalSystem>> systems;
    std::map<std::string, EvaluationGrid> grids;
    for (const auto& name : config.systems) {
        systems[name] = make_system(name, config.system_parameters);
        grids[name] = make_evaluation_grid(*systems[name], config.metrics.grid_points, config.metrics.grid_seed);
        report.grid_hashes[name] = grids[name].hash();
    }

    struct Job {
        std::size_t cell;
        int trial;
    };
    std::vector<Job> jobs;
    for (std::size_t c = 0; c < cells.size(); ++c)
        for (int t = 0; t < cells[c].trials; ++t)
            jobs.push_back({c, t});

    report.trials.resize(jobs.size());
    const long job_count = static_cast<long>(jobs.size());
#pragma omp parallel for schedule(dynamic, 1)
    for (long j = 0; j < job_count; ++j) {
        const Job& job = jobs[static_cast<std::size_t>(j)];
        const ExperimentConfig& cfg = cells[job.cell];
        report.trials[static_cast<std::size_t>(j)] =
            run_trial(cfg, cfg.trial_seed(job.trial), *systems.at(cfg.system), grids.at(cfg.system));
        if (options.on_trial) {
#pragma omp critical(activegp_on_trial)
            options.on_trial(report.trials[static_cast<std::size_t>(j)]);
        }
    }

    report.cells = summarize(report.trials);
    return report;
}

std::string code_version()
{
    return std::string(ACTIVEGP_VERSION) + "+" + ACTIVEGP_GIT_DESCRIBE;
}

// ---------------------------------------------------------------------------
// Output

namespace {

std::string fmt(double v) { return csv::format_double(v); }

void write_file(const std::filesystem::path& path, const std::string& content)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out)
        throw IoError("cannot open '" + path.string() + "' for writing");
    out << content;
    if (!out)
        throw IoError("failed writing '" + path.string() + "'");
}

std::string read_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string controls_csv(const Report& report)
{
    std::string out = "system,strategy,seed,step,status,control\n";
    for (const auto& t : report.trials) {
        for (const auto& s : t.steps) {
            std::string u;
            for (Index j = 0; j < s.control.size(); ++j)
                u += (j ? " " : "") + fmt(s.control(j));
            out += csv::join({t.system, std::string(to_string(t.strategy)), std::to_string(t.seed),
                              std::to_string(s.step), s.status, u}) + "\n";
        }
    }
    return out;
}

} // namespace

std::string trials_csv(const Report& report)
{
    std::string out = "system,strategy,seed,step,rmse,coverage_final,wall_s,status\n";
    for (const auto& t : report.trials) {
        const std::string head = csv::join({t.system, std::string(to_string(t.strategy)), std::to_string(t.seed)});
        const std::string tail = csv::join({fmt(t.coverage_final), fmt(t.wall_seconds), t.status});
        if (t.checkpoints.empty())
            out += head + ",,," + tail + "\n";
        for (const auto& c : t.checkpoints)
            out += head + "," + std::to_string(c.step) + "," + fmt(c.rmse) + "," + tail + "\n";
    }
    return out;
}

std::string summary_csv(const Report& report)
{
    std::string out = "system,strategy,trials_ok,trials_failed,rmse_final_mean,rmse_final_std,rmse_final_median,"
                      "coverage_mean,coverage_std,coverage_median\n";
    for (const auto& c : report.cells) {
        std::vector<std::string> row{c.system, std::string(to_string(c.strategy)), std::to_string(c.trials_ok),
                                     std::to_string(c.trials_failed)};
        for (const auto& s : {c.rmse_final, c.coverage}) {
            if (s) {
                row.push_back(fmt(s->mean));
                row.push_back(fmt(s->stddev));
                row.push_back(fmt(s->median));
            } else {
                row.insert(row.end(), 3, "");
            }
        }
        out += csv::join(row) + "\n";
    }
    return out;
}

std::string checkpoints_csv(const Report& report)
{
    std::string out = "system,strategy,step,trials,rmse_mean,rmse_std\n";
    for (const auto& c : report.cells)
        for (const auto& k : c.checkpoints)
            out += csv::join({c.system, std::string(to_string(c.strategy)), std::to_string(k.step),
                              std::to_string(k.count), fmt(k.rmse.mean), fmt(k.rmse.stddev)}) + "\n";
    return out;
}

nlohmann::json manifest(const Report& report, const BenchmarkConfig& config)
{
    nlohmann::json m;
    m["format"] = "activegp-run-manifest";
    m["format_version"] = 1;
    m["code_version"] = code_version();
    m["config"] = config.to_json();
    nlohmann::json seeds = nlohmann::json::array();
    for (int t = 0; t < config.trials; ++t)
        seeds.push_back(config.base_seed ^ static_cast<std::uint64_t>(t));
    m["trial_seeds"] = seeds;
    m["seed_rule"] = "trial_seed = seed XOR trial_index";
    nlohmann::json hashes = nlohmann::json::object();
    for (const auto& [name, h] : report.grid_hashes)
        hashes[name] = h;
    m["evaluation_grid_fnv1a"] = hashes;
    return m;
}

void emit_results(const Report& report, const BenchmarkConfig& config, const std::filesystem::path& out_dir)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec)
        throw IoError("cannot create output directory '" + out_dir.string() + "': " + ec.message());
    write_file(out_dir / "trials.csv", trials_csv(report));
    write_file(out_dir / "summary.csv", summary_csv(report));
    write_file(out_dir / "checkpoints.csv", checkpoints_csv(report));
    write_file(out_dir / "controls.csv", controls_csv(report));
    write_file(out_dir / "manifest.json", manifest(report, config).dump(2) + "\n");
}

std::vector<TrialResult> parse_trials_csv(const std::string& text)
{
    const auto rows = csv::parse(text);
    if (rows.empty() || csv::join(rows.front()) != "system,strategy,seed,step,rmse,coverage_final,wall_s,status")
        throw IoError("trials.csv: unexpected header");

    std::vector<TrialResult> out;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& f = rows[r];
        if (f.size() != 8)
            throw IoError("trials.csv: row " + std::to_string(r) + " has " + std::to_string(f.size()) + " fields");
        const StrategyKind kind = parse_strategy(f[1]);
        const std::uint64_t seed = std::stoull(f[2]);
        if (out.empty() || out.back().system != f[0] || out.back().strategy != kind || out.back().seed != seed) {
            TrialResult t;
            t.system = f[0];
            t.strategy = kind;
            t.seed = seed;
            t.coverage_final = csv::parse_double(f[5]);
            t.wall_seconds = csv::parse_double(f[6]);
            t.status = f[7];
            out.push_back(std::move(t));
        }
        if (!f[3].empty())
            out.back().checkpoints.push_back({std::stol(f[3]), csv::parse_double(f[4])});
    }
    return out;
}

Report replay(const std::filesystem::path& manifest_file, const std::filesystem::path& out_dir, const RunOptions& options)
{
    nlohmann::json m;
    try {
        m = nlohmann::json::parse(read_file(manifest_file));
    } catch (const nlohmann::json::exception& e) {
        throw IoError("cannot parse manifest '" + manifest_file.string() + "': " + e.what());
    }
    if (m.value("format", "") != "activegp-run-manifest")
        throw IoError("'" + manifest_file.string() + "' is not a run manifest");
    const BenchmarkConfig config = BenchmarkConfig::from_json(m.at("config"));
    Report report = run_benchmark(config, options);
    if (m.contains("evaluation_grid_fnv1a")) {
        for (const auto& [name, h] : m.at("evaluation_grid_fnv1a").items())
            if (report.grid_hashes.at(name) != h.get<std::uint64_t>())
                throw IoError("evaluation grid for '" + name + "' differs from the recorded run");
    }
    emit_results(report, config, out_dir);
    return report;
}

} // namespace activegp
