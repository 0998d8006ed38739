#include <fstream>
#include <set>
#include <sstream>

#include "activegp/errors.hpp"
#include "activegp/harness.hpp"

namespace activegp {

using nlohmann::json;

namespace {

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where)
{
    for (const auto& [key, value] : j.items())
        if (!allowed.contains(key))
            throw ContractViolation("unknown key '" + key + "' in " + where);
}

template <typename T>
void read(const json& j, const char* key, T& out)
{
    if (j.contains(key))
        out = j.at(key).get<T>();
}

json read_json_file(const std::filesystem::path& file)
{
    std::ifstream in(file);
    if (!in)
        throw IoError("cannot open '" + file.string() + "'");
    try {
        return json::parse(in, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw IoError("cannot parse '" + file.string() + "': " + e.what());
    }
}

template <typename T>
void read_per_system(const json& j, const char* key, std::map<std::string, T>& out, const std::vector<std::string>& systems)
{
    if (!j.contains(key))
        return;
    const json& v = j.at(key);
    if (v.is_number()) {
        for (const auto& s : systems)
            out[s] = v.template get<T>();
    } else if (v.is_object()) {
        for (const auto& [name, value] : v.items())
            out[name] = value.template get<T>();
    } else {
        throw ContractViolation(std::string("'") + key + "' must be a number or an object keyed by system");
    }
}

} // namespace

void ExperimentConfig::validate() const
{
    if (trials < 1)
        throw ContractViolation("trial count must be at least 1");
    if (strategy_config.horizon < 1 || steps < strategy_config.horizon)
        throw ContractViolation("need N >= M >= 1 (N = " + std::to_string(steps) +
                                ", M = " + std::to_string(strategy_config.horizon) + ")");
    if (coverage_cells < 1)
        throw ContractViolation("coverage cells per dimension must be positive");
    if (metrics.checkpoint_interval < 1 || metrics.grid_points < 1)
        throw ContractViolation("checkpoint interval and grid size must be positive");
    if (strategy_config.warmup_steps < 0 || max_consecutive_planning_failures < 1)
        throw ContractViolation("warmup steps must be >= 0 and the failure limit >= 1");
    if (!(strategy_config.chirp_f_low > 0.0) || !(strategy_config.chirp_f_high > strategy_config.chirp_f_low))
        throw ContractViolation("chirp needs 0 < f_low < f_high");
    if (gp.min_fit_points < 1 || gp.reopt_every < 1 || gp.hyperopt.restarts < 1 || gp.hyperopt.max_iterations < 0)
        throw ContractViolation("invalid GP settings");
    strategy_config.optimizer.validate();
    make_system(system, system_parameters);
}

std::vector<ExperimentConfig> BenchmarkConfig::expand() const
{
    std::vector<ExperimentConfig> out;
    for (const auto& sys : systems) {
        const SystemDefaults defaults = system_defaults(sys);
        for (StrategyKind kind : strategies) {
            ExperimentConfig c;
            c.system = sys;
            c.strategy = kind;
            c.trials = trials;
            c.steps = steps.contains(sys) ? steps.at(sys) : defaults.steps;
            c.coverage_cells = coverage_cells.contains(sys) ? coverage_cells.at(sys) : defaults.coverage_cells;
            c.base_seed = base_seed;
            c.max_consecutive_planning_failures = max_consecutive_planning_failures;
            c.strategy_config.horizon = horizon;
            c.strategy_config.warmup_steps = warmup_steps;
            c.strategy_config.chirp_f_low = chirp_f_low;
            c.strategy_config.chirp_f_high = chirp_f_high;
            c.strategy_config.optimizer = optimizer;
            c.gp = gp;
            c.metrics = metrics;
            c.system_parameters = system_parameters;
            out.push_back(std::move(c));
        }
    }
    return out;
}

void BenchmarkConfig::validate() const
{
    if (systems.empty() || strategies.empty())
        throw ContractViolation("benchmark needs at least one system and one strategy");
    for (const auto& c : expand())
        c.validate();
}

json BenchmarkConfig::to_json() const
{
    json j;
    j["systems"] = systems;
    json strategy_names = json::array();
    for (StrategyKind k : strategies)
        strategy_names.push_back(std::string(to_string(k)));
    j["strategies"] = strategy_names;
    j["trials"] = trials;
    json steps_j = json::object(), cells_j = json::object();
    for (const auto& s : systems) {
        const SystemDefaults d = system_defaults(s);
        steps_j[s] = steps.contains(s) ? steps.at(s) : d.steps;
        cells_j[s] = coverage_cells.contains(s) ? coverage_cells.at(s) : d.coverage_cells;
    }
    j["steps"] = steps_j;
    j["coverage_cells"] = cells_j;
    j["horizon"] = horizon;
    j["seed"] = base_seed;
    j["strategy"] = {{"warmup_steps", warmup_steps},
                     {"chirp_f_low", chirp_f_low},
                     {"chirp_f_high", chirp_f_high},
                     {"max_consecutive_planning_failures", max_consecutive_planning_failures}};
    j["optimizer"] = {{"restarts", optimizer.restarts},
                      {"population_size", optimizer.population_size},
                      {"elite_fraction", optimizer.elite_fraction},
                      {"iterations", optimizer.iterations},
                      {"refinement_steps", optimizer.refinement_steps},
                      {"convergence_tolerance", optimizer.convergence_tolerance},
                      {"control_penalty_weight", optimizer.control_penalty_weight}};
    j["gp"] = {{"restarts", gp.hyperopt.restarts},
               {"max_iterations", gp.hyperopt.max_iterations},
               {"gradient_tolerance", gp.hyperopt.gradient_tolerance},
               {"learn_noise", gp.hyperopt.learn_noise},
               {"restart_spread", gp.hyperopt.restart_spread},
               {"min_fit_points", gp.min_fit_points},
               {"reopt_cap_after", gp.reopt_cap_after},
               {"reopt_every", gp.reopt_every}};
    j["metrics"] = {{"grid_points", metrics.grid_points},
                    {"grid_seed", metrics.grid_seed},
                    {"checkpoint_interval", metrics.checkpoint_interval}};
    j["system_parameters"] = system_parameters;
    return j;
}

BenchmarkConfig BenchmarkConfig::from_json(const json& j, const std::filesystem::path& base_dir)
{
    if (!j.is_object())
        throw ContractViolation("config must be a JSON object");
    reject_unknown(j,
                   {"systems", "strategies", "trials", "steps", "coverage_cells", "horizon", "seed", "strategy",
                    "optimizer", "gp", "metrics", "system_parameters", "description"},
                   "config");
    BenchmarkConfig c;
    try {
        if (j.contains("systems"))
            c.systems = j.at("systems").is_string() ? std::vector<std::string>{j.at("systems").get<std::string>()}
                                                    : j.at("systems").get<std::vector<std::string>>();
        if (j.contains("strategies")) {
            const json& s = j.at("strategies");
            const auto names = s.is_string() ? std::vector<std::string>{s.get<std::string>()}
                                             : s.get<std::vector<std::string>>();
            c.strategies.clear();
            for (const auto& n : names)
                c.strategies.push_back(parse_strategy(n));
        }
        read(j, "trials", c.trials);
        read_per_system(j, "steps", c.steps, c.systems);
        read_per_system(j, "coverage_cells", c.coverage_cells, c.systems);
        read(j, "horizon", c.horizon);
        read(j, "seed", c.base_seed);

        if (j.contains("strategy")) {
            const json& s = j.at("strategy");
            reject_unknown(s, {"warmup_steps", "chirp_f_low", "chirp_f_high", "max_consecutive_planning_failures"},
                           "strategy");
            read(s, "warmup_steps", c.warmup_steps);
            read(s, "chirp_f_low", c.chirp_f_low);
            read(s, "chirp_f_high", c.chirp_f_high);
            read(s, "max_consecutive_planning_failures", c.max_consecutive_planning_failures);
        }
        if (j.contains("optimizer")) {
            const json& o = j.at("optimizer");
            reject_unknown(o,
                           {"restarts", "population_size", "elite_fraction", "iterations", "refinement_steps",
                            "convergence_tolerance", "control_penalty_weight"},
                           "optimizer");
            read(o, "restarts", c.optimizer.restarts);
            read(o, "population_size", c.optimizer.population_size);
            read(o, "elite_fraction", c.optimizer.elite_fraction);
            read(o, "iterations", c.optimizer.iterations);
            read(o, "refinement_steps", c.optimizer.refinement_steps);
            read(o, "convergence_tolerance", c.optimizer.convergence_tolerance);
            read(o, "control_penalty_weight", c.optimizer.control_penalty_weight);
        }
        if (j.contains("gp")) {
            const json& g = j.at("gp");
            reject_unknown(g,
                           {"restarts", "max_iterations", "gradient_tolerance", "learn_noise", "restart_spread",
                            "min_fit_points", "reopt_cap_after", "reopt_every"},
                           "gp");
            read(g, "restarts", c.gp.hyperopt.restarts);
            read(g, "max_iterations", c.gp.hyperopt.max_iterations);
            read(g, "gradient_tolerance", c.gp.hyperopt.gradient_tolerance);
            read(g, "learn_noise", c.gp.hyperopt.learn_noise);
            read(g, "restart_spread", c.gp.hyperopt.restart_spread);
            read(g, "min_fit_points", c.gp.min_fit_points);
            read(g, "reopt_cap_after", c.gp.reopt_cap_after);
            read(g, "reopt_every", c.gp.reopt_every);
        }
        if (j.contains("metrics")) {
            const json& m = j.at("metrics");
            reject_unknown(m, {"grid_points", "grid_seed", "checkpoint_interval"}, "metrics");
            read(m, "grid_points", c.metrics.grid_points);
            read(m, "grid_seed", c.metrics.grid_seed);
            read(m, "checkpoint_interval", c.metrics.checkpoint_interval);
        }
        if (j.contains("system_parameters")) {
            const json& p = j.at("system_parameters");
            json overrides = p.is_string() ? read_json_file(base_dir / p.get<std::string>()) : p;
            c.system_parameters = default_system_parameters();
            c.system_parameters.merge_patch(overrides);
        }
    } catch (const json::exception& e) {
        throw ContractViolation(std::string("invalid config: ") + e.what());
    }
    c.validate();
    return c;
}

BenchmarkConfig BenchmarkConfig::load(const std::filesystem::path& file)
{
    return from_json(read_json_file(file), file.parent_path());
}

} // namespace activegp
