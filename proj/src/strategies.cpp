#include "activegp/strategies.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "activegp/errors.hpp"

namespace activegp {

std::string_view to_string(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::prbs: return "prbs";
    case StrategyKind::chirp: return "chirp";
    case StrategyKind::greedy: return "greedy";
    case StrategyKind::sep: return "sep";
    case StrategyKind::rec: return "rec";
    case StrategyKind::pa: return "pa";
    }
    return "unknown";
}

StrategyKind parse_strategy(std::string_view name)
{
    for (StrategyKind k : kAllStrategies)
        if (to_string(k) == name)
            return k;
    throw ContractViolation("unknown strategy '" + std::string(name) + "'");
}

UpdateCadence cadence_of(StrategyKind kind)
{
    switch (kind) {
    case StrategyKind::greedy:
    case StrategyKind::rec: return UpdateCadence::per_step;
    case StrategyKind::sep:
    case StrategyKind::pa: return UpdateCadence::per_round;
    case StrategyKind::prbs:
    case StrategyKind::chirp: return UpdateCadence::checkpoint_only;
    }
    return UpdateCadence::checkpoint_only;
}

bool is_model_based(StrategyKind kind)
{
    return cadence_of(kind) != UpdateCadence::checkpoint_only;
}

Vector random_control(const Box& bounds, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    Vector u(bounds.dim());
    for (Index j = 0; j < u.size(); ++j)
        u(j) = bounds.lower(j) + (bounds.upper(j) - bounds.lower(j)) * uniform(rng);
    return u;
}

Vector prbs_next(ExplorationState& state, const Box& bounds, int max_hold, std::mt19937_64& rng)
{
    if (max_hold < 1)
        throw ContractViolation("PRBS hold time must be at least one step");
    if (state.prbs_hold_remaining <= 0 || state.prbs_level.size() != bounds.dim()) {
        std::bernoulli_distribution coin(0.5);
        state.prbs_level.resize(bounds.dim());
        for (Index j = 0; j < bounds.dim(); ++j)
            state.prbs_level(j) = coin(rng) ? bounds.upper(j) : bounds.lower(j);
        state.prbs_hold_remaining = std::uniform_int_distribution<int>(1, max_hold)(rng);
    }
    --state.prbs_hold_remaining;
    state.last_status = "open-loop";
    return state.prbs_level;
}

double chirp_phase(long k, const ChirpSchedule& schedule)
{
    const double t = static_cast<double>(k) * schedule.dt;
    const double duration = static_cast<double>(std::max(1L, schedule.duration_steps)) * schedule.dt;
    const double sweep = (schedule.f_high - schedule.f_low) / duration;
    return 2.0 * std::numbers::pi * (schedule.f_low * t + 0.5 * sweep * t * t);
}

Vector chirp_next(const ExplorationState& state, const Box& bounds, const ChirpSchedule& schedule)
{
    const double s = std::sin(chirp_phase(state.step, schedule));
    // clamp absorbs the last-ulp overshoot of center + half-span
    return bounds.clamp(bounds.center() + 0.5 * s * bounds.span());
}

Vector greedy_next(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current,
                   const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng, SearchTrace* trace)
{
    if (model == nullptr) {
        state.last_status = "random:no-model";
        return random_control(bounds, rng);
    }
    try {
        EntropyPlanRequest req{1, bounds, nullptr};
        const PlannedTrajectory plan = optimize_entropy(*model, x_current, req, config, rng, trace);
        state.last_status = "ok";
        return plan.controls.control(0);
    } catch (const PlanningFailure&) {
        state.last_status = "random:planning-failure";
        return random_control(bounds, rng);
    }
}

SepPlan sep_step(ExplorationState& state, const GPModel& model, const Eigen::Ref<const Vector>& x_current, int horizon,
                 const SystemSpec& system, const OptimizerConfig& config, std::mt19937_64& rng)
{
    if (horizon < 1)
        throw ContractViolation("sep horizon must be at least 1");
    const Index dx = system.state_dim;
    const Index du = system.control_dim;
    SepPlan out;

    Box search{Vector(dx + du), Vector(dx + du)};
    search.lower << system.region_of_interest.lower, system.control_bounds.lower;
    search.upper << system.region_of_interest.upper, system.control_bounds.upper;

    SearchResult target;
    try {
        const BatchObjective objective = [&](const Eigen::Ref<const Matrix>& z, Eigen::Ref<Vector> values) {
            const BatchPrediction pred = model.predict_batch(z);
            for (Index p = 0; p < z.rows(); ++p)
                values(p) = entropy_from_variance(pred.variance.row(p).transpose());
        };
        target = maximize_in_box(objective, search, config, rng);
    } catch (const PlanningFailure&) {
        out.controls.push_back(greedy_next(state, &model, x_current, system.control_bounds, config, rng));
        state.last_status = "greedy:target-search-failure";
        return out;
    }
    out.target = target.best;
    out.target_search = std::move(target.trace);
    state.sep_target = out.target;

    const Vector goal_state = out.target.head(dx);
    const Vector goal_control = out.target.tail(du);
    try {
        GoalPlanRequest req{horizon, system.control_bounds, goal_state, system.region_of_interest.span()};
        const PlannedTrajectory plan = optimize_goal(model, x_current, req, config, rng);
        for (Index i = 0; i < plan.controls.horizon(); ++i)
            out.controls.push_back(plan.controls.control(i));
        state.last_status = "ok";
    } catch (const PlanningFailure&) {
        try {
            EntropyPlanRequest req{horizon, system.control_bounds, nullptr};
            const PlannedTrajectory plan = optimize_entropy(model, x_current, req, config, rng);
            for (Index i = 0; i < plan.controls.horizon(); ++i)
                out.controls.push_back(plan.controls.control(i));
            state.last_status = "entropy:goal-planning-failure";
        } catch (const PlanningFailure&) {
            for (int i = 0; i < horizon; ++i)
                out.controls.push_back(random_control(system.control_bounds, rng));
            state.last_status = "random:planning-failure";
        }
    }
    out.controls.push_back(system.control_bounds.clamp(goal_control));
    return out;
}

Vector rec_step(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current, int horizon,
                const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng, SearchTrace* trace)
{
    if (model == nullptr) {
        state.last_status = "random:no-model";
        return random_control(bounds, rng);
    }
    try {
        const ControlSequence* warm = state.warm_start ? &*state.warm_start : nullptr;
        EntropyPlanRequest req{horizon, bounds, warm};
        const PlannedTrajectory plan = optimize_entropy(*model, x_current, req, config, rng, trace);
        if (horizon > 1) {
            Matrix shifted(horizon, bounds.dim());
            shifted.topRows(horizon - 1) = plan.controls.values.bottomRows(horizon - 1);
            shifted.row(horizon - 1) = plan.controls.values.row(horizon - 1);
            state.warm_start = ControlSequence(std::move(shifted));
        }
        state.last_status = "ok";
        return plan.controls.control(0);
    } catch (const PlanningFailure&) {
        state.warm_start.reset();
        state.last_status = "random:planning-failure";
        return random_control(bounds, rng);
    }
}

std::vector<Vector> pa_step(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current,
                            int horizon, const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng)
{
    std::vector<Vector> out;
    if (model == nullptr) {
        state.last_status = "random:no-model";
        for (int i = 0; i < horizon; ++i)
            out.push_back(random_control(bounds, rng));
        return out;
    }
    try {
        EntropyPlanRequest req{horizon, bounds, nullptr};
        const PlannedTrajectory plan = optimize_entropy(*model, x_current, req, config, rng);
        for (Index i = 0; i < plan.controls.horizon(); ++i)
            out.push_back(plan.controls.control(i));
        state.last_status = "ok";
    } catch (const PlanningFailure&) {
        out.clear();
        for (int i = 0; i < horizon; ++i)
            out.push_back(random_control(bounds, rng));
        state.last_status = "random:planning-failure";
    }
    return out;
}

std::vector<Vector> next_controls(ExplorationState& state, const StrategyContext& ctx, const GPModel* model,
                                  const Eigen::Ref<const Vector>& x_current, std::mt19937_64& rng)
{
    if (ctx.system == nullptr || ctx.config == nullptr)
        throw ContractViolation("strategy context is incomplete");
    const SystemSpec& sys = *ctx.system;
    const StrategyConfig& cfg = *ctx.config;
    const Box& bounds = sys.control_bounds;

    if (state.step < cfg.warmup_steps) {
        state.last_status = "warmup";
        return {random_control(bounds, rng)};
    }

    switch (ctx.kind) {
    case StrategyKind::prbs: return {prbs_next(state, bounds, cfg.horizon, rng)};
    case StrategyKind::chirp: {
        state.last_status = "open-loop";
        const ChirpSchedule schedule{cfg.chirp_f_low, cfg.chirp_f_high, sys.dt, ctx.budget};
        return {chirp_next(state, bounds, schedule)};
    }
    case StrategyKind::greedy: return {greedy_next(state, model, x_current, bounds, cfg.optimizer, rng)};
    case StrategyKind::rec: return {rec_step(state, model, x_current, cfg.horizon, bounds, cfg.optimizer, rng)};
    case StrategyKind::pa: return pa_step(state, model, x_current, cfg.horizon, bounds, cfg.optimizer, rng);
    case StrategyKind::sep: {
        if (model == nullptr) {
            state.last_status = "random:no-model";
            return {random_control(bounds, rng)};
        }
        return sep_step(state, *model, x_current, cfg.horizon, sys, cfg.optimizer, rng).controls;
    }
    }
    throw ContractViolation("unhandled strategy");
}

} // namespace activegp
