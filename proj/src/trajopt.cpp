#include "activegp/trajopt.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "activegp/errors.hpp"

namespace activegp {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void sanitize(Eigen::Ref<Vector> values)
{
    for (Index i = 0; i < values.size(); ++i)
        if (!std::isfinite(values(i)))
            values(i) = kNegInf;
}

// Indices of the `count` largest values, ties broken by lower index.
std::vector<Index> top_indices(const Vector& values, Index count)
{
    std::vector<Index> idx(static_cast<std::size_t>(values.size()));
    std::iota(idx.begin(), idx.end(), Index{0});
    std::stable_sort(idx.begin(), idx.end(), [&](Index a, Index b) { return values(a) > values(b); });
    idx.resize(static_cast<std::size_t>(std::min<Index>(count, values.size())));
    return idx;
}

double control_penalty(const Eigen::Ref<const Vector>& flat, Index control_dim, const Eigen::Ref<const Vector>& w)
{
    double p = 0.0;
    for (Index k = 0; k < flat.size(); ++k) {
        const double u = flat(k);
        p += w(k % control_dim) * u * u;
    }
    return p;
}

Index state_dim_of(const GPModel& model, Index control_dim)
{
    const Index dx = model.input_dim() - control_dim;
    if (dx != model.output_dim())
        throw ContractViolation("model input dimension must equal state_dim + control_dim");
    return dx;
}

// Pushes every row of `states` one step through the GP mean. Rows whose
// prediction is non-finite are flagged in `alive` and reset to x0 so the
// batch stays well-formed.
template <typename OnStep>
void batch_rollout(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index control_dim,
                   const Eigen::Ref<const Matrix>& flat, std::vector<char>& alive, OnStep&& on_step)
{
    const Index pop = flat.rows();
    const Index dx = x0.size();
    if (flat.cols() % control_dim != 0)
        throw ContractViolation("flattened control sequence has the wrong width");
    const Index horizon = flat.cols() / control_dim;

    Matrix z(pop, dx + control_dim);
    z.leftCols(dx) = x0.transpose().replicate(pop, 1);
    for (Index i = 0; i < horizon; ++i) {
        z.rightCols(control_dim) = flat.middleCols(i * control_dim, control_dim);
        BatchPrediction pred = model.predict_batch(z);
        on_step(i, pred);
        for (Index p = 0; p < pop; ++p) {
            if (!pred.mean.row(p).allFinite() || !pred.variance.row(p).allFinite()) {
                alive[static_cast<std::size_t>(p)] = 0;
                pred.mean.row(p) = x0.transpose();
            }
        }
        z.leftCols(dx) = pred.mean;
    }
}

} // namespace

// ---------------------------------------------------------------------------

Vector ControlSequence::flatten() const
{
    Vector flat(values.size());
    for (Index i = 0; i < values.rows(); ++i)
        flat.segment(i * values.cols(), values.cols()) = values.row(i).transpose();
    return flat;
}

ControlSequence ControlSequence::unflatten(const Eigen::Ref<const Vector>& flat, Index control_dim)
{
    if (control_dim < 1 || flat.size() % control_dim != 0)
        throw ContractViolation("cannot unflatten control sequence");
    Matrix m(flat.size() / control_dim, control_dim);
    for (Index i = 0; i < m.rows(); ++i)
        m.row(i) = flat.segment(i * control_dim, control_dim).transpose();
    return ControlSequence(std::move(m));
}

void ControlSequence::validate(const Box& bounds) const
{
    if (values.rows() < 1)
        throw ContractViolation("control sequence must have at least one step");
    if (values.cols() != bounds.dim())
        throw ContractViolation("control sequence dimension does not match bounds");
    for (Index i = 0; i < values.rows(); ++i)
        if (!bounds.contains(values.row(i).transpose(), 1e-12))
            throw ContractViolation("control sequence entry out of bounds at step " + std::to_string(i));
}

Index OptimizerConfig::elite_count() const
{
    return std::max<Index>(2, static_cast<Index>(std::ceil(elite_fraction * population_size)));
}

void OptimizerConfig::validate() const
{
    if (restarts < 1 || population_size < 1 || iterations < 0 || refinement_steps < 0)
        throw ContractViolation("optimizer counts must be positive");
    if (!(elite_fraction > 0.0 && elite_fraction < 1.0))
        throw ContractViolation("elite_fraction must lie in (0, 1)");
    if (elite_fraction * population_size < 2.0)
        throw ContractViolation("elite_fraction * population_size must be at least 2");
    if (!(convergence_tolerance >= 0.0) || !(control_penalty_weight >= 0.0))
        throw ContractViolation("tolerance and penalty weight must be non-negative");
}

Vector penalty_weights(const Box& bounds, double weight)
{
    const Vector span = bounds.span();
    return (weight / span.array().square()).matrix();
}

// ---------------------------------------------------------------------------
// Box search

SearchResult maximize_in_box(const BatchObjective& objective, const Box& box, const OptimizerConfig& config,
                             std::mt19937_64& rng, std::span<const Vector> seeds)
{
    config.validate();
    box.validate("search box");
    const Index dim = box.dim();
    const Index pop = config.population_size;
    const Index elites = config.elite_count();
    const Vector span = box.span();

    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);

    SearchResult result;
    result.best_value = kNegInf;
    result.trace.initial_population_best = kNegInf;

    auto evaluate = [&](const Matrix& cands) {
        Vector v(cands.rows());
        objective(cands, v);
        sanitize(v);
        result.trace.evaluations += cands.rows();
        return v;
    };
    auto record = [&](const Vector& x, double v) {
        if (v > result.best_value) {
            result.best_value = v;
            result.best = x;
        }
        result.trace.best_per_iteration.push_back(result.best_value);
    };

    for (int r = 0; r < config.restarts; ++r) {
        Matrix cand(pop, dim);
        Index row = 0;
        if (r == 0) {
            for (const Vector& s : seeds) {
                if (row >= pop || s.size() != dim)
                    continue;
                cand.row(row++) = box.clamp(s).transpose();
                result.trace.seeds_injected.push_back(box.clamp(s));
            }
        }
        for (; row < pop; ++row)
            for (Index j = 0; j < dim; ++j)
                cand(row, j) = box.lower(j) + span(j) * uniform(rng);

        Vector values = evaluate(cand);
        result.trace.initial_population_best = std::max(result.trace.initial_population_best, values.maxCoeff());

        std::vector<Index> top = top_indices(values, elites);
        Matrix elite(static_cast<Index>(top.size()), dim);
        Vector elite_values(static_cast<Index>(top.size()));
        for (std::size_t e = 0; e < top.size(); ++e) {
            elite.row(static_cast<Index>(e)) = cand.row(top[e]);
            elite_values(static_cast<Index>(e)) = values(top[e]);
        }
        record(elite.row(0).transpose(), elite_values(0));

        for (int it = 0; it < config.iterations; ++it) {
            const Vector mean = elite.colwise().mean().transpose();
            const Vector sd =
                ((elite.rowwise() - mean.transpose()).array().square().colwise().sum() / static_cast<double>(elite.rows()))
                    .sqrt()
                    .transpose();
            if ((sd.array() / span.array()).maxCoeff() < config.convergence_tolerance)
                break;

            const Index fresh = pop - elite.rows();
            Matrix next(elite.rows() + fresh, dim);
            next.topRows(elite.rows()) = elite;
            for (Index p = 0; p < fresh; ++p) {
                Vector x(dim);
                for (Index j = 0; j < dim; ++j)
                    x(j) = mean(j) + sd(j) * normal(rng);
                next.row(elite.rows() + p) = box.clamp(x).transpose();
            }
            Vector next_values(next.rows());
            next_values.head(elite.rows()) = elite_values;
            next_values.tail(fresh) = evaluate(next.bottomRows(fresh));

            top = top_indices(next_values, elites);
            for (std::size_t e = 0; e < top.size(); ++e) {
                elite.row(static_cast<Index>(e)) = next.row(top[e]);
                elite_values(static_cast<Index>(e)) = next_values(top[e]);
            }
            record(elite.row(0).transpose(), elite_values(0));
        }
    }

    if (!std::isfinite(result.best_value))
        throw PlanningFailure("box search found no finite candidate");

    // Projected finite-difference gradient ascent on the incumbent, step
    // lengths measured in span-normalized coordinates.
    double reach = 0.1;
    for (int pass = 0; pass < config.refinement_steps && reach > 1e-10; ++pass) {
        const Vector& x = result.best;
        Matrix probes(2 * dim, dim);
        Vector delta(dim);
        for (Index j = 0; j < dim; ++j) {
            Vector up = x, down = x;
            const double h = 1e-5 * span(j);
            up(j) = std::min(box.upper(j), x(j) + h);
            down(j) = std::max(box.lower(j), x(j) - h);
            delta(j) = up(j) - down(j);
            probes.row(2 * j) = up.transpose();
            probes.row(2 * j + 1) = down.transpose();
        }
        const Vector fd = evaluate(probes);
        Vector direction(dim);
        for (Index j = 0; j < dim; ++j) {
            double g = (fd(2 * j) - fd(2 * j + 1)) / delta(j);
            if (!std::isfinite(g))
                g = 0.0;
            if ((x(j) >= box.upper(j) && g > 0.0) || (x(j) <= box.lower(j) && g < 0.0))
                g = 0.0;
            direction(j) = g * span(j);
        }
        const double norm = direction.norm();
        if (norm == 0.0)
            break;
        direction /= norm;

        constexpr Index kSteps = 8;
        Matrix trial(kSteps, dim);
        for (Index s = 0; s < kSteps; ++s) {
            const double len = reach * std::ldexp(1.0, -static_cast<int>(s));
            trial.row(s) = box.clamp(x + len * direction.cwiseProduct(span)).transpose();
        }
        const Vector tv = evaluate(trial);
        Index arg = 0;
        const double best_trial = tv.maxCoeff(&arg);
        if (best_trial > result.best_value) {
            result.best = trial.row(arg).transpose();
            result.best_value = best_trial;
            reach = std::min(1.0, 2.0 * reach * std::ldexp(1.0, -static_cast<int>(arg)));
        } else {
            reach *= std::ldexp(1.0, -static_cast<int>(kSteps));
        }
        result.trace.best_per_iteration.push_back(result.best_value);
    }
    return result;
}

// ---------------------------------------------------------------------------
// Objectives

Matrix mean_rollout(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls)
{
    const Index dx = state_dim_of(model, controls.control_dim());
    if (x0.size() != dx)
        throw ContractViolation("mean_rollout: initial state dimension mismatch");
    Matrix states(controls.horizon() + 1, dx);
    states.row(0) = x0.transpose();
    Vector z(model.input_dim());
    for (Index i = 0; i < controls.horizon(); ++i) {
        z.head(dx) = states.row(i).transpose();
        z.tail(controls.control_dim()) = controls.values.row(i).transpose();
        const Prediction p = model.predict(z);
        if (!p.mean.allFinite())
            throw PlanningFailure("mean rollout produced a non-finite state at step " + std::to_string(i));
        states.row(i + 1) = p.mean.transpose();
    }
    return states;
}

double entropy_objective(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                         const Eigen::Ref<const Vector>& penalty_weights)
{
    const Index dx = state_dim_of(model, controls.control_dim());
    if (x0.size() != dx)
        throw ContractViolation("entropy_objective: initial state dimension mismatch");
    if (penalty_weights.size() != controls.control_dim())
        throw ContractViolation("entropy_objective: one penalty weight per control dimension required");
    Vector x = x0;
    Vector z(model.input_dim());
    double total = 0.0;
    for (Index i = 0; i < controls.horizon(); ++i) {
        z.head(dx) = x;
        z.tail(controls.control_dim()) = controls.values.row(i).transpose();
        const Prediction p = model.predict(z);
        if (!p.mean.allFinite())
            throw PlanningFailure("entropy objective: non-finite prediction at step " + std::to_string(i));
        total += entropy_from_variance(p.variance);
        x = p.mean;
    }
    return total - control_penalty(controls.flatten(), controls.control_dim(), penalty_weights);
}

double entropy_objective(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                         double penalty_weight)
{
    return entropy_objective(model, x0, controls, Vector::Constant(controls.control_dim(), penalty_weight));
}

double goal_cost(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                 const Eigen::Ref<const Vector>& goal_state, const Eigen::Ref<const Vector>& state_scale,
                 const Eigen::Ref<const Vector>& penalty_weights)
{
    const Matrix states = mean_rollout(model, x0, controls);
    const Vector terminal = states.row(states.rows() - 1).transpose();
    const double dist = ((terminal - goal_state).array() / state_scale.array()).square().sum();
    return dist + control_penalty(controls.flatten(), controls.control_dim(), penalty_weights);
}

void entropy_objective_batch(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index control_dim,
                             const Eigen::Ref<const Vector>& penalty_weights, const Eigen::Ref<const Matrix>& flat,
                             Eigen::Ref<Vector> values)
{
    state_dim_of(model, control_dim);
    const Index pop = flat.rows();
    std::vector<char> alive(static_cast<std::size_t>(pop), 1);
    values.setZero();
    batch_rollout(model, x0, control_dim, flat, alive, [&](Index, const BatchPrediction& pred) {
        for (Index p = 0; p < pop; ++p)
            values(p) += entropy_from_variance(pred.variance.row(p).transpose());
    });
    for (Index p = 0; p < pop; ++p) {
        values(p) = alive[static_cast<std::size_t>(p)]
                        ? values(p) - control_penalty(flat.row(p).transpose(), control_dim, penalty_weights)
                        : kNegInf;
    }
}

void goal_cost_batch(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index control_dim,
                     const Eigen::Ref<const Vector>& goal_state, const Eigen::Ref<const Vector>& state_scale,
                     const Eigen::Ref<const Vector>& penalty_weights, const Eigen::Ref<const Matrix>& flat,
                     Eigen::Ref<Vector> values)
{
    state_dim_of(model, control_dim);
    const Index pop = flat.rows();
    const Index horizon = flat.cols() / control_dim;
    std::vector<char> alive(static_cast<std::size_t>(pop), 1);
    Matrix terminal;
    batch_rollout(model, x0, control_dim, flat, alive, [&](Index i, const BatchPrediction& pred) {
        if (i == horizon - 1)
            terminal = pred.mean;
    });
    for (Index p = 0; p < pop; ++p) {
        if (!alive[static_cast<std::size_t>(p)]) {
            values(p) = std::numeric_limits<double>::infinity();
            continue;
        }
        const double dist = ((terminal.row(p).transpose() - goal_state).array() / state_scale.array()).square().sum();
        values(p) = dist + control_penalty(flat.row(p).transpose(), control_dim, penalty_weights);
    }
}

// ---------------------------------------------------------------------------
// Planners

namespace {

Box repeat_box(const Box& bounds, Index horizon)
{
    return {bounds.lower.replicate(horizon, 1), bounds.upper.replicate(horizon, 1)};
}

void check_plan_inputs(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index horizon, const Box& bounds)
{
    if (horizon < 1)
        throw ContractViolation("planning horizon must be at least 1");
    bounds.validate("control bounds");
    const Index dx = state_dim_of(model, bounds.dim());
    if (x0.size() != dx || !x0.allFinite())
        throw ContractViolation("planning start state has the wrong dimension or is non-finite");
}

} // namespace

PlannedTrajectory optimize_entropy(const GPModel& model, const Eigen::Ref<const Vector>& x0,
                                   const EntropyPlanRequest& request, const OptimizerConfig& config,
                                   std::mt19937_64& rng, SearchTrace* trace)
{
    check_plan_inputs(model, x0, request.horizon, request.bounds);
    const Index du = request.bounds.dim();
    const Vector weights = penalty_weights(request.bounds, config.control_penalty_weight);

    std::vector<Vector> seeds;
    seeds.push_back(Vector::Zero(request.horizon * du));
    if (request.warm_start != nullptr && request.warm_start->horizon() == request.horizon &&
        request.warm_start->control_dim() == du)
        seeds.push_back(request.warm_start->flatten());

    const BatchObjective objective = [&](const Eigen::Ref<const Matrix>& flat, Eigen::Ref<Vector> values) {
        entropy_objective_batch(model, x0, du, weights, flat, values);
    };
    SearchResult found = maximize_in_box(objective, repeat_box(request.bounds, request.horizon), config, rng, seeds);

    PlannedTrajectory plan;
    plan.controls = ControlSequence::unflatten(found.best, du);
    plan.predicted_states = mean_rollout(model, x0, plan.controls);
    plan.objective_value = entropy_objective(model, x0, plan.controls, weights);
    if (!std::isfinite(plan.objective_value))
        throw PlanningFailure("entropy plan has a non-finite objective");
    if (trace != nullptr)
        *trace = std::move(found.trace);
    return plan;
}

PlannedTrajectory optimize_goal(const GPModel& model, const Eigen::Ref<const Vector>& x0,
                                const GoalPlanRequest& request, const OptimizerConfig& config, std::mt19937_64& rng,
                                SearchTrace* trace)
{
    check_plan_inputs(model, x0, request.horizon, request.bounds);
    if (request.goal_state.size() != x0.size() || request.state_scale.size() != x0.size() ||
        !(request.state_scale.array() > 0.0).all())
        throw ContractViolation("goal state and positive state scale must match the state dimension");
    const Index du = request.bounds.dim();
    const Vector weights = penalty_weights(request.bounds, config.control_penalty_weight);

    std::vector<Vector> seeds{Vector::Zero(request.horizon * du)};
    const BatchObjective objective = [&](const Eigen::Ref<const Matrix>& flat, Eigen::Ref<Vector> values) {
        goal_cost_batch(model, x0, du, request.goal_state, request.state_scale, weights, flat, values);
        values = -values;
    };
    SearchResult found = maximize_in_box(objective, repeat_box(request.bounds, request.horizon), config, rng, seeds);

    PlannedTrajectory plan;
    plan.controls = ControlSequence::unflatten(found.best, du);
    plan.predicted_states = mean_rollout(model, x0, plan.controls);
    plan.objective_value = -goal_cost(model, x0, plan.controls, request.goal_state, request.state_scale, weights);
    if (!std::isfinite(plan.objective_value))
        throw PlanningFailure("goal plan has a non-finite objective");
    if (trace != nullptr)
        *trace = std::move(found.trace);
    return plan;
}

} // namespace activegp
