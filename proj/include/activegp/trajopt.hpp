#pragma once

#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <vector>

#include "activegp/gp.hpp"

namespace activegp {

/// M x d_u bounded control trajectory, one control per row.
struct ControlSequence {
    Matrix values;

    ControlSequence() = default;
    explicit ControlSequence(Matrix v) : values(std::move(v)) {}

    Index horizon() const { return values.rows(); }
    Index control_dim() const { return values.cols(); }
    Vector control(Index i) const { return values.row(i).transpose(); }

    /// Row-major flattening (time-major), as used by the box search.
    Vector flatten() const;
    static ControlSequence unflatten(const Eigen::Ref<const Vector>& flat, Index control_dim);

    void validate(const Box& bounds) const;
};

struct OptimizerConfig {
    int restarts = 2;
    int population_size = 64;
    double elite_fraction = 0.125;
    int iterations = 15;
    int refinement_steps = 20;
    double convergence_tolerance = 1e-4;  // relative sampling spread below which a restart stops
    double control_penalty_weight = 0.01; // divided by span^2 per control dimension

    Index elite_count() const;
    void validate() const;
};

struct PlannedTrajectory {
    ControlSequence controls;
    Matrix predicted_states;  // (M + 1) x d_x, mean rollout starting at x0
    double objective_value = 0.0;
};

/// Instrumentation for a single box-search call.
struct SearchTrace {
    std::vector<double> best_per_iteration;  // non-decreasing
    double initial_population_best = 0.0;
    std::vector<Vector> seeds_injected;       // candidates placed in the first population
    long evaluations = 0;
};

/// Scores a batch of candidates (one per row) into `values`. Non-finite
/// scores mark infeasible candidates.
using BatchObjective = std::function<void(const Eigen::Ref<const Matrix>& candidates, Eigen::Ref<Vector> values)>;

struct SearchResult {
    Vector best;
    double best_value = 0.0;
    SearchTrace trace;
};

/// Cross-entropy population search over a box followed by projected
/// finite-difference gradient refinement of the incumbent. The returned
/// value is never below the best candidate of the first population.
SearchResult maximize_in_box(const BatchObjective& objective, const Box& box, const OptimizerConfig& config,
                             std::mt19937_64& rng, std::span<const Vector> seeds = {});

/// Per-control-dimension penalty weights w / span_j^2.
Vector penalty_weights(const Box& bounds, double weight);

/// Predicted states x_0 .. x_M through the GP posterior mean.
Matrix mean_rollout(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls);

/// Summed entropy along the mean rollout minus sum_i sum_j w_j u_ij^2.
double entropy_objective(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                         const Eigen::Ref<const Vector>& penalty_weights);
double entropy_objective(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                         double penalty_weight);

/// Terminal goal cost sum_d ((x_M,d - goal_d) / scale_d)^2 + control penalty.
double goal_cost(const GPModel& model, const Eigen::Ref<const Vector>& x0, const ControlSequence& controls,
                 const Eigen::Ref<const Vector>& goal_state, const Eigen::Ref<const Vector>& state_scale,
                 const Eigen::Ref<const Vector>& penalty_weights);

/// Batched counterparts used inside the search; each row of `flat` is a
/// flattened ControlSequence.
void entropy_objective_batch(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index control_dim,
                             const Eigen::Ref<const Vector>& penalty_weights, const Eigen::Ref<const Matrix>& flat,
                             Eigen::Ref<Vector> values);
void goal_cost_batch(const GPModel& model, const Eigen::Ref<const Vector>& x0, Index control_dim,
                     const Eigen::Ref<const Vector>& goal_state, const Eigen::Ref<const Vector>& state_scale,
                     const Eigen::Ref<const Vector>& penalty_weights, const Eigen::Ref<const Matrix>& flat,
                     Eigen::Ref<Vector> values);

struct EntropyPlanRequest {
    Index horizon = 1;
    Box bounds;
    const ControlSequence* warm_start = nullptr;
};

/// Most informative M-step control sequence under the GP mean dynamics.
PlannedTrajectory optimize_entropy(const GPModel& model, const Eigen::Ref<const Vector>& x0,
                                   const EntropyPlanRequest& request, const OptimizerConfig& config,
                                   std::mt19937_64& rng, SearchTrace* trace = nullptr);

struct GoalPlanRequest {
    Index horizon = 1;
    Box bounds;
    Vector goal_state;
    Vector state_scale;  // per-dimension normalization, e.g. region-of-interest spans
};

/// Steers the mean rollout towards the goal state; objective_value is the
/// negated goal cost.
PlannedTrajectory optimize_goal(const GPModel& model, const Eigen::Ref<const Vector>& x0,
                                const GoalPlanRequest& request, const OptimizerConfig& config, std::mt19937_64& rng,
                                SearchTrace* trace = nullptr);

} // namespace activegp
