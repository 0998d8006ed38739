#pragma once

#include <array>
#include <deque>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "activegp/dynamics.hpp"
#include "activegp/gp.hpp"
#include "activegp/trajopt.hpp"

namespace activegp {

enum class StrategyKind { prbs, chirp, greedy, sep, rec, pa };

inline constexpr std::array<StrategyKind, 6> kAllStrategies{StrategyKind::prbs, StrategyKind::chirp,
                                                            StrategyKind::greedy, StrategyKind::sep,
                                                            StrategyKind::rec, StrategyKind::pa};

std::string_view to_string(StrategyKind kind);
StrategyKind parse_strategy(std::string_view name);

/// When the harness refits the GP for a strategy.
enum class UpdateCadence {
    per_step,        // greedy, rec
    per_round,       // sep, p&a: once the pending queue drains
    checkpoint_only  // open-loop signals
};

UpdateCadence cadence_of(StrategyKind kind);
bool is_model_based(StrategyKind kind);

struct StrategyConfig {
    int horizon = 15;            // M; greedy always plans one step
    int warmup_steps = 5;        // random controls before the first model-based decision
    double chirp_f_low = 0.1;    // Hz
    double chirp_f_high = 2.0;   // Hz
    OptimizerConfig optimizer;   // trajectory and target searches
};

/// Per-trial mutable strategy memory. Single owner.
struct ExplorationState {
    long step = 0;                 // controls applied so far
    std::deque<Vector> pending;    // planned controls not yet applied
    Vector prbs_level;
    int prbs_hold_remaining = 0;
    std::optional<Vector> sep_target;          // last z^G = (x^G, u^G)
    std::optional<ControlSequence> warm_start; // shifted previous rec plan
    std::string last_status = "none";
};

struct ChirpSchedule {
    double f_low = 0.1;
    double f_high = 2.0;
    double dt = 0.05;
    long duration_steps = 150;
};

Vector random_control(const Box& bounds, std::mt19937_64& rng);

/// Bang-bang levels held for a uniform random number of steps in [1, max_hold].
Vector prbs_next(ExplorationState& state, const Box& bounds, int max_hold, std::mt19937_64& rng);

/// Linear swept sine around the bound centre with half-span amplitude,
/// evaluated at state.step.
Vector chirp_next(const ExplorationState& state, const Box& bounds, const ChirpSchedule& schedule);

/// Instantaneous phase of the chirp at step k.
double chirp_phase(long k, const ChirpSchedule& schedule);

/// One-step entropy maximizer; random control without a model or on
/// planning failure.
Vector greedy_next(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current,
                   const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng,
                   SearchTrace* trace = nullptr);

struct SepPlan {
    std::vector<Vector> controls;  // M steering controls followed by u^G
    Vector target;                 // z^G
    SearchTrace target_search;
};

/// Separated search and control: highest-entropy (x, u) over the region of
/// interest and control box, then an M-step steering plan towards x^G.
SepPlan sep_step(ExplorationState& state, const GPModel& model, const Eigen::Ref<const Vector>& x_current, int horizon,
                 const SystemSpec& system, const OptimizerConfig& config, std::mt19937_64& rng);

/// Receding horizon: warm-started M-step entropy plan, first control only.
Vector rec_step(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current, int horizon,
                const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng,
                SearchTrace* trace = nullptr);

/// Plan and apply: the full M-step entropy plan.
std::vector<Vector> pa_step(ExplorationState& state, const GPModel* model, const Eigen::Ref<const Vector>& x_current,
                            int horizon, const Box& bounds, const OptimizerConfig& config, std::mt19937_64& rng);

struct StrategyContext {
    StrategyKind kind = StrategyKind::prbs;
    const SystemSpec* system = nullptr;
    const StrategyConfig* config = nullptr;
    long budget = 0;  // N
};

/// Next batch of controls for `kind` (warm-up aware). Every returned control
/// lies inside the system's control bounds.
std::vector<Vector> next_controls(ExplorationState& state, const StrategyContext& ctx, const GPModel* model,
                                  const Eigen::Ref<const Vector>& x_current, std::mt19937_64& rng);

} // namespace activegp
