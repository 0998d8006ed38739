#pragma once

#include <memory>
#include <random>
#include <string>
#include <vector>

#include <json.hpp>

#include "activegp/types.hpp"

namespace activegp {

/// Static description of a simulated plant.
struct SystemSpec {
    std::string name;
    Index state_dim = 0;
    Index control_dim = 0;
    Box control_bounds;
    double dt = 0.05;            // seconds
    double noise_variance = 0.0; // observation noise per state dimension
    Box region_of_interest;
    Vector initial_state;        // stable equilibrium

    void validate() const;
};

/// One transition: x_k, u_k and the noisy observation of x_{k+1}.
struct TransitionRecord {
    long step = 0;
    Vector state;
    Vector control;
    Vector next_state;   // noise-free, kept for coverage and auditing
    Vector observation;
};

/// Time-ordered transitions with consecutive step indices.
struct Trajectory {
    std::vector<TransitionRecord> records;

    std::size_t size() const { return records.size(); }
    bool empty() const { return records.empty(); }
    void validate(const Box& control_bounds) const;
};

/// Continuous-time plant integrated with fixed-step RK4 under a
/// zero-order-hold control.
class DynamicalSystem {
public:
    explicit DynamicalSystem(SystemSpec spec) : spec_(std::move(spec)) { spec_.validate(); }
    virtual ~DynamicalSystem() = default;

    const SystemSpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }

    /// Time derivative of the state.
    virtual Vector derivative(const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u) const = 0;

    /// Mechanical energy, used for damping audits.
    virtual double energy(const Eigen::Ref<const Vector>& x) const = 0;

    /// Physical parameters as loaded, for the run manifest.
    virtual nlohmann::json parameters() const = 0;

protected:
    SystemSpec spec_;
};

Vector true_step(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x, const Eigen::Ref<const Vector>& u,
                 long step = 0);

Vector observe(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x, std::mt19937_64& rng);

/// Controls are the rows of `controls`.
Trajectory rollout(const DynamicalSystem& system, const Eigen::Ref<const Vector>& x0,
                   const Eigen::Ref<const Matrix>& controls, std::mt19937_64& rng, long first_step = 0);

/// Known system names in registry order.
std::vector<std::string> system_names();

/// Builds a plant from the versioned parameter file contents. Missing
/// entries fall back to the built-in defaults.
std::unique_ptr<DynamicalSystem> make_system(const std::string& name, const nlohmann::json& params = nlohmann::json::object());

/// Built-in defaults, identical to configs/systems.json.
nlohmann::json default_system_parameters();

/// Per-system benchmark defaults (steps budget, coverage cells).
struct SystemDefaults {
    long steps = 150;
    int horizon = 15;
    int coverage_cells = 10;
};
SystemDefaults system_defaults(const std::string& name);

} // namespace activegp
