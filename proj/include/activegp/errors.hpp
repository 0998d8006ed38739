#pragma once

#include <stdexcept>
#include <string>

namespace activegp {

/// Precondition or shape violation by the caller.
class ContractViolation : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Cholesky factorization failed even after jitter escalation.
class FactorizationError : public std::runtime_error {
public:
    FactorizationError(const std::string& what, double final_jitter)
        : std::runtime_error(what), final_jitter_(final_jitter) {}

    double final_jitter() const noexcept { return final_jitter_; }

private:
    double final_jitter_;
};

/// The true plant produced a non-finite state.
class SimulationDivergence : public std::runtime_error {
public:
    SimulationDivergence(const std::string& system, long step)
        : std::runtime_error("simulation of '" + system + "' diverged at step " + std::to_string(step)),
          system_(system), step_(step) {}

    const std::string& system() const noexcept { return system_; }
    long step() const noexcept { return step_; }

private:
    std::string system_;
    long step_;
};

/// Trajectory optimizer could not produce a finite candidate.
class PlanningFailure : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

} // namespace activegp
