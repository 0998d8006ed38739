#include "activegp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>

#include "activegp/errors.hpp"

namespace activegp {

std::uint64_t EvaluationGrid::hash() const
{
    std::uint64_t h = 1469598103934665603ULL;
    auto mix = [&h](const Matrix& m) {
        for (Index j = 0; j < m.cols(); ++j) {
            for (Index i = 0; i < m.rows(); ++i) {
                const double v = m(i, j);
                unsigned char bytes[sizeof(double)];
                std::memcpy(bytes, &v, sizeof(double));
                for (unsigned char b : bytes) {
                    h ^= b;
                    h *= 1099511628211ULL;
                }
            }
        }
    };
    mix(inputs);
    mix(next_states);
    return h;
}

EvaluationGrid make_evaluation_grid(const DynamicalSystem& system, Index points, std::uint64_t seed)
{
    if (points < 1)
        throw ContractViolation("evaluation grid needs at least one point");
    const SystemSpec& s = system.spec();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uniform(0.0, 1.0);

    EvaluationGrid grid;
    grid.inputs.resize(points, s.state_dim + s.control_dim);
    grid.next_states.resize(points, s.state_dim);
    const Vector lo = (Vector(s.state_dim + s.control_dim) << s.region_of_interest.lower, s.control_bounds.lower).finished();
    const Vector hi = (Vector(s.state_dim + s.control_dim) << s.region_of_interest.upper, s.control_bounds.upper).finished();
    for (Index p = 0; p < points; ++p) {
        for (Index j = 0; j < lo.size(); ++j)
            grid.inputs(p, j) = lo(j) + (hi(j) - lo(j)) * uniform(rng);
        const Vector z = grid.inputs.row(p).transpose();
        grid.next_states.row(p) = true_step(system, z.head(s.state_dim), z.tail(s.control_dim)).transpose();
    }
    return grid;
}

double rmse(const GPModel& model, const EvaluationGrid& grid)
{
    if (grid.size() == 0)
        throw ContractViolation("rmse: empty evaluation grid");
    const BatchPrediction pred = model.predict_batch(grid.inputs);
    // serial reduction keeps the result independent of the thread count
    const double sse = (pred.mean - grid.next_states).squaredNorm();
    return std::sqrt(sse / static_cast<double>(grid.next_states.size()));
}

CoverageGrid::CoverageGrid(Box region, int cells_per_dim) : region_(std::move(region)), cells_(cells_per_dim)
{
    region_.validate("coverage region");
    if (cells_per_dim < 1)
        throw ContractViolation("coverage needs at least one cell per dimension");
    total_ = 1;
    for (Index d = 0; d < region_.dim(); ++d)
        total_ *= static_cast<std::uint64_t>(cells_);
    visited_.assign(static_cast<std::size_t>(total_), false);
}

std::uint64_t CoverageGrid::cell_index(const Eigen::Ref<const Vector>& state) const
{
    if (state.size() != region_.dim())
        throw ContractViolation("coverage: state dimension mismatch");
    std::uint64_t index = 0;
    for (Index d = 0; d < region_.dim(); ++d) {
        const double rel = (state(d) - region_.lower(d)) / (region_.upper(d) - region_.lower(d));
        long cell = std::isfinite(rel) ? static_cast<long>(std::floor(rel * cells_)) : (rel > 0 ? cells_ - 1 : 0);
        cell = std::clamp<long>(cell, 0, cells_ - 1);
        index = index * static_cast<std::uint64_t>(cells_) + static_cast<std::uint64_t>(cell);
    }
    return index;
}

void CoverageGrid::visit(const Eigen::Ref<const Vector>& state)
{
    visited_[static_cast<std::size_t>(cell_index(state))] = true;
}

std::size_t CoverageGrid::visited_count() const
{
    return static_cast<std::size_t>(std::count(visited_.begin(), visited_.end(), true));
}

double CoverageGrid::percent() const
{
    return 100.0 * static_cast<double>(visited_count()) / static_cast<double>(total_);
}

double coverage(const Eigen::Ref<const Matrix>& states, const Box& region, int cells_per_dim)
{
    CoverageGrid grid(region, cells_per_dim);
    for (Index i = 0; i < states.rows(); ++i)
        grid.visit(states.row(i).transpose());
    return grid.percent();
}

} // namespace activegp
