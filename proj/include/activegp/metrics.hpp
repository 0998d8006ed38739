#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "activegp/dynamics.hpp"
#include "activegp/gp.hpp"

namespace activegp {

/// Uniform random (state, control) evaluation points over the region of
/// interest and control box, with noise-free true next states. Shared by
/// every strategy and trial of a benchmark run.
struct EvaluationGrid {
    Matrix inputs;       // G x (d_x + d_u)
    Matrix next_states;  // G x d_x

    Index size() const { return inputs.rows(); }

    /// FNV-1a over the raw doubles, recorded in run manifests.
    std::uint64_t hash() const;
};

EvaluationGrid make_evaluation_grid(const DynamicalSystem& system, Index points, std::uint64_t seed);

/// Pooled RMSE of the posterior mean over every grid point and output.
double rmse(const GPModel& model, const EvaluationGrid& grid);

/// Visited cells of a uniform discretization of the region of interest.
/// Out-of-region states are clamped into boundary cells.
class CoverageGrid {
public:
    CoverageGrid(Box region, int cells_per_dim);

    void visit(const Eigen::Ref<const Vector>& state);
    std::uint64_t cell_index(const Eigen::Ref<const Vector>& state) const;

    std::size_t visited_count() const;
    std::uint64_t total_cells() const { return total_; }
    double percent() const;

private:
    Box region_;
    int cells_;
    std::uint64_t total_;
    std::vector<bool> visited_;
};

/// Percentage of cells visited by the rows of `states`.
double coverage(const Eigen::Ref<const Matrix>& states, const Box& region, int cells_per_dim);

} // namespace activegp
