#pragma once

// Data-parallel covariance and posterior kernels. `parallel` is the
// production path (OpenMP, blocked triangular solves); `serial` is a
// straightforward per-element reference kept for testing and benchmarking.

#include "activegp/gp.hpp"

namespace activegp::kernels {

/// Query rows handled per task by the parallel posterior kernel. Fixed so
/// results do not depend on the thread count.
inline constexpr Index kQueryBlock = 64;

namespace serial {

/// Noise-free Gram matrix of the rows of `points`.
Matrix gram(const Eigen::Ref<const Matrix>& points, const Hyperparameters& h);

/// out(i, j) = k(a_i, b_j).
Matrix cross_covariance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, const Hyperparameters& h);

/// Posterior mean and (floored) variance of one output at every query row.
void posterior(const OutputPosterior& post, const Eigen::Ref<const Matrix>& train_inputs,
               const Eigen::Ref<const Matrix>& queries, Eigen::Ref<Vector> mean, Eigen::Ref<Vector> variance);

} // namespace serial

namespace parallel {

Matrix gram(const Eigen::Ref<const Matrix>& points, const Hyperparameters& h);

Matrix cross_covariance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, const Hyperparameters& h);

void posterior(const OutputPosterior& post, const Eigen::Ref<const Matrix>& train_inputs,
               const Eigen::Ref<const Matrix>& queries, Eigen::Ref<Vector> mean, Eigen::Ref<Vector> variance);

} // namespace parallel

} // namespace activegp::kernels
