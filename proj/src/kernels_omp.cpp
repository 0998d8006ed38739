#include "activegp/kernels.hpp"

#include <algorithm>
#include <cmath>

#include <omp.h>

namespace activegp::kernels::parallel {

namespace {

// Rows scaled by the inverse lengthscales, stored one point per column so
// the inner distance loop is contiguous.
Matrix scaled_columns(const Eigen::Ref<const Matrix>& points, const Hyperparameters& h)
{
    return (points.array().rowwise() / h.lengthscales.transpose().array()).matrix().transpose();
}

inline double se_scaled(const Eigen::Ref<const Matrix>& a, Index i, const Eigen::Ref<const Matrix>& b, Index j, double sf2)
{
    return sf2 * std::exp(-0.5 * (a.col(i) - b.col(j)).squaredNorm());
}

} // namespace

Matrix gram(const Eigen::Ref<const Matrix>& points, const Hyperparameters& h)
{
    const Index n = points.rows();
    const Matrix s = scaled_columns(points, h);
    Matrix k(n, n);
#pragma omp parallel for schedule(dynamic, 16)
    for (Index j = 0; j < n; ++j) {
        for (Index i = j; i < n; ++i) {
            const double v = se_scaled(s, i, s, j, h.signal_variance);
            k(i, j) = v;
            k(j, i) = v;
        }
    }
    return k;
}

Matrix cross_covariance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, const Hyperparameters& h)
{
    const Matrix sa = scaled_columns(a, h);
    const Matrix sb = scaled_columns(b, h);
    Matrix k(a.rows(), b.rows());
#pragma omp parallel for schedule(static)
    for (Index j = 0; j < b.rows(); ++j)
        for (Index i = 0; i < a.rows(); ++i)
            k(i, j) = se_scaled(sa, i, sb, j, h.signal_variance);
    return k;
}

void posterior(const OutputPosterior& post, const Eigen::Ref<const Matrix>& train_inputs,
               const Eigen::Ref<const Matrix>& queries, Eigen::Ref<Vector> mean, Eigen::Ref<Vector> variance)
{
    const Index n = train_inputs.rows();
    const Index nq = queries.rows();
    const double prior_var = post.hyp.signal_variance;
    if (n == 0) {
        mean.setZero();
        variance.setConstant(prior_var);
        return;
    }

    const Matrix st = scaled_columns(train_inputs, post.hyp);
    const Matrix sq = scaled_columns(queries, post.hyp);
    const Index blocks = (nq + kQueryBlock - 1) / kQueryBlock;

#pragma omp parallel for schedule(static)
    for (Index b = 0; b < blocks; ++b) {
        const Index first = b * kQueryBlock;
        const Index count = std::min(kQueryBlock, nq - first);
        Matrix kstar(n, count);
        for (Index j = 0; j < count; ++j)
            for (Index i = 0; i < n; ++i)
                kstar(i, j) = se_scaled(st, i, sq, first + j, prior_var);

        mean.segment(first, count).noalias() = kstar.transpose() * post.alpha;
        post.chol.triangularView<Eigen::Lower>().solveInPlace(kstar);
        variance.segment(first, count) =
            (prior_var - kstar.colwise().squaredNorm().array()).max(kVarianceFloor).transpose();
    }
}

} // namespace activegp::kernels::parallel
