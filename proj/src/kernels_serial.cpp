#include "activegp/kernels.hpp"

#include <algorithm>
#include <cmath>

namespace activegp::kernels::serial {

Matrix gram(const Eigen::Ref<const Matrix>& points, const Hyperparameters& h)
{
    const Index n = points.rows();
    Matrix k(n, n);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j <= i; ++j) {
            k(i, j) = kernel_eval(points.row(i).transpose(), points.row(j).transpose(), h);
            k(j, i) = k(i, j);
        }
    }
    return k;
}

Matrix cross_covariance(const Eigen::Ref<const Matrix>& a, const Eigen::Ref<const Matrix>& b, const Hyperparameters& h)
{
    Matrix k(a.rows(), b.rows());
    for (Index i = 0; i < a.rows(); ++i)
        for (Index j = 0; j < b.rows(); ++j)
            k(i, j) = kernel_eval(a.row(i).transpose(), b.row(j).transpose(), h);
    return k;
}

void posterior(const OutputPosterior& post, const Eigen::Ref<const Matrix>& train_inputs,
               const Eigen::Ref<const Matrix>& queries, Eigen::Ref<Vector> mean, Eigen::Ref<Vector> variance)
{
    const Index n = train_inputs.rows();
    const double prior_var = post.hyp.signal_variance;
    for (Index q = 0; q < queries.rows(); ++q) {
        if (n == 0) {
            mean(q) = 0.0;
            variance(q) = prior_var;
            continue;
        }
        Vector kstar(n);
        for (Index i = 0; i < n; ++i)
            kstar(i) = kernel_eval(train_inputs.row(i).transpose(), queries.row(q).transpose(), post.hyp);
        mean(q) = kstar.dot(post.alpha);
        const Vector v = post.chol.triangularView<Eigen::Lower>().solve(kstar);
        variance(q) = std::max(prior_var - v.squaredNorm(), kVarianceFloor);
    }
}

} // namespace activegp::kernels::serial
