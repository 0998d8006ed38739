#include <doctest.h>

#include <random>

#include "activegp/kernels.hpp"
#include "oracles.hpp"

using namespace activegp;

TEST_CASE("serial and parallel Gram matrices agree")
{
    std::mt19937_64 rng(21);
    for (Index n : {1, 5, 63, 130}) {
        const Matrix x = oracle::random_matrix(n, 4, rng);
        const Hyperparameters h = oracle::random_hyp(4, rng);
        const Matrix s = kernels::serial::gram(x, h);
        const Matrix p = kernels::parallel::gram(x, h);
        CHECK((s - p).cwiseAbs().maxCoeff() <= 1e-13 * h.signal_variance);
        CHECK(p.isApprox(p.transpose(), 0.0));
        CHECK(p.diagonal().isConstant(h.signal_variance, 1e-15));
        CHECK(oracle::close(p(0, n - 1), oracle::k(x.row(0).transpose(), x.row(n - 1).transpose(), h), 1e-12, 1e-300));
    }
}

TEST_CASE("Gram of distinct points plus noise is positive definite")
{
    std::mt19937_64 rng(22);
    for (int t = 0; t < 10; ++t) {
        const Matrix x = oracle::random_matrix(10, 3, rng);
        Hyperparameters h = oracle::random_hyp(3, rng);
        Matrix k = kernels::parallel::gram(x, h);
        k.diagonal().array() += h.jitter_floor();
        CHECK(k.llt().info() == Eigen::Success);
    }
}

TEST_CASE("serial and parallel cross covariances agree")
{
    std::mt19937_64 rng(23);
    const Matrix a = oracle::random_matrix(70, 3, rng);
    const Matrix b = oracle::random_matrix(45, 3, rng);
    const Hyperparameters h = oracle::random_hyp(3, rng);
    const Matrix s = kernels::serial::cross_covariance(a, b, h);
    const Matrix p = kernels::parallel::cross_covariance(a, b, h);
    CHECK(s.rows() == 70);
    CHECK(s.cols() == 45);
    CHECK((s - p).cwiseAbs().maxCoeff() <= 1e-13 * h.signal_variance);
}

TEST_CASE("serial and parallel posteriors agree")
{
    std::mt19937_64 rng(24);
    const Matrix x = oracle::random_matrix(50, 3, rng);
    const Matrix y = oracle::random_matrix(50, 1, rng);
    const Hyperparameters h = oracle::random_hyp(3, rng);
    const GPModel m = fit(Dataset(x, y), {h});
    for (Index nq : {1, 64, 65, 300}) {
        const Matrix q = oracle::random_matrix(nq, 3, rng);
        Vector ms(nq), vs(nq), mp(nq), vp(nq);
        kernels::serial::posterior(m.output(0), x, q, ms, vs);
        kernels::parallel::posterior(m.output(0), x, q, mp, vp);
        for (Index i = 0; i < nq; ++i) {
            CHECK(oracle::close(ms(i), mp(i), 1e-10, 1e-13));
            CHECK(oracle::close(vs(i), vp(i), 1e-10, 1e-13));
            CHECK(vp(i) >= kVarianceFloor);
        }
    }
}

TEST_CASE("posterior with no training data is the prior")
{
    Hyperparameters h;
    h.signal_variance = 1.7;
    h.lengthscales = Vector::Ones(2);
    h.noise_variance = 0.1;
    const GPModel m = GPModel::prior(2, {h});
    const Matrix q = Matrix::Random(10, 2);
    Vector mean(10), var(10);
    kernels::parallel::posterior(m.output(0), Matrix(0, 2), q, mean, var);
    CHECK(mean.isZero());
    CHECK(var.isConstant(1.7));
}
