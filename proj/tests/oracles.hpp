#pragma once

// Dense reference implementations used as test oracles. Deliberately naive:
// explicit inverse and determinant, no Cholesky, no shared code with the
// library beyond the Hyperparameters struct.

#include <cmath>
#include <numbers>
#include <random>

#include <Eigen/Dense>

#include "activegp/gp.hpp"

namespace oracle {

using activegp::Hyperparameters;
using activegp::Matrix;
using activegp::Vector;

inline double k(const Vector& a, const Vector& b, const Hyperparameters& h)
{
    double s = 0.0;
    for (Eigen::Index i = 0; i < a.size(); ++i)
        s += std::pow((a(i) - b(i)) / h.lengthscales(i), 2);
    return h.signal_variance * std::exp(-0.5 * s);
}

inline Matrix noisy_gram(const Matrix& x, const Hyperparameters& h)
{
    const Eigen::Index n = x.rows();
    Matrix out(n, n);
    for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
            out(a, b) = k(x.row(a).transpose(), x.row(b).transpose(), h) + (a == b ? h.noise_variance : 0.0);
    return out;
}

struct Posterior {
    double mean;
    double variance;
};

inline Posterior predict(const Matrix& x, const Vector& y, const Hyperparameters& h, const Vector& z)
{
    const Matrix inv = noisy_gram(x, h).fullPivLu().inverse();
    Vector ks(x.rows());
    for (Eigen::Index a = 0; a < x.rows(); ++a)
        ks(a) = k(x.row(a).transpose(), z, h);
    return {ks.dot(inv * y), h.signal_variance - ks.dot(inv * ks)};
}

inline double log_likelihood(const Matrix& x, const Vector& y, const Hyperparameters& h)
{
    const Matrix g = noisy_gram(x, h);
    const auto lu = g.fullPivLu();
    const double n = static_cast<double>(x.rows());
    return -0.5 * y.dot(lu.inverse() * y) - 0.5 * std::log(lu.determinant()) - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

inline double relative_error(double a, double b)
{
    return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

/// Mixed relative/absolute comparison for quantities that may be near zero.
inline bool close(double a, double b, double rel, double abs_floor)
{
    return std::abs(a - b) <= std::max(rel * std::max(std::abs(a), std::abs(b)), abs_floor);
}

inline Hyperparameters random_hyp(Eigen::Index dim, std::mt19937_64& rng)
{
    std::uniform_real_distribution<double> u(0.0, 1.0);
    Hyperparameters h;
    h.signal_variance = std::exp(-1.0 + 2.0 * u(rng));
    h.lengthscales.resize(dim);
    for (Eigen::Index i = 0; i < dim; ++i)
        h.lengthscales(i) = std::exp(-0.5 + 1.5 * u(rng));
    h.noise_variance = std::exp(-5.0 + 3.0 * u(rng));
    return h;
}

inline Matrix random_matrix(Eigen::Index rows, Eigen::Index cols, std::mt19937_64& rng, double scale = 1.0)
{
    std::normal_distribution<double> nd(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index j = 0; j < cols; ++j)
            m(i, j) = nd(rng);
    return m;
}

} // namespace oracle
