#include "activegp/gp.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>
#include <string>

#include "activegp/errors.hpp"
#include "activegp/kernels.hpp"

namespace activegp {

namespace {

constexpr double kMaxJitterFactor = 1e-2;

struct Factor {
    Matrix chol;
    double jitter = 0.0;
};

bool usable_factor(const Eigen::LLT<Matrix>& llt)
{
    if (llt.info() != Eigen::Success)
        return false;
    const auto diag = llt.matrixLLT().diagonal();
    return diag.allFinite() && (diag.array() > 0.0).all();
}

// Factor K + sn2 I. The first attempt adds nothing beyond the noise term;
// later attempts add 1e-8 sf2, escalating x10 up to 1e-2 sf2.
Factor factorize(const Matrix& noisy_gram, double signal_variance)
{
    double factor = 0.0;
    for (;;) {
        const double jitter = factor * signal_variance;
        Matrix a = noisy_gram;
        a.diagonal().array() += jitter;
        Eigen::LLT<Matrix> llt(a);
        if (usable_factor(llt))
            return {llt.matrixL(), jitter};
        if (factor >= kMaxJitterFactor * (1.0 - 1e-12))
            throw FactorizationError("Cholesky factorization failed with jitter " + std::to_string(jitter), jitter);
        factor = factor == 0.0 ? Hyperparameters::kJitterFactor : factor * 10.0;
    }
}

Vector solve_chol(const Matrix& chol, const Eigen::Ref<const Vector>& rhs)
{
    Vector x = chol.triangularView<Eigen::Lower>().solve(rhs);
    chol.triangularView<Eigen::Lower>().transpose().solveInPlace(x);
    return x;
}

OutputPosterior fit_output(const Dataset& data, const Hyperparameters& h, Index dim)
{
    Matrix k = kernels::parallel::gram(data.inputs, h);
    k.diagonal().array() += h.noise_variance;
    Factor f = factorize(k, h.signal_variance);
    OutputPosterior post;
    post.hyp = h;
    post.jitter = f.jitter;
    post.alpha = solve_chol(f.chol, data.targets.col(dim));
    post.chol = std::move(f.chol);
    return post;
}

void check_query(const Eigen::Ref<const Vector>& z, Index input_dim)
{
    if (z.size() != input_dim)
        throw ContractViolation("query has dimension " + std::to_string(z.size()) + ", expected " + std::to_string(input_dim));
    if (!z.allFinite())
        throw ContractViolation("query contains non-finite entries");
}

struct LogBounds {
    Vector lower;
    Vector upper;
};

LogBounds log_bounds(Index input_dim, double noise_variance)
{
    const Index p = input_dim + 2;
    LogBounds b{Vector(p), Vector(p)};
    b.lower(0) = std::log(1e-6);
    // keeps sn2 >= 1e-8 sf2 when the noise is held fixed
    b.upper(0) = std::min(std::log(1e6), std::log(noise_variance / Hyperparameters::kJitterFactor));
    b.lower.segment(1, input_dim).setConstant(std::log(1e-3));
    b.upper.segment(1, input_dim).setConstant(std::log(1e3));
    b.lower(p - 1) = std::log(1e-8);
    b.upper(p - 1) = std::log(1e2);
    return b;
}

} // namespace

// ---------------------------------------------------------------------------
// Hyperparameters / Dataset

void Hyperparameters::validate(Index input_dim) const
{
    if (lengthscales.size() != input_dim)
        throw ContractViolation("expected " + std::to_string(input_dim) + " lengthscales, got " +
                                std::to_string(lengthscales.size()));
    if (!(signal_variance > 0.0) || !std::isfinite(signal_variance))
        throw ContractViolation("signal_variance must be positive and finite");
    if (!lengthscales.allFinite() || !(lengthscales.array() > 0.0).all())
        throw ContractViolation("lengthscales must be positive and finite");
    if (!std::isfinite(noise_variance) || noise_variance < jitter_floor() * (1.0 - 1e-12))
        throw ContractViolation("noise_variance must be finite and at least 1e-8 * signal_variance");
}

Vector Hyperparameters::to_log() const
{
    Vector p(lengthscales.size() + 2);
    p(0) = std::log(signal_variance);
    p.segment(1, lengthscales.size()) = lengthscales.array().log().matrix();
    p(p.size() - 1) = std::log(noise_variance);
    return p;
}

Hyperparameters Hyperparameters::from_log(const Eigen::Ref<const Vector>& log_params)
{
    if (log_params.size() < 3)
        throw ContractViolation("log hyperparameter vector too short");
    Hyperparameters h;
    h.signal_variance = std::exp(log_params(0));
    h.lengthscales = log_params.segment(1, log_params.size() - 2).array().exp().matrix();
    h.noise_variance = std::exp(log_params(log_params.size() - 1));
    return h;
}

bool Hyperparameters::operator==(const Hyperparameters& other) const
{
    return signal_variance == other.signal_variance && noise_variance == other.noise_variance &&
           lengthscales.size() == other.lengthscales.size() && lengthscales == other.lengthscales;
}

Dataset::Dataset(Matrix in, Matrix out) : inputs(std::move(in)), targets(std::move(out))
{
    validate();
}

void Dataset::append(const Eigen::Ref<const Matrix>& new_inputs, const Eigen::Ref<const Matrix>& new_targets)
{
    if (new_inputs.rows() != new_targets.rows() || new_inputs.cols() != inputs.cols() ||
        new_targets.cols() != targets.cols())
        throw ContractViolation("appended rows do not match dataset shape");
    if (!new_inputs.allFinite() || !new_targets.allFinite())
        throw ContractViolation("appended rows contain non-finite entries");
    const Index n = size();
    inputs.conservativeResize(n + new_inputs.rows(), Eigen::NoChange);
    targets.conservativeResize(n + new_targets.rows(), Eigen::NoChange);
    inputs.bottomRows(new_inputs.rows()) = new_inputs;
    targets.bottomRows(new_targets.rows()) = new_targets;
}

void Dataset::append_row(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& y)
{
    append(z.transpose(), y.transpose());
}

void Dataset::validate() const
{
    if (inputs.rows() != targets.rows())
        throw ContractViolation("dataset inputs and targets have different row counts");
    if (!inputs.allFinite() || !targets.allFinite())
        throw ContractViolation("dataset contains non-finite entries");
}

// ---------------------------------------------------------------------------
// Kernel, fit, predict

double kernel_eval(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, const Hyperparameters& h)
{
    if (a.size() != b.size() || a.size() != h.lengthscales.size())
        throw ContractViolation("kernel_eval: dimension mismatch (" + std::to_string(a.size()) + ", " +
                                std::to_string(b.size()) + ", " + std::to_string(h.lengthscales.size()) + ")");
    double r2 = 0.0;
    for (Index i = 0; i < a.size(); ++i) {
        const double d = (a(i) - b(i)) / h.lengthscales(i);
        r2 += d * d;
    }
    return h.signal_variance * std::exp(-0.5 * r2);
}

GPModel GPModel::prior(Index input_dim, std::vector<Hyperparameters> hyps)
{
    return fit(Dataset(input_dim, static_cast<Index>(hyps.size())), hyps);
}

std::vector<Hyperparameters> GPModel::hyperparameters() const
{
    std::vector<Hyperparameters> out;
    out.reserve(outputs_.size());
    for (const auto& o : outputs_)
        out.push_back(o.hyp);
    return out;
}

GPModel fit(Dataset dataset, const std::vector<Hyperparameters>& hyps)
{
    dataset.validate();
    if (hyps.empty())
        throw ContractViolation("fit: at least one output dimension required");
    if (dataset.output_dim() != static_cast<Index>(hyps.size()))
        throw ContractViolation("fit: one hyperparameter set per output dimension required");
    for (const auto& h : hyps)
        h.validate(dataset.input_dim());

    GPModel model;
    model.input_dim_ = dataset.input_dim();
    model.outputs_.reserve(hyps.size());
    for (Index d = 0; d < dataset.output_dim(); ++d)
        model.outputs_.push_back(fit_output(dataset, hyps[static_cast<std::size_t>(d)], d));
    model.data_ = std::move(dataset);
    return model;
}

GPModel add_observations(const GPModel& model, const Eigen::Ref<const Matrix>& new_inputs,
                         const Eigen::Ref<const Matrix>& new_targets)
{
    const Index m = new_inputs.rows();
    if (m == 0 && new_targets.rows() == 0)
        return model;

    Dataset grown = model.data_;
    grown.append(new_inputs, new_targets);

    GPModel out;
    out.input_dim_ = model.input_dim_;
    out.outputs_.reserve(model.outputs_.size());
    const Index n = model.size();

    for (Index d = 0; d < model.output_dim(); ++d) {
        const OutputPosterior& old = model.output(d);
        const Hyperparameters& h = old.hyp;

        // [L11 0; L21 L22] with L21 = K21 L11^-T and L22 L22^T = K22 - L21 L21^T.
        Matrix k22 = kernels::parallel::gram(new_inputs, h);
        k22.diagonal().array() += h.noise_variance + old.jitter;
        Matrix l21t(n, m);
        if (n > 0) {
            l21t = kernels::parallel::cross_covariance(model.data_.inputs, new_inputs, h);
            old.chol.triangularView<Eigen::Lower>().solveInPlace(l21t);
            k22.noalias() -= l21t.transpose() * l21t;
        }
        Eigen::LLT<Matrix> llt(k22);
        if (!usable_factor(llt)) {
            out.outputs_.push_back(fit_output(grown, h, d));
            continue;
        }

        OutputPosterior post;
        post.hyp = h;
        post.jitter = old.jitter;
        post.chol = Matrix::Zero(n + m, n + m);
        post.chol.topLeftCorner(n, n) = old.chol;
        post.chol.bottomLeftCorner(m, n) = l21t.transpose();
        post.chol.bottomRightCorner(m, m) = llt.matrixL();
        post.alpha = solve_chol(post.chol, grown.targets.col(d));
        out.outputs_.push_back(std::move(post));
    }
    out.data_ = std::move(grown);
    return out;
}

Prediction GPModel::predict(const Eigen::Ref<const Vector>& z) const
{
    check_query(z, input_dim_);
    const Index n = size();
    Prediction p{Vector(output_dim()), Vector(output_dim())};
    for (Index d = 0; d < output_dim(); ++d) {
        const OutputPosterior& post = output(d);
        const double kss = post.hyp.signal_variance;
        if (n == 0) {
            p.mean(d) = 0.0;
            p.variance(d) = kss;
            continue;
        }
        Vector kstar(n);
        for (Index i = 0; i < n; ++i)
            kstar(i) = kernel_eval(data_.inputs.row(i).transpose(), z, post.hyp);
        p.mean(d) = kstar.dot(post.alpha);
        post.chol.triangularView<Eigen::Lower>().solveInPlace(kstar);
        p.variance(d) = std::max(kss - kstar.squaredNorm(), kVarianceFloor);
    }
    return p;
}

BatchPrediction GPModel::predict_batch(const Eigen::Ref<const Matrix>& queries) const
{
    if (queries.cols() != input_dim_)
        throw ContractViolation("predict_batch: query dimension mismatch");
    if (!queries.allFinite())
        throw ContractViolation("predict_batch: non-finite query");
    BatchPrediction out{Matrix(queries.rows(), output_dim()), Matrix(queries.rows(), output_dim())};
    for (Index d = 0; d < output_dim(); ++d)
        kernels::parallel::posterior(output(d), data_.inputs, queries, out.mean.col(d), out.variance.col(d));
    return out;
}

BatchPrediction GPModel::predict_batch_serial(const Eigen::Ref<const Matrix>& queries) const
{
    if (queries.cols() != input_dim_)
        throw ContractViolation("predict_batch_serial: query dimension mismatch");
    if (!queries.allFinite())
        throw ContractViolation("predict_batch_serial: non-finite query");
    BatchPrediction out{Matrix(queries.rows(), output_dim()), Matrix(queries.rows(), output_dim())};
    for (Index d = 0; d < output_dim(); ++d)
        kernels::serial::posterior(output(d), data_.inputs, queries, out.mean.col(d), out.variance.col(d));
    return out;
}

Prediction predict(const GPModel& model, const Eigen::Ref<const Vector>& z)
{
    return model.predict(z);
}

double entropy_from_variance(const Eigen::Ref<const Vector>& variance)
{
    constexpr double two_pi_e = 2.0 * std::numbers::pi * std::numbers::e;
    double h = 0.0;
    for (Index d = 0; d < variance.size(); ++d)
        h += 0.5 * std::log(two_pi_e * std::max(variance(d), kVarianceFloor));
    return h;
}

double entropy(const GPModel& model, const Eigen::Ref<const Vector>& z)
{
    return entropy_from_variance(model.predict(z).variance);
}

// ---------------------------------------------------------------------------
// Marginal likelihood

LogLikelihood log_marginal_likelihood(const Dataset& dataset, const Hyperparameters& h, Index dim)
{
    if (dataset.empty())
        throw ContractViolation("log_marginal_likelihood: empty dataset");
    if (dim < 0 || dim >= dataset.output_dim())
        throw ContractViolation("log_marginal_likelihood: output index out of range");
    h.validate(dataset.input_dim());

    const Index n = dataset.size();
    const Index p = dataset.input_dim();
    const Matrix kf = kernels::parallel::gram(dataset.inputs, h);
    Matrix k = kf;
    k.diagonal().array() += h.noise_variance;
    const Factor f = factorize(k, h.signal_variance);

    const auto y = dataset.targets.col(dim);
    const Vector alpha = solve_chol(f.chol, y);

    LogLikelihood out;
    out.value = -0.5 * y.dot(alpha) - f.chol.diagonal().array().log().sum() -
                0.5 * static_cast<double>(n) * std::log(2.0 * std::numbers::pi);

    // dL/dtheta = 0.5 tr((alpha alpha^T - K^-1) dK/dtheta)
    Matrix kinv = Matrix::Identity(n, n);
    f.chol.triangularView<Eigen::Lower>().solveInPlace(kinv);
    f.chol.triangularView<Eigen::Lower>().transpose().solveInPlace(kinv);
    Matrix w = alpha * alpha.transpose() - kinv;
    const Matrix wk = w.cwiseProduct(kf);

    out.gradient.resize(p + 2);
    out.gradient(0) = 0.5 * wk.sum();
    for (Index i = 0; i < p; ++i) {
        const double inv_l2 = 1.0 / (h.lengthscales(i) * h.lengthscales(i));
        double acc = 0.0;
        for (Index b = 0; b < n; ++b) {
            const double xb = dataset.inputs(b, i);
            for (Index a = 0; a < n; ++a) {
                const double diff = dataset.inputs(a, i) - xb;
                acc += wk(a, b) * diff * diff;
            }
        }
        out.gradient(1 + i) = 0.5 * acc * inv_l2;
    }
    out.gradient(p + 1) = 0.5 * h.noise_variance * w.trace();
    return out;
}

namespace {

// Value only; used for line-search trials.
double log_likelihood_value(const Dataset& dataset, const Hyperparameters& h, Index dim)
{
    Matrix k = kernels::parallel::gram(dataset.inputs, h);
    k.diagonal().array() += h.noise_variance;
    const Factor f = factorize(k, h.signal_variance);
    const auto y = dataset.targets.col(dim);
    const Vector alpha = solve_chol(f.chol, y);
    return -0.5 * y.dot(alpha) - f.chol.diagonal().array().log().sum() -
           0.5 * static_cast<double>(dataset.size()) * std::log(2.0 * std::numbers::pi);
}

} // namespace

HyperOptResult optimize_hyperparameters(const Dataset& dataset, Index dim, const Hyperparameters& init,
                                        const HyperOptConfig& config)
{
    if (dataset.empty())
        throw ContractViolation("optimize_hyperparameters: empty dataset");
    if (dim < 0 || dim >= dataset.output_dim())
        throw ContractViolation("optimize_hyperparameters: output index out of range");
    const Index p = dataset.input_dim();
    init.validate(p);
    const LogBounds bounds = log_bounds(p, init.noise_variance);
    const Index nparams = p + 2;
    const Index noise_idx = p + 1;
    constexpr double kNegInf = -std::numeric_limits<double>::infinity();

    auto value_at = [&](const Vector& log_params) {
        try {
            return log_likelihood_value(dataset, Hyperparameters::from_log(log_params), dim);
        } catch (const FactorizationError&) {
            return kNegInf;
        }
    };
    auto gradient_at = [&](const Vector& log_params) -> LogLikelihood {
        try {
            return log_marginal_likelihood(dataset, Hyperparameters::from_log(log_params), dim);
        } catch (const FactorizationError&) {
            return {kNegInf, Vector::Zero(nparams)};
        }
    };
    auto project = [&](Vector x, const Vector& anchor) {
        x = x.cwiseMax(bounds.lower).cwiseMin(bounds.upper);
        if (!config.learn_noise)
            x(noise_idx) = anchor(noise_idx);
        return x;
    };
    // gradient with fixed or bound-blocked coordinates removed
    auto free_gradient = [&](const Vector& x, Vector g) {
        if (!config.learn_noise)
            g(noise_idx) = 0.0;
        for (Index i = 0; i < g.size(); ++i)
            if ((x(i) <= bounds.lower(i) && g(i) < 0.0) || (x(i) >= bounds.upper(i) && g(i) > 0.0))
                g(i) = 0.0;
        return g;
    };

    const Vector init_log = init.to_log();
    HyperOptResult result;
    result.hyp = init;
    result.initial_log_likelihood = value_at(init_log);
    result.log_likelihood = result.initial_log_likelihood;

    std::mt19937_64 rng(config.seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    Vector best_log = init_log;

    for (int r = 0; r < config.restarts; ++r) {
        Vector x = init_log;
        if (r > 0) {
            for (Index i = 0; i < x.size(); ++i)
                x(i) += config.restart_spread * normal(rng);
            x = project(x, init_log);
        }
        if (config.max_iterations == 0)
            continue;
        LogLikelihood cur = gradient_at(x);
        if (!std::isfinite(cur.value))
            continue;

        // Ascent along a BFGS-preconditioned gradient with Armijo
        // backtracking; falls back to the plain gradient whenever the
        // quasi-Newton direction is not an ascent direction.
        Matrix inv_hessian = Matrix::Identity(nparams, nparams);
        Vector g = free_gradient(x, cur.gradient);
        for (int it = 0; it < config.max_iterations; ++it) {
            if (g.norm() < config.gradient_tolerance)
                break;
            Vector dir = inv_hessian * g;
            dir = free_gradient(x, dir);
            if (!(dir.dot(g) > 0.0)) {
                inv_hessian.setIdentity();
                dir = g;
            }
            // cap the first trial step at one log-unit per coordinate
            double step = std::min(1.0, 1.0 / std::max(dir.cwiseAbs().maxCoeff(), 1e-300));
            if (it > 0)
                step = 1.0 / std::max(1.0, dir.cwiseAbs().maxCoeff() / 3.0);

            bool accepted = false;
            Vector cand;
            double cand_value = kNegInf;
            for (int ls = 0; ls < 30; ++ls) {
                cand = project(x + step * dir, init_log);
                const Vector delta = cand - x;
                if (delta.norm() < 1e-14)
                    break;
                cand_value = value_at(cand);
                if (std::isfinite(cand_value) && cand_value >= cur.value + 1e-4 * g.dot(delta)) {
                    accepted = true;
                    break;
                }
                step *= 0.5;
            }
            if (!accepted)
                break;

            LogLikelihood next = gradient_at(cand);
            const Vector g_next = free_gradient(cand, next.gradient);
            const Vector s = cand - x;
            const Vector yv = g - g_next;  // curvature of the negated objective
            const double sy = s.dot(yv);
            if (sy > 1e-12) {
                const double rho = 1.0 / sy;
                const Matrix id = Matrix::Identity(nparams, nparams);
                inv_hessian = (id - rho * s * yv.transpose()) * inv_hessian * (id - rho * yv * s.transpose()) +
                              rho * s * s.transpose();
            }
            x = cand;
            cur = std::move(next);
            g = g_next;
        }

        if (cur.value > result.log_likelihood) {
            result.log_likelihood = cur.value;
            best_log = x;
            result.improved = true;
        }
    }

    if (result.improved) {
        result.hyp = Hyperparameters::from_log(best_log);
        if (!config.learn_noise)
            result.hyp.noise_variance = init.noise_variance;
    }
    return result;
}

std::vector<Hyperparameters> initial_hyperparameters(const Dataset& dataset, double noise_variance)
{
    if (!(noise_variance > 0.0))
        throw ContractViolation("initial_hyperparameters: noise variance must be positive");
    const Index n = dataset.size();
    const Index p = dataset.input_dim();

    auto sample_var = [n](const auto& col) {
        if (n < 2)
            return 0.0;
        const double mean = col.mean();
        return (col.array() - mean).square().sum() / static_cast<double>(n - 1);
    };

    Vector ls(p);
    for (Index i = 0; i < p; ++i) {
        const double sd = std::sqrt(sample_var(dataset.inputs.col(i)));
        ls(i) = sd > 1e-6 ? sd : 1.0;
    }

    std::vector<Hyperparameters> out;
    for (Index d = 0; d < dataset.output_dim(); ++d) {
        Hyperparameters h;
        const double v = sample_var(dataset.targets.col(d));
        h.signal_variance = v > 1e-12 ? v : 1.0;
        h.signal_variance = std::min(h.signal_variance, noise_variance / Hyperparameters::kJitterFactor);
        h.lengthscales = ls;
        h.noise_variance = noise_variance;
        out.push_back(std::move(h));
    }
    return out;
}

} // namespace activegp
