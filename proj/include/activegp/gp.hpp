#pragma once

#include <cstdint>
#include <vector>

#include "activegp/types.hpp"

namespace activegp {

/// Squared-exponential ARD kernel parameters for one output dimension.
///
/// Invariants: every field strictly positive, one lengthscale per input
/// dimension, and noise_variance >= jitter_floor(). The noise term is the
/// only diagonal regularization applied on the first factorization attempt.
struct Hyperparameters {
    double signal_variance = 1.0;
    Vector lengthscales;
    double noise_variance = 1e-2;

    static constexpr double kJitterFactor = 1e-8;

    double jitter_floor() const { return kJitterFactor * signal_variance; }

    void validate(Index input_dim) const;

    /// Packed as (log sf2, log l_1 .. log l_D, log sn2).
    Vector to_log() const;
    static Hyperparameters from_log(const Eigen::Ref<const Vector>& log_params);

    bool operator==(const Hyperparameters& other) const;
};

/// Inputs are state-action pairs z = (x, u), one per row; targets are the
/// noisy next-state observations.
struct Dataset {
    Matrix inputs;
    Matrix targets;

    Dataset() = default;
    Dataset(Index input_dim, Index output_dim) : inputs(0, input_dim), targets(0, output_dim) {}
    Dataset(Matrix in, Matrix out);

    Index size() const { return inputs.rows(); }
    Index input_dim() const { return inputs.cols(); }
    Index output_dim() const { return targets.cols(); }
    bool empty() const { return inputs.rows() == 0; }

    void append(const Eigen::Ref<const Matrix>& new_inputs, const Eigen::Ref<const Matrix>& new_targets);
    void append_row(const Eigen::Ref<const Vector>& z, const Eigen::Ref<const Vector>& y);

    void validate() const;
};

/// Factored posterior of a single output dimension.
struct OutputPosterior {
    Hyperparameters hyp;
    Matrix chol;      // lower triangular factor of K + (sn2 + jitter) I
    Vector alpha;     // (K + sn2 I)^-1 y_d
    double jitter = 0.0;
};

struct Prediction {
    Vector mean;
    Vector variance;
};

/// Batched prediction, one row per query point and one column per output.
struct BatchPrediction {
    Matrix mean;
    Matrix variance;
};

/// Posterior variances are clamped below at this value.
inline constexpr double kVarianceFloor = 1e-12;

/// d_x independent zero-mean GPs sharing one dataset. Immutable once built;
/// every mutating operation returns a new model.
class GPModel {
public:
    GPModel() = default;

    /// Model with no data: predictions equal the prior.
    static GPModel prior(Index input_dim, std::vector<Hyperparameters> hyps);

    Index input_dim() const { return input_dim_; }
    Index output_dim() const { return static_cast<Index>(outputs_.size()); }
    Index size() const { return data_.size(); }

    const Dataset& data() const { return data_; }
    const OutputPosterior& output(Index d) const { return outputs_[static_cast<std::size_t>(d)]; }
    std::vector<Hyperparameters> hyperparameters() const;

    Prediction predict(const Eigen::Ref<const Vector>& z) const;

    /// Parallel kernel path; agrees with predict() row by row.
    BatchPrediction predict_batch(const Eigen::Ref<const Matrix>& queries) const;

    /// Serial reference path, one predict() per row.
    BatchPrediction predict_batch_serial(const Eigen::Ref<const Matrix>& queries) const;

private:
    friend GPModel fit(Dataset dataset, const std::vector<Hyperparameters>& hyps);
    friend GPModel add_observations(const GPModel& model, const Eigen::Ref<const Matrix>& new_inputs,
                                    const Eigen::Ref<const Matrix>& new_targets);

    Index input_dim_ = 0;
    Dataset data_;
    std::vector<OutputPosterior> outputs_;
};

double kernel_eval(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b, const Hyperparameters& h);

/// Exact GP fit. An empty dataset yields the prior model.
GPModel fit(Dataset dataset, const std::vector<Hyperparameters>& hyps);

/// Appends rows by extending the Cholesky factors; falls back to a full
/// refit when the extension loses positive definiteness.
GPModel add_observations(const GPModel& model, const Eigen::Ref<const Matrix>& new_inputs,
                         const Eigen::Ref<const Matrix>& new_targets);

Prediction predict(const GPModel& model, const Eigen::Ref<const Vector>& z);

/// Sum over outputs of 0.5 log(2 pi e sigma_d^2).
double entropy(const GPModel& model, const Eigen::Ref<const Vector>& z);
double entropy_from_variance(const Eigen::Ref<const Vector>& variance);

struct LogLikelihood {
    double value = 0.0;
    Vector gradient;  // w.r.t. Hyperparameters::to_log()
};

LogLikelihood log_marginal_likelihood(const Dataset& dataset, const Hyperparameters& h, Index dim);

struct HyperOptConfig {
    int restarts = 3;
    int max_iterations = 100;
    double gradient_tolerance = 1e-5;
    bool learn_noise = false;
    double restart_spread = 1.0;  // std of log-space perturbation for restarts >= 1
    std::uint64_t seed = 0;
};

struct HyperOptResult {
    Hyperparameters hyp;
    double log_likelihood = 0.0;
    double initial_log_likelihood = 0.0;
    bool improved = false;  // false: no restart beat init, hyp == init
};

HyperOptResult optimize_hyperparameters(const Dataset& dataset, Index dim, const Hyperparameters& init,
                                        const HyperOptConfig& config);

/// Cold-start heuristic: lengthscales from input spread, signal variance from
/// target spread, noise fixed to the known value.
std::vector<Hyperparameters> initial_hyperparameters(const Dataset& dataset, double noise_variance);

} // namespace activegp
