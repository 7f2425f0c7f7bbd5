#pragma once

#include <Eigen/Core>
#include <span>
#include <string>
#include <vector>

#include "pm/common.hpp"

namespace pm::nn {

/// Named view into a layer tensor and its gradient buffer. Running
/// batch-norm statistics are registered with trainable = false so that the
/// optimizer skips them while checkpoints still carry them.
struct ParamRef {
    std::string name;
    double* value = nullptr;
    double* grad = nullptr;  // null for non-trainable buffers
    Eigen::Index rows = 0, cols = 0;
    bool trainable = true;

    Eigen::Index size() const { return rows * cols; }
    Eigen::Map<Eigen::VectorXd> value_vec() { return {value, size()}; }
    Eigen::Map<Eigen::VectorXd> grad_vec() { return {grad, size()}; }
};

// Glorot-uniform fill: +/- sqrt(6 / (fan_in + fan_out)).
void glorot_init(Eigen::Ref<Eigen::MatrixXd> w, Eigen::Index fan_in, Eigen::Index fan_out,
                 Rng& rng);

// out = a * b with a's rows processed in parallel chunks. Chunk boundaries
// depend only on the shape and thread limit, so results are reproducible for
// a fixed PM_THREADS.
void matmul_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::MatrixXd& out);
// out += a^T * b, accumulated over fixed-order row-chunk partials.
void matmul_acc_at_b(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::MatrixXd& out);

/// y = x * W^T + b over row vectors; x is rows x in.
struct Linear {
    Linear() = default;
    Linear(Eigen::Index in, Eigen::Index out, bool with_bias, Rng& rng);

    Eigen::MatrixXd w;  // out x in
    Eigen::VectorXd b;  // out, empty when bias-free
    Eigen::MatrixXd gw;
    Eigen::VectorXd gb;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Eigen::MatrixXd x_cache;
};

struct LeakyRelu {
    double alpha = 0.2;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy) const;
    // Distance to the nearest activation kink in the cached input; gradient
    // checks resample when this is tiny.
    double kink_margin() const { return x_cache.size() ? x_cache.cwiseAbs().minCoeff() : 1.0; }

    Eigen::MatrixXd x_cache;
};

/// Per-channel normalization over all rows. Training mode normalizes with
/// biased batch statistics and maintains running averages (momentum 0.1,
/// unbiased variance); eval mode applies the running statistics.
struct BatchNorm {
    BatchNorm() = default;
    explicit BatchNorm(Eigen::Index channels);

    Eigen::VectorXd gamma, beta, ggamma, gbeta;
    Eigen::VectorXd running_mean, running_var;
    double eps = 1e-5;
    double momentum = 0.1;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    Eigen::MatrixXd xhat_cache;
    Eigen::VectorXd inv_std_cache;
    bool train_cache = false;
};

/// Inverted dropout: kept entries are scaled by 1/(1-rate) during training;
/// eval mode is the identity.
struct Dropout {
    double rate = 0.5;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, bool train, Rng& rng);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy) const;

    Eigen::MatrixXd mask;  // empty in eval mode
};

/// Mean softmax cross-entropy over a batch of logit rows.
struct SoftmaxCrossEntropy {
    double forward(const Eigen::MatrixXd& logits, std::span<const int> labels);
    Eigen::MatrixXd backward() const;  // d loss / d logits

    Eigen::MatrixXd probs_cache;
    std::vector<int> labels_cache;
};

/// Per-cloud, per-channel max over points. Rows are grouped in blocks of
/// points_per_cloud; the gradient routes to the first maximizing row.
struct GlobalMaxPool {
    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Eigen::Index points_per_cloud);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy) const;
    // Smallest gap between the winning and runner-up entries, over all
    // (cloud, channel) pairs; 0 means a tie.
    double tie_margin() const;

    Eigen::Matrix<Eigen::Index, Eigen::Dynamic, Eigen::Dynamic> argmax_cache;
    Eigen::MatrixXd runner_up_gap_cache;
    Eigen::Index points_cache = 0;
    Eigen::Index rows_cache = 0;
};

}  // namespace pm::nn
