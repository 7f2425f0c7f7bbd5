#include <cmath>
#include <limits>

#include "pm/nn/layers.hpp"

namespace pm::nn {

void glorot_init(Eigen::Ref<Eigen::MatrixXd> w, Eigen::Index fan_in, Eigen::Index fan_out,
                 Rng& rng) {
    const double bound = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
    for (Eigen::Index i = 0; i < w.rows(); ++i)
        for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = rng.uniform(-bound, bound);
}

namespace {

struct RowChunks {
    Eigen::Index chunk = 0;
    std::size_t count = 0;
};

RowChunks plan_chunks(Eigen::Index rows) {
    const int workers = thread_limit();
    if (workers <= 1 || rows < 256) return {rows, rows > 0 ? std::size_t(1) : std::size_t(0)};
    const Eigen::Index chunk = (rows + workers - 1) / workers;
    return {chunk, static_cast<std::size_t>((rows + chunk - 1) / chunk)};
}

}  // namespace

void matmul_rows(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::MatrixXd& out) {
    const RowChunks plan = plan_chunks(a.rows());
    out.resize(a.rows(), b.cols());
    if (plan.count <= 1) {
        out.noalias() = a * b;
        return;
    }
    parallel_for(plan.count, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * plan.chunk;
        const Eigen::Index len = std::min(plan.chunk, a.rows() - begin);
        out.middleRows(begin, len).noalias() = a.middleRows(begin, len) * b;
    });
}

void matmul_acc_at_b(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, Eigen::MatrixXd& out) {
    const RowChunks plan = plan_chunks(a.rows());
    if (plan.count <= 1) {
        out.noalias() += a.transpose() * b;
        return;
    }
    std::vector<Eigen::MatrixXd> partial(plan.count);
    parallel_for(plan.count, [&](std::size_t c) {
        const Eigen::Index begin = static_cast<Eigen::Index>(c) * plan.chunk;
        const Eigen::Index len = std::min(plan.chunk, a.rows() - begin);
        partial[c].noalias() =
            a.middleRows(begin, len).transpose() * b.middleRows(begin, len);
    });
    for (const auto& p : partial) out.noalias() += p;  // fixed chunk order
}

// ---------------------------------------------------------------------------
// Linear
// ---------------------------------------------------------------------------

Linear::Linear(Eigen::Index in, Eigen::Index out, bool with_bias, Rng& rng) {
    w.resize(out, in);
    glorot_init(w, in, out, rng);
    gw = Eigen::MatrixXd::Zero(out, in);
    if (with_bias) {
        b = Eigen::VectorXd::Zero(out);
        gb = Eigen::VectorXd::Zero(out);
    }
}

Eigen::MatrixXd Linear::forward(const Eigen::MatrixXd& x) {
    if (x.cols() != w.cols())
        throw ContractError("Linear: input width " + std::to_string(x.cols()) +
                            " does not match weight width " + std::to_string(w.cols()));
    x_cache = x;
    Eigen::MatrixXd y;
    matmul_rows(x, w.transpose(), y);
    if (b.size()) y.rowwise() += b.transpose();
    return y;
}

Eigen::MatrixXd Linear::backward(const Eigen::MatrixXd& gy) {
    if (gy.rows() != x_cache.rows() || gy.cols() != w.rows())
        throw ContractError("Linear: upstream gradient shape mismatch");
    matmul_acc_at_b(gy, x_cache, gw);
    if (b.size()) gb += gy.colwise().sum().transpose();
    Eigen::MatrixXd gx;
    matmul_rows(gy, w, gx);
    return gx;
}

void Linear::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".weight", w.data(), gw.data(), w.rows(), w.cols(), true});
    if (b.size()) out.push_back({prefix + ".bias", b.data(), gb.data(), b.size(), 1, true});
}

// ---------------------------------------------------------------------------
// LeakyRelu
// ---------------------------------------------------------------------------

Eigen::MatrixXd LeakyRelu::forward(const Eigen::MatrixXd& x) {
    x_cache = x;
    return x.unaryExpr([a = alpha](double v) { return v >= 0.0 ? v : a * v; });
}

Eigen::MatrixXd LeakyRelu::backward(const Eigen::MatrixXd& gy) const {
    if (gy.rows() != x_cache.rows() || gy.cols() != x_cache.cols())
        throw ContractError("LeakyRelu: upstream gradient shape mismatch");
    return gy.cwiseProduct(
        x_cache.unaryExpr([a = alpha](double v) { return v >= 0.0 ? 1.0 : a; }));
}

// ---------------------------------------------------------------------------
// BatchNorm
// ---------------------------------------------------------------------------

BatchNorm::BatchNorm(Eigen::Index channels) {
    gamma = Eigen::VectorXd::Ones(channels);
    beta = Eigen::VectorXd::Zero(channels);
    ggamma = Eigen::VectorXd::Zero(channels);
    gbeta = Eigen::VectorXd::Zero(channels);
    running_mean = Eigen::VectorXd::Zero(channels);
    running_var = Eigen::VectorXd::Ones(channels);
}

Eigen::MatrixXd BatchNorm::forward(const Eigen::MatrixXd& x, bool train) {
    if (x.cols() != gamma.size())
        throw ContractError("BatchNorm: expected " + std::to_string(gamma.size()) +
                            " channels, got " + std::to_string(x.cols()));
    train_cache = train;
    const double n = static_cast<double>(x.rows());
    if (train) {
        if (x.rows() < 2)
            throw InvalidStateError("BatchNorm: training mode needs at least 2 rows");
        const Eigen::RowVectorXd mean = x.colwise().mean();
        const Eigen::RowVectorXd var =
            ((x.rowwise() - mean).array().square().colwise().sum() / n).matrix();
        inv_std_cache = (var.transpose().array() + eps).rsqrt().matrix();
        xhat_cache = ((x.rowwise() - mean).array().rowwise() *
                      inv_std_cache.transpose().array())
                         .matrix();
        running_mean = (1.0 - momentum) * running_mean + momentum * mean.transpose();
        running_var = (1.0 - momentum) * running_var +
                      momentum * (var.transpose() * (n / (n - 1.0)));
    } else {
        inv_std_cache = (running_var.array() + eps).rsqrt().matrix();
        xhat_cache = ((x.rowwise() - running_mean.transpose()).array().rowwise() *
                      inv_std_cache.transpose().array())
                         .matrix();
    }
    return ((xhat_cache.array().rowwise() * gamma.transpose().array()).rowwise() +
            beta.transpose().array())
        .matrix();
}

Eigen::MatrixXd BatchNorm::backward(const Eigen::MatrixXd& gy) {
    if (gy.rows() != xhat_cache.rows() || gy.cols() != xhat_cache.cols())
        throw ContractError("BatchNorm: upstream gradient shape mismatch");
    ggamma += gy.cwiseProduct(xhat_cache).colwise().sum().transpose();
    gbeta += gy.colwise().sum().transpose();

    const Eigen::ArrayXXd gxhat =
        gy.array().rowwise() * (gamma.cwiseProduct(inv_std_cache)).transpose().array();
    if (!train_cache) return gxhat.matrix();

    // Training mode: account for the dependence of the batch statistics on x.
    const double n = static_cast<double>(gy.rows());
    const Eigen::RowVectorXd mean_g = gxhat.colwise().sum() / n;
    const Eigen::RowVectorXd mean_gx =
        (gxhat * xhat_cache.array()).colwise().sum() / n;
    Eigen::ArrayXXd gx = gxhat;
    gx.rowwise() -= mean_g.array();
    gx -= xhat_cache.array().rowwise() * mean_gx.array();
    // gxhat already carries gamma * inv_std; the extra centering terms reuse it
    return gx.matrix();
}

void BatchNorm::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".gamma", gamma.data(), ggamma.data(), gamma.size(), 1, true});
    out.push_back({prefix + ".beta", beta.data(), gbeta.data(), beta.size(), 1, true});
    out.push_back({prefix + ".running_mean", running_mean.data(), nullptr, running_mean.size(), 1,
                   false});
    out.push_back({prefix + ".running_var", running_var.data(), nullptr, running_var.size(), 1,
                   false});
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

Eigen::MatrixXd Dropout::forward(const Eigen::MatrixXd& x, bool train, Rng& rng) {
    if (!train || rate <= 0.0) {
        mask.resize(0, 0);
        return x;
    }
    if (rate >= 1.0) throw InvalidInputError("Dropout: rate must be < 1");
    const double keep_scale = 1.0 / (1.0 - rate);
    mask.resize(x.rows(), x.cols());
    for (Eigen::Index i = 0; i < x.rows(); ++i)
        for (Eigen::Index j = 0; j < x.cols(); ++j)
            mask(i, j) = rng.uniform01() >= rate ? keep_scale : 0.0;
    return x.cwiseProduct(mask);
}

Eigen::MatrixXd Dropout::backward(const Eigen::MatrixXd& gy) const {
    if (mask.size() == 0) return gy;
    if (gy.rows() != mask.rows() || gy.cols() != mask.cols())
        throw ContractError("Dropout: upstream gradient shape mismatch");
    return gy.cwiseProduct(mask);
}

// ---------------------------------------------------------------------------
// SoftmaxCrossEntropy
// ---------------------------------------------------------------------------

double SoftmaxCrossEntropy::forward(const Eigen::MatrixXd& logits, std::span<const int> labels) {
    if (static_cast<std::size_t>(logits.rows()) != labels.size())
        throw ContractError("SoftmaxCrossEntropy: batch size mismatch");
    const Eigen::Index batch = logits.rows();
    probs_cache.resize(logits.rows(), logits.cols());
    labels_cache.assign(labels.begin(), labels.end());
    double loss = 0.0;
    for (Eigen::Index i = 0; i < batch; ++i) {
        const int label = labels[static_cast<std::size_t>(i)];
        if (label < 0 || label >= logits.cols())
            throw ContractError("SoftmaxCrossEntropy: label out of range");
        const double max_logit = logits.row(i).maxCoeff();
        const Eigen::ArrayXd shifted = logits.row(i).transpose().array() - max_logit;
        const double log_sum = std::log(shifted.exp().sum());
        probs_cache.row(i) = (shifted - log_sum).exp().matrix().transpose();
        loss += log_sum - shifted(label);
    }
    return loss / static_cast<double>(batch);
}

Eigen::MatrixXd SoftmaxCrossEntropy::backward() const {
    Eigen::MatrixXd g = probs_cache;
    const double inv_batch = 1.0 / static_cast<double>(probs_cache.rows());
    for (Eigen::Index i = 0; i < g.rows(); ++i)
        g(i, labels_cache[static_cast<std::size_t>(i)]) -= 1.0;
    return g * inv_batch;
}

// ---------------------------------------------------------------------------
// GlobalMaxPool
// ---------------------------------------------------------------------------

Eigen::MatrixXd GlobalMaxPool::forward(const Eigen::MatrixXd& x, Eigen::Index points_per_cloud) {
    if (points_per_cloud < 1 || x.rows() % points_per_cloud != 0)
        throw ContractError("GlobalMaxPool: rows not divisible by points_per_cloud");
    const Eigen::Index clouds = x.rows() / points_per_cloud;
    const Eigen::Index channels = x.cols();
    points_cache = points_per_cloud;
    rows_cache = x.rows();
    argmax_cache.resize(clouds, channels);
    runner_up_gap_cache.resize(clouds, channels);
    Eigen::MatrixXd y(clouds, channels);
    for (Eigen::Index b = 0; b < clouds; ++b) {
        const Eigen::Index base = b * points_per_cloud;
        for (Eigen::Index c = 0; c < channels; ++c) {
            Eigen::Index best = base;
            double best_v = x(base, c);
            double second = -std::numeric_limits<double>::infinity();
            for (Eigen::Index p = 1; p < points_per_cloud; ++p) {
                const double v = x(base + p, c);
                if (v > best_v) {
                    second = best_v;
                    best_v = v;
                    best = base + p;  // strict: ties keep the first index
                } else if (v > second) {
                    second = v;
                }
            }
            y(b, c) = best_v;
            argmax_cache(b, c) = best;
            runner_up_gap_cache(b, c) =
                points_per_cloud > 1 ? best_v - second : std::numeric_limits<double>::infinity();
        }
    }
    return y;
}

Eigen::MatrixXd GlobalMaxPool::backward(const Eigen::MatrixXd& gy) const {
    if (gy.rows() != argmax_cache.rows() || gy.cols() != argmax_cache.cols())
        throw ContractError("GlobalMaxPool: upstream gradient shape mismatch");
    Eigen::MatrixXd gx = Eigen::MatrixXd::Zero(rows_cache, gy.cols());
    for (Eigen::Index b = 0; b < gy.rows(); ++b)
        for (Eigen::Index c = 0; c < gy.cols(); ++c) gx(argmax_cache(b, c), c) += gy(b, c);
    return gx;
}

double GlobalMaxPool::tie_margin() const {
    return runner_up_gap_cache.size() ? runner_up_gap_cache.minCoeff() : 1.0;
}

}  // namespace pm::nn
