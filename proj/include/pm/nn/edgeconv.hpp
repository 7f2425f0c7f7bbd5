#pragma once

#include "pm/neighbors.hpp"
#include "pm/nn/layers.hpp"

namespace pm::nn {

/// Graph edge convolution: per point i and output channel m,
///
///   y(i, m) = max over neighbors j of LeakyReLU(theta_m . f_i + phi_m . (f_j - f_i))
///
/// followed by batch normalization. The graph may span several clouds; rows
/// of x are point features and the graph indices address those rows directly.
struct EdgeConv {
    EdgeConv() = default;
    EdgeConv(Eigen::Index in, Eigen::Index out, Rng& rng, bool with_bn = true);

    Eigen::MatrixXd theta, phi;  // out x in
    Eigen::MatrixXd gtheta, gphi;
    BatchNorm bn;
    bool with_bn = true;
    double alpha = 0.2;

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, const NeighborGraph& graph, bool train);
    Eigen::MatrixXd backward(const Eigen::MatrixXd& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);

    // Distance to the nearest non-differentiable point of the cached forward:
    // min over (activation kinks, max ties).
    double kink_margin() const;

    Eigen::Index out_width() const { return theta.rows(); }

    // caches
    Eigen::MatrixXd x_cache;
    std::vector<int> argmax_cache;      // winning neighbor row per (i, m), row-major
    Eigen::MatrixXd pre_max_cache;      // pre-activation value at the winner
    Eigen::MatrixXd runner_up_gap;      // winner minus runner-up pre-activation
    double min_abs_pre_ = 1.0;
};

// Stacks per-cloud graphs into one graph over the concatenated rows of a
// batch (indices offset by cloud block).
NeighborGraph stack_graphs(const std::vector<const NeighborGraph*>& graphs,
                           Eigen::Index points_per_cloud);

// Per-cloud dynamic graph over the given stacked features.
NeighborGraph batched_knn(const Eigen::MatrixXd& x, Eigen::Index points_per_cloud, int k);

}  // namespace pm::nn
