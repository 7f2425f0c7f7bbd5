#pragma once

#include "pm/nn/layers.hpp"

namespace pm::nn {

/// Learnable manifold-projection features. For each projection plane beta,
/// a shared two-layer perceptron Q (6 -> 16 -> 1, LeakyReLU between and
/// after) maps (x, y, z, onehot(beta)) to a scalar gate; the output channels
/// are the plane's uv coordinates scaled by that gate, concatenated over
/// planes in the order (x=0 | y=0 | z=0).
struct MpGate {
    MpGate() = default;
    MpGate(int planes, Rng& rng, Eigen::Index hidden = 16);

    int planes = 3;
    Linear l1, l2;
    LeakyRelu act_hidden;
    LeakyRelu act_gate;

    // coords: rows x 3 (standardized positions). Returns rows x (2 * planes).
    Eigen::MatrixXd forward(const Eigen::MatrixXd& coords);
    // gy: gradient w.r.t. the gated uv channels; accumulates MLP gradients.
    // The positional input is not differentiated through.
    void backward(const Eigen::MatrixXd& gy);
    void collect(const std::string& prefix, std::vector<ParamRef>& out);
    double kink_margin() const;

    Eigen::Index out_width() const { return 2 * planes; }

    // caches
    Eigen::MatrixXd uv_cache;    // rows x (2 * planes)
    Eigen::MatrixXd gate_cache;  // (planes * rows) x 1, post-activation
};

}  // namespace pm::nn
