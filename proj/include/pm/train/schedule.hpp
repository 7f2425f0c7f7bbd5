#pragma once

#include <span>
#include <vector>

#include "pm/nn/layers.hpp"

namespace pm {

// Cosine annealing from lr0 down to lr0/1000:
// lr = lr_min + (lr0 - lr_min) * (1 + cos(pi * epoch / epochs)) / 2.
double cosine_lr(int epoch, int epochs, double lr0);

// Classic momentum update: v <- momentum * v + g; p <- p - lr * v.
// Velocities are laid out to match the trainable entries of `params`.
struct SgdMomentum {
    explicit SgdMomentum(std::span<nn::ParamRef> params);

    void step(std::span<nn::ParamRef> params, double lr, double momentum);

    std::vector<Eigen::VectorXd> velocity;
};

}  // namespace pm
