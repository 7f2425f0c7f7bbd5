#include <cmath>

#include "pm/train/schedule.hpp"

namespace pm {

double cosine_lr(int epoch, int epochs, double lr0) {
    if (epochs < 1 || epoch < 0 || epoch >= epochs)
        throw InvalidInputError("cosine_lr: epoch must satisfy 0 <= epoch < epochs");
    const double lr_min = lr0 * 1e-3;
    const double pi = 3.14159265358979323846;
    return lr_min + 0.5 * (lr0 - lr_min) *
                        (1.0 + std::cos(pi * static_cast<double>(epoch) / static_cast<double>(epochs)));
}

SgdMomentum::SgdMomentum(std::span<nn::ParamRef> params) {
    for (auto& p : params)
        if (p.trainable && p.grad) velocity.push_back(Eigen::VectorXd::Zero(p.size()));
}

void SgdMomentum::step(std::span<nn::ParamRef> params, double lr, double momentum) {
    std::size_t v = 0;
    for (auto& p : params) {
        if (!p.trainable || !p.grad) continue;
        if (v >= velocity.size() || velocity[v].size() != p.size())
            throw ContractError("SgdMomentum: parameter/velocity shape mismatch at '" + p.name +
                                "'");
        velocity[v] = momentum * velocity[v] + p.grad_vec();
        p.value_vec() -= lr * velocity[v];
        ++v;
    }
    if (v != velocity.size()) throw ContractError("SgdMomentum: parameter list changed size");
}

}  // namespace pm
