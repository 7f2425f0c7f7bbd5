#pragma once

#include <functional>

#include "pm/nn/layers.hpp"

namespace pm::nn {

struct GradCheckEntry {
    std::string param;
    Eigen::Index index = -1;
    double analytic = 0.0;
    double numeric = 0.0;
    double rel_err = 0.0;
};

struct GradCheckReport {
    double max_rel_err = 0.0;
    GradCheckEntry worst;
    std::size_t checked = 0;

    bool pass(double tolerance) const { return checked > 0 && max_rel_err <= tolerance; }
};

/// Central finite differences against already-populated analytic gradients.
///
/// The caller runs its forward+backward once so that every ParamRef's grad
/// buffer holds the analytic gradient, then hands over a loss closure that
/// re-evaluates the same scalar at the current parameter values. Relative
/// error uses max(|analytic|, |numeric|, 1) as the denominator, so exact
/// zero gradients compare cleanly.
GradCheckReport grad_check(const std::function<double()>& loss,
                           std::span<ParamRef> params, double h = 1e-5);

}  // namespace pm::nn
