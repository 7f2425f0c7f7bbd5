#include <cmath>

#include "pm/nn/gradcheck.hpp"

namespace pm::nn {

GradCheckReport grad_check(const std::function<double()>& loss, std::span<ParamRef> params,
                           double h) {
    GradCheckReport report;
    for (auto& p : params) {
        if (!p.grad || !p.trainable) continue;
        for (Eigen::Index i = 0; i < p.size(); ++i) {
            const double saved = p.value[i];
            p.value[i] = saved + h;
            const double f_plus = loss();
            p.value[i] = saved - h;
            const double f_minus = loss();
            p.value[i] = saved;

            const double numeric = (f_plus - f_minus) / (2.0 * h);
            const double analytic = p.grad[i];
            const double denom = std::max({std::abs(numeric), std::abs(analytic), 1.0});
            const double rel = std::abs(numeric - analytic) / denom;
            ++report.checked;
            if (rel > report.max_rel_err) {
                report.max_rel_err = rel;
                report.worst = {p.name, i, analytic, numeric, rel};
            }
        }
    }
    return report;
}

}  // namespace pm::nn
