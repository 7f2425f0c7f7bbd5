#include <cmath>

#include "pm/nn/mp_gate.hpp"
#include "pm/projection.hpp"

namespace pm::nn {

MpGate::MpGate(int planes_, Rng& rng, Eigen::Index hidden)
    : planes(planes_), l1(6, hidden, true, rng), l2(hidden, 1, true, rng) {
    if (planes < 1 || planes > 3) throw InvalidInputError("MpGate: planes must be in [1, 3]");
    // start from the identity gate: the first forward emits the exact linear
    // projections and training learns deviations from them
    l2.b.setConstant(1.0);
}

Eigen::MatrixXd MpGate::forward(const Eigen::MatrixXd& coords) {
    if (coords.cols() != 3) throw ContractError("MpGate: coords must have 3 columns");
    const Eigen::Index rows = coords.rows();
    const auto& all_planes = axis_planes();

    // uv coordinates of the exact projections, per plane
    uv_cache.resize(rows, 2 * planes);
    for (int b = 0; b < planes; ++b)
        for (Eigen::Index i = 0; i < rows; ++i) {
            const ProjectionResult pr = project_point(all_planes[b], coords.row(i).transpose());
            uv_cache(i, 2 * b) = pr.uv.x();
            uv_cache(i, 2 * b + 1) = pr.uv.y();
        }

    // one stacked pass through Q for all planes: rows grouped plane-major
    Eigen::MatrixXd qin = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(planes) * rows, 6);
    for (int b = 0; b < planes; ++b) {
        qin.middleRows(static_cast<Eigen::Index>(b) * rows, rows).leftCols<3>() = coords;
        qin.middleRows(static_cast<Eigen::Index>(b) * rows, rows).col(3 + b).setOnes();
    }
    gate_cache = act_gate.forward(l2.forward(act_hidden.forward(l1.forward(qin))));

    Eigen::MatrixXd out(rows, 2 * planes);
    for (int b = 0; b < planes; ++b) {
        const auto g = gate_cache.col(0).segment(static_cast<Eigen::Index>(b) * rows, rows);
        out.col(2 * b) = uv_cache.col(2 * b).cwiseProduct(g);
        out.col(2 * b + 1) = uv_cache.col(2 * b + 1).cwiseProduct(g);
    }
    return out;
}

void MpGate::backward(const Eigen::MatrixXd& gy) {
    const Eigen::Index rows = uv_cache.rows();
    if (gy.rows() != rows || gy.cols() != 2 * planes)
        throw ContractError("MpGate: upstream gradient shape mismatch");
    Eigen::MatrixXd ggate(static_cast<Eigen::Index>(planes) * rows, 1);
    for (int b = 0; b < planes; ++b)
        ggate.col(0).segment(static_cast<Eigen::Index>(b) * rows, rows) =
            gy.col(2 * b).cwiseProduct(uv_cache.col(2 * b)) +
            gy.col(2 * b + 1).cwiseProduct(uv_cache.col(2 * b + 1));
    l1.backward(act_hidden.backward(l2.backward(act_gate.backward(ggate))));
}

void MpGate::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    l1.collect(prefix + ".q1", out);
    l2.collect(prefix + ".q2", out);
}

double MpGate::kink_margin() const {
    return std::min(act_hidden.kink_margin(), act_gate.kink_margin());
}

}  // namespace pm::nn
