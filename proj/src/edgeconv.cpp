#include <algorithm>
#include <cmath>
#include <limits>

#include "pm/nn/edgeconv.hpp"

namespace pm::nn {

EdgeConv::EdgeConv(Eigen::Index in, Eigen::Index out, Rng& rng, bool with_bn_)
    : bn(out), with_bn(with_bn_) {
    theta.resize(out, in);
    phi.resize(out, in);
    glorot_init(theta, in, out, rng);
    glorot_init(phi, in, out, rng);
    gtheta = Eigen::MatrixXd::Zero(out, in);
    gphi = Eigen::MatrixXd::Zero(out, in);
}

Eigen::MatrixXd EdgeConv::forward(const Eigen::MatrixXd& x, const NeighborGraph& graph,
                                  bool train) {
    const Eigen::Index rows = x.rows();
    const Eigen::Index m = theta.rows();
    const int k = graph.k;
    if (graph.n != rows)
        throw ContractError("EdgeConv: graph covers " + std::to_string(graph.n) +
                            " points but features have " + std::to_string(rows) + " rows");
    if (x.cols() != theta.cols())
        throw ContractError("EdgeConv: input width " + std::to_string(x.cols()) +
                            " does not match kernel width " + std::to_string(theta.cols()));

    x_cache = x;
    // the edge map is linear, so phi (x_j - x_i) = (x phi^T)_j - (x phi^T)_i;
    // two point-count GEMMs replace the per-edge product
    using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    Eigen::MatrixXd tmp;
    matmul_rows(x, theta.transpose(), tmp);  // rows x m
    const RowMat center = tmp;
    matmul_rows(x, phi.transpose(), tmp);
    const RowMat spread = tmp;  // row-major: the reduction walks whole rows

    argmax_cache.assign(static_cast<std::size_t>(rows) * m, 0);
    pre_max_cache.resize(rows, m);
    runner_up_gap.resize(rows, m);
    Eigen::MatrixXd y(rows, m);
    std::vector<double> min_abs_per_row(static_cast<std::size_t>(rows),
                                        std::numeric_limits<double>::infinity());
    parallel_for(static_cast<std::size_t>(rows), [&](std::size_t iu) {
        const Eigen::Index i = static_cast<Eigen::Index>(iu);
        const int* nb = graph.row(i);
        // LeakyReLU is strictly increasing, so max and argmax commute with it
        std::vector<double> best(m), second(m, -std::numeric_limits<double>::infinity());
        std::vector<int> best_j(m, 0);
        {
            const double* s0 = spread.data() + static_cast<std::size_t>(nb[0]) * m;
            const double* ci = center.data() + static_cast<std::size_t>(i) * m;
            const double* si = spread.data() + static_cast<std::size_t>(i) * m;
            for (Eigen::Index c = 0; c < m; ++c) best[c] = ci[c] - si[c] + s0[c];
        }
        for (int j = 1; j < k; ++j) {
            const double* sj = spread.data() + static_cast<std::size_t>(nb[j]) * m;
            const double* ci = center.data() + static_cast<std::size_t>(i) * m;
            const double* si = spread.data() + static_cast<std::size_t>(i) * m;
            for (Eigen::Index c = 0; c < m; ++c) {
                const double v = ci[c] - si[c] + sj[c];
                if (v > best[c]) {
                    second[c] = best[c];
                    best[c] = v;
                    best_j[c] = j;
                } else if (v > second[c]) {
                    second[c] = v;
                }
            }
        }
        double row_min = std::numeric_limits<double>::infinity();
        for (Eigen::Index c = 0; c < m; ++c) {
            pre_max_cache(i, c) = best[c];
            argmax_cache[static_cast<std::size_t>(i) * m + c] = nb[best_j[c]];
            runner_up_gap(i, c) =
                k > 1 ? best[c] - second[c] : std::numeric_limits<double>::infinity();
            row_min = std::min(row_min, std::abs(best[c]));
            y(i, c) = best[c] >= 0.0 ? best[c] : alpha * best[c];
        }
        min_abs_per_row[iu] = row_min;
    });
    min_abs_pre_ = *std::min_element(min_abs_per_row.begin(), min_abs_per_row.end());
    return with_bn ? bn.forward(y, train) : y;
}

Eigen::MatrixXd EdgeConv::backward(const Eigen::MatrixXd& gy) {
    const Eigen::Index rows = x_cache.rows();
    const Eigen::Index m = theta.rows();
    const Eigen::MatrixXd gmax = with_bn ? bn.backward(gy) : gy;
    if (gmax.rows() != rows || gmax.cols() != m)
        throw ContractError("EdgeConv: upstream gradient shape mismatch");

    // s = d loss / d pre-activation at the winning edge
    Eigen::MatrixXd s(rows, m);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(rows, m);  // scatter of s by winner row
    for (Eigen::Index i = 0; i < rows; ++i)
        for (Eigen::Index q = 0; q < m; ++q) {
            const double slope = pre_max_cache(i, q) >= 0.0 ? 1.0 : alpha;
            const double v = gmax(i, q) * slope;
            s(i, q) = v;
            c(argmax_cache[static_cast<std::size_t>(i) * m + q], q) += v;
        }

    // pre(i, j*, q) = theta_q . x_i + phi_q . (x_j* - x_i)
    matmul_acc_at_b(s, x_cache, gtheta);
    const Eigen::MatrixXd c_minus_s = c - s;
    matmul_acc_at_b(c_minus_s, x_cache, gphi);
    Eigen::MatrixXd gx;
    matmul_rows(s, theta - phi, gx);
    Eigen::MatrixXd gx2;
    matmul_rows(c, phi, gx2);
    gx += gx2;
    return gx;
}

void EdgeConv::collect(const std::string& prefix, std::vector<ParamRef>& out) {
    out.push_back({prefix + ".theta", theta.data(), gtheta.data(), theta.rows(), theta.cols(),
                   true});
    out.push_back({prefix + ".phi", phi.data(), gphi.data(), phi.rows(), phi.cols(), true});
    if (with_bn) bn.collect(prefix + ".bn", out);
}

double EdgeConv::kink_margin() const {
    const double gap = runner_up_gap.size() ? runner_up_gap.minCoeff() : 1.0;
    return std::min(min_abs_pre_, gap);
}

NeighborGraph stack_graphs(const std::vector<const NeighborGraph*>& graphs,
                           Eigen::Index points_per_cloud) {
    NeighborGraph out;
    if (graphs.empty()) return out;
    out.k = graphs[0]->k;
    out.n = static_cast<Eigen::Index>(graphs.size()) * points_per_cloud;
    out.indices.resize(static_cast<std::size_t>(out.n) * out.k);
    for (std::size_t b = 0; b < graphs.size(); ++b) {
        const NeighborGraph& g = *graphs[b];
        if (g.n != points_per_cloud || g.k != out.k)
            throw ContractError("stack_graphs: inconsistent per-cloud graph shape");
        const int offset = static_cast<int>(b * static_cast<std::size_t>(points_per_cloud));
        for (Eigen::Index i = 0; i < g.n; ++i)
            for (int j = 0; j < g.k; ++j)
                out.row(static_cast<Eigen::Index>(b) * points_per_cloud + i)[j] =
                    g.row(i)[j] + offset;
    }
    return out;
}

NeighborGraph batched_knn(const Eigen::MatrixXd& x, Eigen::Index points_per_cloud, int k) {
    if (points_per_cloud < 1 || x.rows() % points_per_cloud != 0)
        throw ContractError("batched_knn: rows not divisible by points_per_cloud");
    const Eigen::Index clouds = x.rows() / points_per_cloud;
    std::vector<NeighborGraph> per_cloud(static_cast<std::size_t>(clouds));
    parallel_for(static_cast<std::size_t>(clouds), [&](std::size_t b) {
        per_cloud[b] = knn(x.middleRows(static_cast<Eigen::Index>(b) * points_per_cloud,
                                        points_per_cloud),
                           k);
    });
    std::vector<const NeighborGraph*> ptrs;
    ptrs.reserve(per_cloud.size());
    for (const auto& g : per_cloud) ptrs.push_back(&g);
    return stack_graphs(ptrs, points_per_cloud);
}

}  // namespace pm::nn
