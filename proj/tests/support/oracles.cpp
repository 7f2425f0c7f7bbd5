#include "support/oracles.hpp"

#include <cmath>

namespace pm::testing {

Eigen::VectorXd kkt_weight_oracle(const Points& points, const int* neighbors, int k,
                                  Eigen::Index i, double eps) {
    Eigen::MatrixXd z(k, 3);
    for (int j = 0; j < k; ++j) z.row(j) = points.row(neighbors[j]) - points.row(i);
    Eigen::MatrixXd s = z * z.transpose();
    s.diagonal().array() += eps * s.trace();

    Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(k + 1, k + 1);
    kkt.topLeftCorner(k, k) = 2.0 * s;
    kkt.topRightCorner(k, 1).setOnes();
    kkt.bottomLeftCorner(1, k).setOnes();
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(k + 1);
    rhs(k) = 1.0;
    const Eigen::VectorXd sol = Eigen::FullPivLU<Eigen::MatrixXd>(kkt).solve(rhs);
    return sol.head(k);
}

Eigen::MatrixXd assemble_m_dense(const LleWeights& weights) {
    const Eigen::Index n = weights.size();
    Eigen::MatrixXd w = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int j = 0; j < weights.graph.k; ++j)
            w(i, weights.graph.row(i)[j]) = weights.weights(i, j);
    const Eigen::MatrixXd e = Eigen::MatrixXd::Identity(n, n) - w;
    return e.transpose() * e;
}

namespace {

// Lower-triangular Cholesky; returns false if the matrix is not positive
// definite at working precision.
bool cholesky(const Eigen::MatrixXd& a, Eigen::MatrixXd& l) {
    const Eigen::Index n = a.rows();
    l = Eigen::MatrixXd::Zero(n, n);
    for (Eigen::Index j = 0; j < n; ++j) {
        double d = a(j, j);
        for (Eigen::Index k = 0; k < j; ++k) d -= l(j, k) * l(j, k);
        if (d <= 0.0) return false;
        l(j, j) = std::sqrt(d);
        for (Eigen::Index i = j + 1; i < n; ++i) {
            double v = a(i, j);
            for (Eigen::Index k = 0; k < j; ++k) v -= l(i, k) * l(j, k);
            l(i, j) = v / l(j, j);
        }
    }
    return true;
}

void solve_cholesky_inplace(const Eigen::MatrixXd& l, Eigen::VectorXd& x) {
    const Eigen::Index n = l.rows();
    for (Eigen::Index i = 0; i < n; ++i) {
        double v = x(i);
        for (Eigen::Index k = 0; k < i; ++k) v -= l(i, k) * x(k);
        x(i) = v / l(i, i);
    }
    for (Eigen::Index i = n; i-- > 0;) {
        double v = x(i);
        for (Eigen::Index k = i + 1; k < n; ++k) v -= l(k, i) * x(k);
        x(i) = v / l(i, i);
    }
}

void orthonormalize(Eigen::MatrixXd& x) {
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
        for (int pass = 0; pass < 2; ++pass)
            for (Eigen::Index p = 0; p < c; ++p)
                x.col(c) -= x.col(p).dot(x.col(c)) * x.col(p);
        x.col(c) /= x.col(c).norm();
    }
}

// Cyclic Jacobi on a small symmetric matrix; returns eigenvalues ascending
// and accumulates rotations into v.
void small_jacobi(Eigen::MatrixXd a, Eigen::VectorXd& values, Eigen::MatrixXd& v) {
    const Eigen::Index n = a.rows();
    v = Eigen::MatrixXd::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-28) break;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
    }
    // sort ascending by eigenvalue
    values.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) values(i) = a(i, i);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = i + 1; j < n; ++j)
            if (values(j) < values(i)) {
                std::swap(values(i), values(j));
                v.col(i).swap(v.col(j));
            }
}

}  // namespace

BottomEigs bottom_eigs_oracle(const Eigen::MatrixXd& m, int count, double tol,
                              std::uint64_t seed) {
    const Eigen::Index n = m.rows();
    double shift = std::max(1e-10, 1e-12 * m.trace() / static_cast<double>(n));
    Eigen::MatrixXd l;
    for (int attempt = 0; attempt < 60; ++attempt) {
        Eigen::MatrixXd b = m;
        b.diagonal().array() += shift;
        if (cholesky(b, l)) break;
        shift *= 10.0;
        if (attempt == 59) throw NumericalError("bottom_eigs_oracle: Cholesky failed");
    }

    Rng rng(seed);
    Eigen::MatrixXd x(n, count);
    for (Eigen::Index i = 0; i < n; ++i)
        for (int c = 0; c < count; ++c) x(i, c) = rng.normal();
    orthonormalize(x);

    BottomEigs out;
    for (int iter = 0; iter < 20000; ++iter) {
        for (int c = 0; c < count; ++c) {
            Eigen::VectorXd col = x.col(c);
            solve_cholesky_inplace(l, col);
            x.col(c) = col;
        }
        orthonormalize(x);

        // Rayleigh-Ritz on the current block
        const Eigen::MatrixXd t = x.transpose() * (m * x);
        Eigen::VectorXd mu;
        Eigen::MatrixXd rot;
        small_jacobi(t, mu, rot);
        const Eigen::MatrixXd ritz = x * rot;

        double worst = 0.0;
        for (int c = 0; c < count; ++c)
            worst = std::max(worst, (m * ritz.col(c) - mu(c) * ritz.col(c)).norm());
        if (worst < tol || iter == 19999) {
            out.values = mu;
            out.vectors = ritz;
            for (int c = 0; c < count; ++c) out.vectors.col(c).normalize();
            if (worst >= tol)
                throw NumericalError("bottom_eigs_oracle: residual " + std::to_string(worst) +
                                     " did not reach tolerance");
            return out;
        }
        x = ritz;
    }
    throw NumericalError("bottom_eigs_oracle: iteration limit");
}

Eigen::Matrix3d random_rotation(Rng& rng) {
    Eigen::Vector4d q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
    q.normalize();
    const double w = q(0), x = q(1), y = q(2), z = q(3);
    Eigen::Matrix3d r;
    r << 1 - 2 * (y * y + z * z), 2 * (x * y - w * z), 2 * (x * z + w * y),
        2 * (x * y + w * z), 1 - 2 * (x * x + z * z), 2 * (y * z - w * x),
        2 * (x * z - w * y), 2 * (y * z + w * x), 1 - 2 * (x * x + y * y);
    return r;
}

double max_abs_diff_up_to_sign(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidInputError("max_abs_diff_up_to_sign: shape mismatch");
    double worst = 0.0;
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
        const double sign = a.col(c).dot(b.col(c)) >= 0 ? 1.0 : -1.0;
        worst = std::max(worst, (a.col(c) - sign * b.col(c)).cwiseAbs().maxCoeff());
    }
    return worst;
}

}  // namespace pm::testing
