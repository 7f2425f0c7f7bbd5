#include <Eigen/Dense>
#include <Eigen/Sparse>
#include <cmath>
#include <unordered_map>

#include "pm/lle.hpp"

namespace pm {

namespace {

// Index-derived unit direction, used to separate exact duplicates.
Eigen::RowVector3d jitter_direction(Eigen::Index i) {
    Rng rng(0x7C3A9E1DULL ^ static_cast<std::uint64_t>(i));
    Eigen::RowVector3d v(rng.normal(), rng.normal(), rng.normal());
    const double n = v.norm();
    return n > 0 ? (v / n).eval() : Eigen::RowVector3d(1, 0, 0);
}

Points separate_duplicates(const Points& points) {
    std::unordered_map<std::uint64_t, std::vector<Eigen::Index>> buckets;
    for (Eigen::Index i = 0; i < points.rows(); ++i) {
        const double row[3] = {points(i, 0), points(i, 1), points(i, 2)};
        buckets[fnv1a64(row, sizeof(row))].push_back(i);
    }
    Points out = points;
    bool touched = false;
    for (const auto& [key, members] : buckets) {
        (void)key;
        if (members.size() < 2) continue;
        for (std::size_t m = 0; m < members.size(); ++m) {
            const Eigen::Index a = members[m];
            bool duplicate = false;
            for (std::size_t p = 0; p < m && !duplicate; ++p)
                duplicate = points.row(a) == points.row(members[p]);
            if (duplicate) {
                out.row(a) += 1e-9 * jitter_direction(a);
                touched = true;
            }
        }
    }
    return touched ? out : points;
}

void solve_weight_row(const Points& pts, const int* neighbors, int K, Eigen::Index i,
                      Eigen::MatrixXd& weights) {
    Eigen::MatrixXd z(K, 3);
    for (int j = 0; j < K; ++j) z.row(j) = pts.row(neighbors[j]) - pts.row(i);
    Eigen::MatrixXd s = z * z.transpose();
    const double tr = s.trace();
    if (!(tr > 0.0))
        throw NumericalError("lle_weights: zero local Gram trace at point " + std::to_string(i));
    s.diagonal().array() += kLleRegularization * tr;
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(s);
    Eigen::VectorXd w = ldlt.solve(Eigen::VectorXd::Ones(K));
    const double sum = w.sum();
    if (!std::isfinite(sum) || std::abs(sum) < 1e-300)
        throw NumericalError("lle_weights: singular regularized system at point " +
                             std::to_string(i));
    weights.row(i) = (w / sum).transpose();
}

// Largest-magnitude entry of each column made positive (first such entry on
// magnitude ties); eigenvectors are otherwise sign-ambiguous and downstream
// training must be deterministic.
void fix_column_signs(Eigen::MatrixXd& m) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
        Eigen::Index at = 0;
        m.col(c).cwiseAbs().maxCoeff(&at);
        if (m(at, c) < 0) m.col(c) = -m.col(c);
    }
}

}  // namespace

LleWeights lle_weights(const PointCloud& cloud, int K) {
    const Eigen::Index n = cloud.points.rows();
    if (n <= K)
        throw InvalidInputError("lle_weights: need at least K+1 = " + std::to_string(K + 1) +
                                " points, got " + std::to_string(n));
    if (!cloud.points.allFinite()) throw InvalidInputError("lle_weights: non-finite coordinate");

    const Points pts = separate_duplicates(cloud.points);
    LleWeights out;
    out.graph = knn(pts, K);
    out.weights.resize(n, K);
    parallel_for(static_cast<std::size_t>(n), [&](std::size_t i) {
        solve_weight_row(pts, out.graph.row(static_cast<Eigen::Index>(i)), K,
                         static_cast<Eigen::Index>(i), out.weights);
    });
    return out;
}

EmbeddingResult lle_embed(const PointCloud& cloud, int K, int D) {
    if (D < 1 || D > 2) throw InvalidInputError("lle_embed: D must be 1 or 2");
    const Eigen::Index n = cloud.points.rows();
    const LleWeights lw = lle_weights(cloud, K);

    // E = I - W', with W' the weights scattered to an n x n sparse matrix.
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(n) * (K + 1));
    for (Eigen::Index i = 0; i < n; ++i) {
        trips.emplace_back(i, i, 1.0);
        const int* nb = lw.graph.row(i);
        for (int j = 0; j < K; ++j) trips.emplace_back(i, nb[j], -lw.weights(i, j));
    }
    Eigen::SparseMatrix<double> e(n, n);
    e.setFromTriplets(trips.begin(), trips.end());
    const Eigen::SparseMatrix<double> m_sparse = Eigen::SparseMatrix<double>(e.transpose()) * e;
    const Eigen::MatrixXd m = Eigen::MatrixXd(m_sparse);

    const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
    if (es.info() != Eigen::Success)
        throw NumericalError("lle_embed: eigensolver did not converge on a " + std::to_string(n) +
                             "-point system");

    EmbeddingResult r;
    r.eigenvalues = es.eigenvalues().head(D + 1);
    r.coords = es.eigenvectors().middleCols(1, D);
    fix_column_signs(r.coords);
    r.residual = (e * r.coords).squaredNorm();
    return r;
}

EmbeddingResult pca_embed(const PointCloud& cloud, int D) {
    if (D < 1 || D > 3) throw InvalidInputError("pca_embed: D must be in [1, 3]");
    const Eigen::Index n = cloud.points.rows();
    if (n < 2) throw InvalidInputError("pca_embed: need at least 2 points");
    if (!cloud.points.allFinite()) throw InvalidInputError("pca_embed: non-finite coordinate");

    Points centered = cloud.points;
    centered.rowwise() -= cloud.points.colwise().mean();
    const Eigen::Matrix3d cov = centered.transpose() * centered / static_cast<double>(n);
    const Eigen::SelfAdjointEigenSolver<Eigen::Matrix3d> es(cov);

    EmbeddingResult r;
    r.eigenvalues.resize(D);
    r.coords.resize(n, D);
    double discarded = 0.0;
    for (int c = 0; c < 3; ++c) {
        const int rank = 2 - c;  // descending variance
        if (rank < D) {
            r.eigenvalues(rank) = es.eigenvalues()(c);
            r.coords.col(rank) = centered * es.eigenvectors().col(c);
        } else {
            discarded += es.eigenvalues()(c);
        }
    }
    fix_column_signs(r.coords);
    r.residual = discarded * static_cast<double>(n);
    return r;
}

FeatureMatrix augment_lle(const PointCloud& cloud, int K) {
    const EmbeddingResult emb = lle_embed(cloud, K, 2);
    FeatureMatrix f;
    f.layout = {"x", "y", "z", "lle_u", "lle_v"};
    f.values.resize(cloud.points.rows(), 5);
    f.values.leftCols<3>() = cloud.points;
    f.values.rightCols<2>() = emb.coords;
    return f;
}

double neighborhood_overlap(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            const Eigen::Ref<const Eigen::MatrixXd>& b, int k) {
    if (a.rows() != b.rows())
        throw InvalidInputError("neighborhood_overlap: row-count mismatch");
    const NeighborGraph ga = knn(a, k);
    const NeighborGraph gb = knn(b, k);
    std::size_t shared = 0;
    std::vector<char> mark(a.rows(), 0);
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (int j = 0; j < k; ++j) mark[ga.row(i)[j]] = 1;
        for (int j = 0; j < k; ++j) shared += mark[gb.row(i)[j]];
        for (int j = 0; j < k; ++j) mark[ga.row(i)[j]] = 0;
    }
    return static_cast<double>(shared) / (static_cast<double>(a.rows()) * k);
}

}  // namespace pm
