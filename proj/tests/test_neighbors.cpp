#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pm/neighbors.hpp"
#include "support/oracles.hpp"

using namespace pm;

namespace {

Eigen::MatrixXd random_features(int n, int c, Rng& rng) {
    Eigen::MatrixXd x(n, c);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < c; ++j) x(i, j) = rng.uniform(-2, 2);
    return x;
}

}  // namespace

TEST_CASE("knn on a 1-d line finds the obvious neighbors") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 1, 3;
    const NeighborGraph g = knn(x, 1);
    CHECK(g.row(0)[0] == 1);
    CHECK(g.row(1)[0] == 0);
    CHECK(g.row(2)[0] == 1);
}

TEST_CASE("equidistant ties go to the smaller index") {
    Eigen::MatrixXd x(3, 1);
    x << 0, 1, -1;
    const NeighborGraph g = knn(x, 1);
    CHECK(g.row(0)[0] == 1);
}

TEST_CASE("kd-tree matches the brute-force reference exactly") {
    Rng rng(17);
    const Eigen::MatrixXd x = random_features(300, 3, rng);
    const NeighborGraph brute = knn(x, 12, KnnBackend::Brute);
    const NeighborGraph tree = knn(x, 12, KnnBackend::KdTree);
    REQUIRE(brute.indices.size() == tree.indices.size());
    CHECK(brute.indices == tree.indices);
}

TEST_CASE("backends agree in higher dimensions and with duplicate points") {
    Rng rng(23);
    Eigen::MatrixXd x = random_features(150, 8, rng);
    x.row(10) = x.row(20);  // exact duplicates exercise the tie path
    x.row(30) = x.row(20);
    const NeighborGraph brute = knn(x, 7, KnnBackend::Brute);
    const NeighborGraph tree = knn(x, 7, KnnBackend::KdTree);
    CHECK(brute.indices == tree.indices);
}

TEST_CASE("knn rejects k >= n and non-finite values") {
    Rng rng(5);
    const Eigen::MatrixXd x = random_features(5, 3, rng);
    CHECK_THROWS_AS(knn(x, 5), InvalidInputError);
    Eigen::MatrixXd bad = x;
    bad(2, 1) = std::numeric_limits<double>::infinity();
    CHECK_THROWS_AS(knn(bad, 2), InvalidInputError);
}

TEST_CASE("pairwise squared distances match hand arithmetic") {
    Eigen::MatrixXd x(2, 3);
    x << 0, 0, 0, 1, 2, 2;
    const Eigen::MatrixXd d = pairwise_sq_dist(x);
    CHECK(d(0, 1) == doctest::Approx(9.0));
    CHECK(d(1, 0) == doctest::Approx(9.0));
    CHECK(d(0, 0) == 0.0);

    Eigen::MatrixXd single(1, 3);
    single << 4, 5, 6;
    const Eigen::MatrixXd d1 = pairwise_sq_dist(single);
    CHECK(d1.rows() == 1);
    CHECK(d1(0, 0) == 0.0);
}

TEST_CASE("pairwise squared distances satisfy the inner-product identity") {
    Rng rng(31);
    const Eigen::MatrixXd x = random_features(20, 3, rng);
    const Eigen::MatrixXd d = pairwise_sq_dist(x);
    const Eigen::VectorXd sq = x.rowwise().squaredNorm();
    const Eigen::MatrixXd oracle = sq.replicate(1, 20) + sq.transpose().replicate(20, 1) -
                                   2.0 * x * x.transpose();
    CHECK((d - oracle).cwiseAbs().maxCoeff() <= 1e-10);
    CHECK((d - d.transpose()).cwiseAbs().maxCoeff() <= 1e-12);
}

TEST_CASE("knn indices are invariant under rigid motion") {
    Rng rng(41);
    const Eigen::MatrixXd x = random_features(120, 3, rng);
    const NeighborGraph base = knn(x, 6);
    for (int trial = 0; trial < 3; ++trial) {
        const Eigen::Matrix3d r = testing::random_rotation(rng);
        Eigen::MatrixXd moved = x * r.transpose();
        moved.rowwise() += Eigen::RowVector3d(rng.uniform(-5, 5), rng.uniform(-5, 5),
                                              rng.uniform(-5, 5));
        const NeighborGraph g = knn(moved, 6);
        CHECK(g.indices == base.indices);
    }
}

TEST_CASE("selected neighbors dominate all excluded points") {
    Rng rng(53);
    const Eigen::MatrixXd x = random_features(80, 3, rng);
    const int k = 9;
    const NeighborGraph g = knn(x, k);
    const Eigen::MatrixXd d = pairwise_sq_dist(x);
    for (int i = 0; i < 80; ++i) {
        std::vector<bool> selected(80, false);
        for (int j = 0; j < k; ++j) selected[g.row(i)[j]] = true;
        double worst_selected = 0.0;
        for (int j = 0; j < k; ++j) worst_selected = std::max(worst_selected, d(i, g.row(i)[j]));
        for (int m = 0; m < 80; ++m)
            if (m != i && !selected[m]) CHECK(worst_selected <= d(i, m));
        // rows sorted ascending
        for (int j = 1; j < k; ++j) CHECK(d(i, g.row(i)[j - 1]) <= d(i, g.row(i)[j]));
    }
}
