#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pm/projection.hpp"
#include "support/oracles.hpp"

using namespace pm;

TEST_CASE("projection onto z=0 drops the third coordinate") {
    const auto& planes = axis_planes();
    const ProjectionResult r = project_point(planes[2], {1, 2, 3});
    CHECK(r.foot == Eigen::Vector3d(1, 2, 0));
    CHECK(r.t == doctest::Approx(3.0));
    CHECK(r.uv == Eigen::Vector2d(1, 2));
}

TEST_CASE("a point already on the plane is a fixpoint") {
    const Plane p = Plane::from_point_normal({1, 1, 1}, {1, 1, 1});
    const ProjectionResult r = project_point(p, {1, 1, 1});
    CHECK(r.t == doctest::Approx(0.0));
    CHECK((r.foot - Eigen::Vector3d(1, 1, 1)).norm() <= 1e-12);
}

TEST_CASE("the origin projects to the symmetric point of x+y+z=3") {
    const Plane p = Plane::from_point_normal({1, 1, 1}, {1, 1, 1});
    const ProjectionResult r = project_point(p, {0, 0, 0});
    CHECK((r.foot - Eigen::Vector3d(1, 1, 1)).norm() <= 1e-12);
}

TEST_CASE("axis planes read off the expected uv pairs") {
    const auto& planes = axis_planes();
    CHECK(project_point(planes[2], {3, 4, 5}).uv == Eigen::Vector2d(3, 4));
    CHECK(project_point(planes[0], {3, 4, 5}).uv == Eigen::Vector2d(4, 5));
    CHECK(project_point(planes[1], {3, 4, 5}).uv == Eigen::Vector2d(3, 5));
    for (const auto& p : planes)
        CHECK(project_point(p, {0, 0, 0}).uv == Eigen::Vector2d(0, 0));
}

TEST_CASE("linear projection features concatenate the three views") {
    PointCloud c;
    c.points.resize(2, 3);
    c.points << 1, 2, 3, 0, 0, 0;
    const Eigen::MatrixXd f = linear_projection_features(c);
    REQUIRE(f.cols() == 6);
    CHECK(f.row(0) == (Eigen::RowVectorXd(6) << 2, 3, 1, 3, 1, 2).finished());
    CHECK(f.row(1).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("linear projection features equal per-point projections") {
    Rng rng(9);
    PointCloud c;
    c.points.resize(40, 3);
    for (int i = 0; i < 40; ++i)
        c.points.row(i) << rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1);
    const Eigen::MatrixXd f = linear_projection_features(c);
    const auto& planes = axis_planes();
    for (int i = 0; i < 40; ++i)
        for (int b = 0; b < 3; ++b) {
            const ProjectionResult r = project_point(planes[b], c.points.row(i).transpose());
            CHECK(f(i, 2 * b) == r.uv.x());
            CHECK(f(i, 2 * b + 1) == r.uv.y());
        }
}

TEST_CASE("projection geometry holds on random planes and points") {
    Rng rng(77);
    for (int trial = 0; trial < 200; ++trial) {
        const Eigen::Vector3d normal(rng.normal(), rng.normal(), rng.normal());
        if (normal.norm() < 1e-3) continue;
        const Eigen::Vector3d anchor(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        const Plane plane = Plane::from_point_normal(anchor, normal);
        const Eigen::Vector3d p(rng.uniform(-3, 3), rng.uniform(-3, 3), rng.uniform(-3, 3));
        const ProjectionResult r = project_point(plane, p);

        // foot on the plane
        CHECK(std::abs(plane.a * r.foot.x() + plane.b * r.foot.y() + plane.c * r.foot.z() +
                       plane.d) <= 1e-10);
        // displacement parallel to the normal
        CHECK((p - r.foot).cross(plane.normal()).norm() <= 1e-10 * plane.normal().norm());
        // idempotence
        const ProjectionResult again = project_point(plane, r.foot);
        CHECK((again.foot - r.foot).norm() <= 1e-12);

        // minimality against sampled in-plane candidates
        for (int s = 0; s < 100; ++s) {
            const Eigen::Vector3d q = r.foot + rng.uniform(-2, 2) * plane.basis_u +
                                      rng.uniform(-2, 2) * plane.basis_v;
            CHECK((p - r.foot).norm() <= (p - q).norm() + 1e-12);
        }
    }
}

TEST_CASE("rescaling plane coefficients leaves the foot unchanged") {
    Rng rng(101);
    for (int trial = 0; trial < 50; ++trial) {
        Plane plane = Plane::from_point_normal(
            {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)},
            {rng.normal(), rng.normal(), rng.normal()});
        Plane doubled = plane;
        doubled.a *= 2;
        doubled.b *= 2;
        doubled.c *= 2;
        doubled.d *= 2;
        const Eigen::Vector3d p(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-2, 2));
        const ProjectionResult r1 = project_point(plane, p);
        const ProjectionResult r2 = project_point(doubled, p);
        CHECK((r1.foot - r2.foot).norm() <= 1e-12);
        CHECK(r2.t == doctest::Approx(r1.t / 2.0));
    }
}
