#include <Eigen/Geometry>
#include <cmath>

#include "pm/projection.hpp"

namespace pm {

Plane Plane::from_point_normal(const Eigen::Vector3d& point, const Eigen::Vector3d& normal) {
    const double norm = normal.norm();
    if (norm <= 0.0 || !normal.allFinite())
        throw InvalidInputError("Plane::from_point_normal: degenerate normal");
    Plane plane;
    plane.a = normal.x();
    plane.b = normal.y();
    plane.c = normal.z();
    plane.d = -normal.dot(point);
    // deterministic basis: cross with the axis least aligned with the normal
    int axis = 0;
    for (int k = 1; k < 3; ++k)
        if (std::abs(normal[k]) < std::abs(normal[axis])) axis = k;
    plane.basis_u = normal.cross(Eigen::Vector3d::Unit(axis)).normalized();
    plane.basis_v = normal.cross(plane.basis_u).normalized();
    return plane;
}

ProjectionResult project_point(const Plane& plane, const Eigen::Vector3d& p) {
    const Eigen::Vector3d n = plane.normal();
    const double nn = n.squaredNorm();
    ProjectionResult r;
    r.t = (n.dot(p) + plane.d) / nn;
    r.foot = p - r.t * n;
    const Eigen::Vector3d rel = r.foot - plane.origin();
    r.uv = {rel.dot(plane.basis_u), rel.dot(plane.basis_v)};
    return r;
}

const std::array<Plane, 3>& axis_planes() {
    static const std::array<Plane, 3> planes = [] {
        std::array<Plane, 3> ps;
        // x = 0, uv = (y, z)
        ps[0].a = 1; ps[0].b = 0; ps[0].c = 0; ps[0].d = 0;
        ps[0].basis_u = Eigen::Vector3d::UnitY();
        ps[0].basis_v = Eigen::Vector3d::UnitZ();
        // y = 0, uv = (x, z)
        ps[1].a = 0; ps[1].b = 1; ps[1].c = 0; ps[1].d = 0;
        ps[1].basis_u = Eigen::Vector3d::UnitX();
        ps[1].basis_v = Eigen::Vector3d::UnitZ();
        // z = 0, uv = (x, y)
        ps[2].a = 0; ps[2].b = 0; ps[2].c = 1; ps[2].d = 0;
        ps[2].basis_u = Eigen::Vector3d::UnitX();
        ps[2].basis_v = Eigen::Vector3d::UnitY();
        return ps;
    }();
    return planes;
}

Eigen::MatrixXd linear_projection_features(const PointCloud& cloud) {
    const auto& planes = axis_planes();
    const Eigen::Index n = cloud.points.rows();
    Eigen::MatrixXd f(n, 6);
    for (Eigen::Index i = 0; i < n; ++i) {
        const Eigen::Vector3d p = cloud.points.row(i);
        for (int b = 0; b < 3; ++b) {
            const ProjectionResult r = project_point(planes[b], p);
            f(i, 2 * b) = r.uv.x();
            f(i, 2 * b + 1) = r.uv.y();
        }
    }
    return f;
}

}  // namespace pm
