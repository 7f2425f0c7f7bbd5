#pragma once

#include <Eigen/Core>
#include <array>

#include "pm/common.hpp"
#include "pm/pointcloud.hpp"

namespace pm {

/// A plane a*x + b*y + c*z + d = 0 together with an orthonormal in-plane
/// basis used to read off 2-D coordinates of projected points.
struct Plane {
    double a = 0, b = 0, c = 1, d = 0;
    Eigen::Vector3d basis_u = Eigen::Vector3d::UnitX();
    Eigen::Vector3d basis_v = Eigen::Vector3d::UnitY();

    Eigen::Vector3d normal() const { return {a, b, c}; }
    // Foot of the coordinate origin on the plane; the origin of the uv frame.
    Eigen::Vector3d origin() const { return -d / (a * a + b * b + c * c) * normal(); }

    // Plane through the given point with the given normal; completes an
    // orthonormal basis deterministically.
    static Plane from_point_normal(const Eigen::Vector3d& point, const Eigen::Vector3d& normal);
};

struct ProjectionResult {
    Eigen::Vector3d foot;  // nearest point on the plane
    double t = 0;          // line parameter along the normal
    Eigen::Vector2d uv;    // in-plane coordinates of the foot
};

// Orthogonal projection of p onto the plane: t = (a*x + b*y + c*z + d) /
// (a^2 + b^2 + c^2), foot = p - t * (a, b, c).
ProjectionResult project_point(const Plane& plane, const Eigen::Vector3d& p);

// The coordinate planes x=0, y=0, z=0 with fixed bases chosen so that the uv
// coordinates are (y,z), (x,z) and (x,y) respectively.
const std::array<Plane, 3>& axis_planes();

// Per point: the uv pairs for the three axis planes, ordered (x=0 | y=0 |
// z=0). This is the linear projection part that the learnable gate scales.
Eigen::MatrixXd linear_projection_features(const PointCloud& cloud);

}  // namespace pm
