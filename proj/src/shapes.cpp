#include <Eigen/Geometry>
#include <cmath>

#include "pm/pointcloud.hpp"

namespace pm {

namespace {

constexpr double kPi = 3.14159265358979323846;

Eigen::Matrix3d sample_rotation(Rng& rng, ShapeOptions::Rotation kind) {
    switch (kind) {
        case ShapeOptions::Rotation::None:
            return Eigen::Matrix3d::Identity();
        case ShapeOptions::Rotation::ZAxis: {
            const double a = rng.uniform(0.0, 2.0 * kPi);
            return Eigen::AngleAxisd(a, Eigen::Vector3d::UnitZ()).toRotationMatrix();
        }
        case ShapeOptions::Rotation::Full: {
            // uniform over SO(3) via a normalized Gaussian quaternion
            Eigen::Quaterniond q(rng.normal(), rng.normal(), rng.normal(), rng.normal());
            q.normalize();
            return q.toRotationMatrix();
        }
    }
    return Eigen::Matrix3d::Identity();
}

double jittered(Rng& rng, double base, double jitter) {
    return jitter > 0.0 ? base * (1.0 + jitter * rng.uniform(-1.0, 1.0)) : base;
}

Points sample_surface(ShapeClass cls, int n, Rng& rng, double jitter) {
    Points p(n, 3);
    switch (cls) {
        case ShapeClass::Sphere: {
            // antithetic pairs keep the sample mean exactly at the origin
            const int half = n / 2;
            for (int i = 0; i < half; ++i) {
                Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
                while (v.norm() < 1e-12) v = {rng.normal(), rng.normal(), rng.normal()};
                v.normalize();
                p.row(2 * i) = v;
                p.row(2 * i + 1) = -v;
            }
            if (n % 2 == 1) {
                Eigen::Vector3d v(rng.normal(), rng.normal(), rng.normal());
                v.normalize();
                p.row(n - 1) = v;
            }
            break;
        }
        case ShapeClass::PlanePatch: {
            for (int i = 0; i < n; ++i)
                p.row(i) << rng.uniform(-1.0, 1.0), rng.uniform(-1.0, 1.0), 0.0;
            break;
        }
        case ShapeClass::Cylinder: {
            const double r = jittered(rng, 0.6, jitter);
            const double h = jittered(rng, 1.0, jitter);
            for (int i = 0; i < n; ++i) {
                const double a = rng.uniform(0.0, 2.0 * kPi);
                p.row(i) << r * std::cos(a), r * std::sin(a), h * rng.uniform(-1.0, 1.0);
            }
            break;
        }
        case ShapeClass::Torus: {
            const double R = jittered(rng, 0.7, jitter);
            const double r = jittered(rng, 0.25, jitter);
            for (int i = 0; i < n; ++i) {
                const double u = rng.uniform(0.0, 2.0 * kPi);
                const double v = rng.uniform(0.0, 2.0 * kPi);
                p.row(i) << (R + r * std::cos(v)) * std::cos(u),
                    (R + r * std::cos(v)) * std::sin(u), r * std::sin(v);
            }
            break;
        }
        case ShapeClass::Cone: {
            const double R = jittered(rng, 0.7, jitter);
            const double H = jittered(rng, 1.6, jitter);
            for (int i = 0; i < n; ++i) {
                const double h = rng.uniform01();
                const double a = rng.uniform(0.0, 2.0 * kPi);
                p.row(i) << (1.0 - h) * R * std::cos(a), (1.0 - h) * R * std::sin(a),
                    H * (h - 0.5);
            }
            break;
        }
        case ShapeClass::Cube: {
            const double s = jittered(rng, 0.7, jitter);
            for (int i = 0; i < n; ++i) {
                const int face = static_cast<int>(rng.uniform_int(6));
                const double u = s * rng.uniform(-1.0, 1.0);
                const double v = s * rng.uniform(-1.0, 1.0);
                const double w = (face % 2 == 0) ? s : -s;
                if (face < 2)
                    p.row(i) << w, u, v;
                else if (face < 4)
                    p.row(i) << u, w, v;
                else
                    p.row(i) << u, v, w;
            }
            break;
        }
        case ShapeClass::SwissRoll: {
            const double h = jittered(rng, 7.0, jitter);
            const double scale = 4.5 * kPi;
            for (int i = 0; i < n; ++i) {
                const double t = 1.5 * kPi + 3.0 * kPi * rng.uniform01();
                const double y = h * rng.uniform(-1.0, 1.0);
                p.row(i) << t * std::cos(t) / scale, y / scale, t * std::sin(t) / scale;
            }
            break;
        }
        case ShapeClass::Helix: {
            const double r = jittered(rng, 0.7, jitter);
            const double H = jittered(rng, 1.6, jitter);
            for (int i = 0; i < n; ++i) {
                const double u = rng.uniform01();
                const double a = 6.0 * kPi * u;
                p.row(i) << r * std::cos(a), r * std::sin(a), H * (u - 0.5);
            }
            break;
        }
    }
    return p;
}

}  // namespace

const std::vector<std::string>& shape_class_names() {
    static const std::vector<std::string> names = {"sphere", "plane_patch", "cylinder", "torus",
                                                   "cone",   "cube",        "swiss_roll", "helix"};
    return names;
}

ShapeClass shape_class_from_name(const std::string& name) {
    const auto& names = shape_class_names();
    for (std::size_t i = 0; i < names.size(); ++i)
        if (names[i] == name) return static_cast<ShapeClass>(i);
    throw InvalidInputError("unknown shape class '" + name + "'");
}

PointCloud generate_shape(ShapeClass cls, int n, double sigma, std::uint64_t seed,
                          const ShapeOptions& opts) {
    if (n < 8) throw InvalidInputError("generate_shape: n must be >= 8");
    if (sigma < 0.0) throw InvalidInputError("generate_shape: sigma must be >= 0");
    if (cls == ShapeClass::SwissRoll) return generate_swiss_roll(n, sigma, seed, opts).cloud;

    Rng base(seed);
    Rng rng_shape = base.fork(1);
    Rng rng_rot = base.fork(2);
    Rng rng_noise = base.fork(3);

    PointCloud cloud;
    cloud.points = sample_surface(cls, n, rng_shape, opts.param_jitter);
    const Eigen::Matrix3d rot = sample_rotation(rng_rot, opts.rotation);
    cloud.points = cloud.points * rot.transpose();
    if (sigma > 0.0)
        for (int i = 0; i < n; ++i)
            cloud.points.row(i) += sigma * Eigen::RowVector3d(rng_noise.normal(), rng_noise.normal(),
                                                              rng_noise.normal());
    cloud.label = static_cast<int>(cls);
    cloud.id = shape_class_names()[static_cast<int>(cls)] + "_" + std::to_string(seed);
    return cloud;
}

SwissRollSample generate_swiss_roll(int n, double sigma, std::uint64_t seed,
                                    const ShapeOptions& opts) {
    if (n < 8) throw InvalidInputError("generate_swiss_roll: n must be >= 8");
    if (sigma < 0.0) throw InvalidInputError("generate_swiss_roll: sigma must be >= 0");

    Rng base(seed);
    Rng rng_shape = base.fork(1);
    Rng rng_rot = base.fork(2);
    Rng rng_noise = base.fork(3);

    const double h = jittered(rng_shape, 7.0, opts.param_jitter);
    const double scale = 4.5 * kPi;

    SwissRollSample out;
    out.cloud.points.resize(n, 3);
    out.params.resize(n, 2);
    for (int i = 0; i < n; ++i) {
        const double t = 1.5 * kPi + 3.0 * kPi * rng_shape.uniform01();
        const double y = h * rng_shape.uniform(-1.0, 1.0);
        out.cloud.points.row(i) << t * std::cos(t) / scale, y / scale, t * std::sin(t) / scale;
        // intrinsic coordinates: arc length of the spiral r(t) = t, and height
        const double arc = 0.5 * (t * std::sqrt(1.0 + t * t) + std::asinh(t));
        out.params.row(i) << arc / scale, y / scale;
    }
    const Eigen::Matrix3d rot = sample_rotation(rng_rot, opts.rotation);
    out.cloud.points = out.cloud.points * rot.transpose();
    if (sigma > 0.0)
        for (int i = 0; i < n; ++i)
            out.cloud.points.row(i) += sigma * Eigen::RowVector3d(
                                                   rng_noise.normal(), rng_noise.normal(),
                                                   rng_noise.normal());
    out.cloud.label = static_cast<int>(ShapeClass::SwissRoll);
    out.cloud.id = "swiss_roll_" + std::to_string(seed);
    return out;
}

}  // namespace pm
