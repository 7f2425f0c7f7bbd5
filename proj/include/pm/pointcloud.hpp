#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pm/common.hpp"

namespace pm {

using Points = Eigen::Matrix<double, Eigen::Dynamic, 3>;

/// A single point cloud: n points in 3-D, optionally labelled with a class
/// index. Coordinates are unitless after standardization.
struct PointCloud {
    Points points;   // n x 3
    int label = -1;  // class index, -1 = unlabelled
    std::string id;

    Eigen::Index size() const { return points.rows(); }
};

enum class Split { Train, Test };

struct DatasetEntry {
    PointCloud cloud;
    Split split = Split::Train;
};

struct Dataset {
    std::vector<DatasetEntry> entries;
    std::vector<std::string> class_names;

    std::vector<const PointCloud*> split(Split s) const;
    // Throws InvalidInputError unless every label < class count and both
    // splits are non-empty.
    void validate_for_training() const;
};

// Center at the centroid, then scale so the farthest point has norm 1
// (unit-sphere scaling). A cloud of coincident points maps to all zeros.
PointCloud standardize(const PointCloud& cloud);

bool is_standardized(const PointCloud& cloud, double tol = 1e-9);

// ---------------------------------------------------------------------------
// Synthetic shapes: a desk-scale eight-class benchmark.
// ---------------------------------------------------------------------------

enum class ShapeClass {
    Sphere = 0,
    PlanePatch,
    Cylinder,
    Torus,
    Cone,
    Cube,
    SwissRoll,
    Helix,
};

constexpr int kNumShapeClasses = 8;

const std::vector<std::string>& shape_class_names();
ShapeClass shape_class_from_name(const std::string& name);  // InvalidInputError on unknown

struct ShapeOptions {
    // Optional per-cloud random rigid rotation applied after sampling,
    // before noise. "z" spins about the vertical axis, "full" is uniform
    // over SO(3).
    enum class Rotation { None, ZAxis, Full } rotation = Rotation::None;
    // Fractional per-cloud variation of shape proportions (radii, heights),
    // so a class is a family rather than a single template.
    double param_jitter = 0.0;
};

// n points on the parametric surface plus isotropic Gaussian noise of scale
// sigma. Deterministic for a fixed seed; label = class index.
PointCloud generate_shape(ShapeClass cls, int n, double sigma, std::uint64_t seed,
                          const ShapeOptions& opts = {});

// Swiss roll with its 2-D intrinsic parameters (arc length along the spiral,
// height), used by the manifold-quality benchmarks.
struct SwissRollSample {
    PointCloud cloud;
    Eigen::MatrixX2d params;  // n x 2, same row order as cloud.points
};
SwissRollSample generate_swiss_roll(int n, double sigma, std::uint64_t seed,
                                    const ShapeOptions& opts = {});

// ---------------------------------------------------------------------------
// File I/O.
//
// xyz-text: one point per line, three whitespace-separated decimal reals;
// '#' starts a comment. packed-binary: little-endian header
// {magic "PMC1", u32 n, u32 dim} followed by n*dim float32 values.
// ---------------------------------------------------------------------------

enum class CloudFormat { XyzText, PackedBinary };

void save_cloud(const PointCloud& cloud, const std::filesystem::path& path, CloudFormat format);
PointCloud load_cloud(const std::filesystem::path& path, CloudFormat format);

// Generic accessors for the packed-binary container (also used for cached
// embeddings, which are n x 2).
void save_packed_matrix(const Eigen::MatrixXd& values, const std::filesystem::path& path);
Eigen::MatrixXd load_packed_matrix(const std::filesystem::path& path);

// Dataset manifest: plain-text lines "<path>,<label>,<split>" with paths
// relative to the manifest location. A "classes.txt" file next to the
// manifest (one class name per line) supplies class names when present.
void save_manifest(const Dataset& dataset, const std::filesystem::path& manifest_path,
                   const std::vector<std::filesystem::path>& relative_cloud_paths);
Dataset load_manifest(const std::filesystem::path& manifest_path, CloudFormat format = CloudFormat::XyzText);

}  // namespace pm
