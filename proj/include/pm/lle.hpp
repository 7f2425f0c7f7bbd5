#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pm/neighbors.hpp"
#include "pm/pointcloud.hpp"

namespace pm {

/// Per-point reconstruction weights over the k-nearest neighborhood. Row i
/// holds the coefficients expressing point i as a combination of its
/// neighbors; every row sums to 1 (weights may be negative).
struct LleWeights {
    NeighborGraph graph;
    Eigen::MatrixXd weights;  // n x K, aligned with graph rows

    Eigen::Index size() const { return weights.rows(); }
};

/// Low-dimensional coordinates plus solver diagnostics.
struct EmbeddingResult {
    Eigen::MatrixXd coords;      // n x d
    Eigen::VectorXd eigenvalues; // LLE: the d+1 smallest eigenvalues of M,
                                 // ascending. PCA: the top-d variances,
                                 // descending.
    double residual = 0.0;       // sum of squared reconstruction errors
};

/// Per-point feature vectors with named channels; the first three channels
/// are always the standardized coordinates.
struct FeatureMatrix {
    Eigen::MatrixXd values;          // n x b
    std::vector<std::string> layout; // channel names, size b
};

// Tikhonov conditioning of the local Gram matrix, as a fraction of its trace.
inline constexpr double kLleRegularization = 1e-3;

// Reconstruction weights: for each point, minimize the distance to the
// affine combination of its K nearest neighbors subject to the weights
// summing to 1. Solved through the local Gram system S = Z Z^T with
// S <- S + eps * trace(S) * I conditioning. Exactly duplicated points are
// nudged apart by an index-derived 1e-9 jitter before the solve.
LleWeights lle_weights(const PointCloud& cloud, int K);

// Embedding coordinates: the eigenvectors of M = (I - W')^T (I - W') for the
// 2nd..(D+1)-th smallest eigenvalues, unit norm, sign fixed so that each
// column's largest-magnitude entry is positive.
EmbeddingResult lle_embed(const PointCloud& cloud, int K, int D);

// Principal-component baseline: projections onto the top-D directions of the
// centered cloud; same sign convention as lle_embed. residual holds the total
// squared reconstruction error of the discarded directions.
EmbeddingResult pca_embed(const PointCloud& cloud, int D);

// b = 5 feature matrix (x, y, z, lle_u, lle_v); expects a standardized cloud.
FeatureMatrix augment_lle(const PointCloud& cloud, int K);

// Mean fraction of shared k-nearest neighbors between two coordinate systems
// over the same points; the manifold-quality score used to compare embeddings.
double neighborhood_overlap(const Eigen::Ref<const Eigen::MatrixXd>& a,
                            const Eigen::Ref<const Eigen::MatrixXd>& b, int k);

// ---------------------------------------------------------------------------
// Embedding cache (one packed-binary file per cloud, keyed by content).
// ---------------------------------------------------------------------------

enum class EmbedMethod { Lle, Pca };

std::string embed_method_name(EmbedMethod m);
EmbedMethod embed_method_from_name(const std::string& name);  // InvalidInputError on unknown

// Content key over (method, points, K, D, eps); K is ignored for PCA.
std::uint64_t embed_cache_key(const Points& standardized_points, EmbedMethod method, int K, int D,
                              double eps = kLleRegularization);

std::filesystem::path embed_cache_path(const std::filesystem::path& dir, std::uint64_t key);

// Returns true and fills `coords` when a cache entry exists.
bool embed_cache_load(const std::filesystem::path& dir, std::uint64_t key, Eigen::MatrixXd& coords);
void embed_cache_store(const std::filesystem::path& dir, std::uint64_t key,
                       const Eigen::MatrixXd& coords);

}  // namespace pm
