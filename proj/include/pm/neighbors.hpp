#pragma once

#include <Eigen/Core>
#include <vector>

#include "pm/common.hpp"

namespace pm {

/// k-nearest-neighbor graph. Row i lists the k points closest to point i in
/// squared Euclidean distance, self excluded, sorted ascending with ties
/// broken by the smaller index.
struct NeighborGraph {
    int k = 0;
    Eigen::Index n = 0;
    std::vector<int> indices;  // n * k, row-major

    const int* row(Eigen::Index i) const { return indices.data() + i * k; }
    int* row(Eigen::Index i) { return indices.data() + i * k; }
};

enum class KnnBackend {
    Auto,   // kd-tree for low-dimensional data, brute force otherwise
    Brute,  // exact O(n^2) scan; the reference behavior
    KdTree, // exact tree search; must match Brute bit-for-bit
};

NeighborGraph knn(const Eigen::Ref<const Eigen::MatrixXd>& features, int k,
                  KnnBackend backend = KnnBackend::Auto);

// D(i,j) = squared Euclidean distance; exactly symmetric, zero diagonal.
Eigen::MatrixXd pairwise_sq_dist(const Eigen::Ref<const Eigen::MatrixXd>& features);

}  // namespace pm
