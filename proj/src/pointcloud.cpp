#include "pm/pointcloud.hpp"

#include <cmath>

namespace pm {

std::vector<const PointCloud*> Dataset::split(Split s) const {
    std::vector<const PointCloud*> out;
    for (const auto& e : entries)
        if (e.split == s) out.push_back(&e.cloud);
    return out;
}

void Dataset::validate_for_training() const {
    const int num_classes = static_cast<int>(class_names.size());
    std::size_t train = 0, test = 0;
    for (const auto& e : entries) {
        if (e.cloud.label < 0 || e.cloud.label >= num_classes)
            throw InvalidInputError("dataset entry '" + e.cloud.id + "' has label " +
                                    std::to_string(e.cloud.label) + " outside [0, " +
                                    std::to_string(num_classes) + ")");
        (e.split == Split::Train ? train : test)++;
    }
    if (train == 0 || test == 0)
        throw InvalidInputError("training requires non-empty train and test splits");
}

PointCloud standardize(const PointCloud& cloud) {
    if (cloud.points.rows() < 1) throw InvalidInputError("standardize: empty cloud");
    if (!cloud.points.allFinite())
        throw InvalidInputError("standardize: non-finite coordinate in cloud '" + cloud.id + "'");

    PointCloud out = cloud;
    const Eigen::RowVector3d centroid = cloud.points.colwise().mean();
    out.points.rowwise() -= centroid;
    const double scale = out.points.rowwise().norm().maxCoeff();
    if (scale > 0.0)
        out.points /= scale;
    else
        out.points.setZero();  // all points coincide
    return out;
}

bool is_standardized(const PointCloud& cloud, double tol) {
    if (cloud.points.rows() < 1) return false;
    const double centroid_norm = cloud.points.colwise().mean().norm();
    const double max_norm = cloud.points.rowwise().norm().maxCoeff();
    if (centroid_norm > tol) return false;
    return max_norm == 0.0 || std::abs(max_norm - 1.0) <= tol;
}

}  // namespace pm
