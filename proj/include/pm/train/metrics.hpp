#pragma once

#include <Eigen/Core>
#include <string>
#include <vector>

#include "pm/common.hpp"

namespace pm {

/// Classification quality report. oA is the fraction of correct predictions;
/// mA is the unweighted mean of per-class recall, skipping classes with no
/// test examples.
struct MetricsReport {
    Eigen::MatrixXi confusion;  // rows = actual, cols = predicted
    double oa = 0.0;
    double ma = 0.0;
    std::vector<double> precision, recall, f1;
    std::vector<int> support;  // row sums

    std::string to_json() const;
};

MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion);

// Convenience over prediction/label pairs.
MetricsReport metrics_from_predictions(const std::vector<int>& predicted,
                                       const std::vector<int>& actual, int num_classes);

}  // namespace pm
