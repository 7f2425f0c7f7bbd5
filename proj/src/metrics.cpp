#include <json.hpp>

#include "pm/train/metrics.hpp"

namespace pm {

MetricsReport metrics_from_confusion(const Eigen::MatrixXi& confusion) {
    if (confusion.rows() != confusion.cols() || confusion.rows() < 1)
        throw InvalidInputError("metrics: confusion matrix must be square and non-empty");
    if ((confusion.array() < 0).any())
        throw InvalidInputError("metrics: negative confusion count");

    const int c = static_cast<int>(confusion.rows());
    MetricsReport r;
    r.confusion = confusion;
    r.precision.assign(c, 0.0);
    r.recall.assign(c, 0.0);
    r.f1.assign(c, 0.0);
    r.support.assign(c, 0);

    const long total = confusion.sum();
    if (total == 0) throw InvalidInputError("metrics: empty confusion matrix");
    r.oa = static_cast<double>(confusion.trace()) / static_cast<double>(total);

    double recall_sum = 0.0;
    int supported = 0;
    for (int k = 0; k < c; ++k) {
        const long row = confusion.row(k).sum();
        const long col = confusion.col(k).sum();
        const long hit = confusion(k, k);
        r.support[k] = static_cast<int>(row);
        r.precision[k] = col > 0 ? static_cast<double>(hit) / static_cast<double>(col) : 0.0;
        r.recall[k] = row > 0 ? static_cast<double>(hit) / static_cast<double>(row) : 0.0;
        const double pr = r.precision[k] + r.recall[k];
        r.f1[k] = pr > 0.0 ? 2.0 * r.precision[k] * r.recall[k] / pr : 0.0;
        if (row > 0) {
            recall_sum += r.recall[k];
            ++supported;
        }
    }
    r.ma = supported > 0 ? recall_sum / supported : 0.0;
    return r;
}

MetricsReport metrics_from_predictions(const std::vector<int>& predicted,
                                       const std::vector<int>& actual, int num_classes) {
    if (predicted.size() != actual.size())
        throw InvalidInputError("metrics: prediction/label count mismatch");
    if (predicted.empty()) throw InvalidInputError("metrics: empty prediction set");
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(num_classes, num_classes);
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (actual[i] < 0 || actual[i] >= num_classes || predicted[i] < 0 ||
            predicted[i] >= num_classes)
            throw InvalidInputError("metrics: class index out of range");
        confusion(actual[i], predicted[i]) += 1;
    }
    return metrics_from_confusion(confusion);
}

std::string MetricsReport::to_json() const {
    nlohmann::ordered_json j;
    j["oa"] = oa;
    j["ma"] = ma;
    j["num_classes"] = confusion.rows();
    std::vector<std::vector<int>> rows(confusion.rows());
    for (Eigen::Index i = 0; i < confusion.rows(); ++i) {
        rows[i].resize(confusion.cols());
        for (Eigen::Index k = 0; k < confusion.cols(); ++k) rows[i][k] = confusion(i, k);
    }
    j["confusion"] = rows;
    nlohmann::ordered_json per_class = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < precision.size(); ++k) {
        nlohmann::ordered_json e;
        e["precision"] = precision[k];
        e["recall"] = recall[k];
        e["f1"] = f1[k];
        e["support"] = support[k];
        per_class.push_back(e);
    }
    j["per_class"] = per_class;
    return j.dump(2) + "\n";
}

}  // namespace pm
