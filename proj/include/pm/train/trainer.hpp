#pragma once

#include <functional>

#include "pm/lle.hpp"
#include "pm/nn/model.hpp"
#include "pm/train/metrics.hpp"

namespace pm {

/// Optimization settings. Defaults follow the reference recipe: SGD momentum
/// 0.9, initial learning rate 0.1 with cosine annealing, dropout 0.5,
/// EdgeConv k 20, embedding k 12, 250 epochs (300 when the projection gate
/// is trained).
struct TrainConfig {
    int epochs = 0;  // 0 resolves per augmentation: 250, or 300 with mp
    int batch_size = 32;
    double lr0 = 0.1;
    double momentum = 0.9;
    double dropout = 0.5;
    std::uint64_t seed = 1;
    int k_edgeconv = 20;
    int k_lle = 12;
    int t = 1;

    int resolved_epochs(nn::Augmentation aug) const;
    void validate() const;
};

/// Supplies the n x 2 embedding for a standardized cloud. The default
/// computes it in-process; the CLI substitutes a cache reader.
using EmbeddingProvider = std::function<Eigen::MatrixXd(const PointCloud&, int k_lle)>;

struct EpochLog {
    int epoch = 0;
    double lr = 0.0;
    double train_loss = 0.0;
    double test_oa = 0.0;
    double test_ma = 0.0;
};

// CSV with header "epoch,lr,train_loss,test_oa,test_ma"; values rendered
// round-trip exactly.
std::string render_epoch_csv(const std::vector<EpochLog>& log);

struct TrainResult {
    nn::Model model;  // parameters of the best test-oA epoch
    int best_epoch = -1;
    MetricsReport best_metrics;
    MetricsReport final_metrics;
    std::vector<EpochLog> log;
    int k_lle = 12;
};

// Deterministic given config.seed: initialization, shuffling and dropout all
// derive from it. Throws NumericalError with epoch/batch/lr diagnostics if
// the loss goes non-finite.
TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const nn::ArchitectureSpec& profile, nn::Augmentation aug,
                  const EmbeddingProvider& lle_provider = {});

// Evaluation over precomputed per-cloud feature matrices.
MetricsReport evaluate_features(nn::Model& model, const std::vector<Eigen::MatrixXd>& features,
                                const std::vector<int>& labels, int batch_size);

// Evaluation over a dataset split, building features per the model's
// augmentation. Throws InvalidInputError on an empty split.
MetricsReport evaluate(nn::Model& model, const Dataset& dataset, Split split, int k_lle,
                       int batch_size = 32, const EmbeddingProvider& lle_provider = {});

// Feature assembly shared by training, evaluation and the CLI: standardized
// coordinates, optionally concatenated with the 2-D embedding.
Eigen::MatrixXd build_input_features(const PointCloud& standardized, nn::Augmentation aug,
                                     int k_lle, const EmbeddingProvider& lle_provider);

// ---------------------------------------------------------------------------
// Ablation grid (six rows: baseline, lle, 1-plane mp, 3-plane mp at t=2 and
// t=4, and lle+mp at t=4).
// ---------------------------------------------------------------------------

struct AblationRow {
    bool lle = false;
    bool mp = false;
    int planes = 0;  // 0 renders as "-"
    int t = 1;
    double test_oa = 0.0;
    double test_ma = 0.0;
};

struct AblationResult {
    std::vector<AblationRow> rows;
    std::string csv() const;
};

AblationResult run_ablation(const Dataset& dataset, const TrainConfig& base,
                            const nn::ArchitectureSpec& profile,
                            const EmbeddingProvider& lle_provider = {});

}  // namespace pm
