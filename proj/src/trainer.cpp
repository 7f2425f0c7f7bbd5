#include <cmath>
#include <numeric>

#include "pm/train/schedule.hpp"
#include "pm/train/trainer.hpp"

namespace pm {

using nn::Augmentation;

int TrainConfig::resolved_epochs(Augmentation aug) const {
    if (epochs > 0) return epochs;
    const bool with_mp = aug == Augmentation::Mp || aug == Augmentation::LleMp;
    return with_mp ? 300 : 250;
}

void TrainConfig::validate() const {
    if (epochs < 0) throw InvalidInputError("TrainConfig: epochs must be non-negative");
    if (batch_size < 2) throw InvalidInputError("TrainConfig: batch_size must be >= 2");
    if (lr0 <= 0.0) throw InvalidInputError("TrainConfig: lr0 must be positive");
    if (momentum < 0.0 || momentum >= 1.0)
        throw InvalidInputError("TrainConfig: momentum must be in [0, 1)");
    if (dropout < 0.0 || dropout >= 1.0)
        throw InvalidInputError("TrainConfig: dropout must be in [0, 1)");
    if (k_edgeconv < 1 || k_lle < 1)
        throw InvalidInputError("TrainConfig: neighbor counts must be positive");
    if (t < 1) throw InvalidInputError("TrainConfig: t must be a positive integer");
}

std::string render_epoch_csv(const std::vector<EpochLog>& log) {
    std::string out = "epoch,lr,train_loss,test_oa,test_ma\n";
    for (const auto& e : log) {
        out += std::to_string(e.epoch);
        out += ',';
        out += fmt_double(e.lr);
        out += ',';
        out += fmt_double(e.train_loss);
        out += ',';
        out += fmt_double(e.test_oa);
        out += ',';
        out += fmt_double(e.test_ma);
        out += '\n';
    }
    return out;
}

Eigen::MatrixXd build_input_features(const PointCloud& standardized, Augmentation aug, int k_lle,
                                     const EmbeddingProvider& lle_provider) {
    const bool with_lle = aug == Augmentation::Lle || aug == Augmentation::LleMp;
    if (!with_lle) return standardized.points;  // mp channels are produced in-model
    Eigen::MatrixXd emb;
    if (lle_provider)
        emb = lle_provider(standardized, k_lle);
    else
        emb = lle_embed(standardized, k_lle, 2).coords;
    if (emb.rows() != standardized.points.rows() || emb.cols() != 2)
        throw ContractError("build_input_features: embedding must be n x 2");
    Eigen::MatrixXd f(standardized.points.rows(), 5);
    f.leftCols<3>() = standardized.points;
    f.rightCols<2>() = emb;
    return f;
}

namespace {

struct PreparedSplit {
    std::vector<Eigen::MatrixXd> features;
    std::vector<NeighborGraph> graphs;  // per cloud, static-graph mode only
    std::vector<int> labels;
};

PreparedSplit prepare_split(const std::vector<const PointCloud*>& clouds, Augmentation aug,
                            const TrainConfig& config, bool static_graph, int k_edgeconv,
                            const EmbeddingProvider& lle_provider) {
    PreparedSplit out;
    const std::size_t n = clouds.size();
    out.features.resize(n);
    out.labels.resize(n);
    if (static_graph) out.graphs.resize(n);
    parallel_for(n, [&](std::size_t i) {
        const PointCloud std_cloud = standardize(*clouds[i]);
        out.features[i] = build_input_features(std_cloud, aug, config.k_lle, lle_provider);
        out.labels[i] = std_cloud.label;
        // static fallback uses the geometric graph over the coordinates
        if (static_graph) out.graphs[i] = knn(out.features[i].leftCols<3>(), k_edgeconv);
    });
    return out;
}

nn::Batch assemble(const PreparedSplit& split, const std::vector<std::size_t>& which,
                   NeighborGraph& graph_storage, bool static_graph) {
    nn::Batch batch;
    batch.clouds = static_cast<Eigen::Index>(which.size());
    batch.points = split.features[which[0]].rows();
    batch.features.resize(batch.clouds * batch.points, split.features[which[0]].cols());
    std::vector<const NeighborGraph*> graphs;
    for (std::size_t b = 0; b < which.size(); ++b) {
        batch.features.middleRows(static_cast<Eigen::Index>(b) * batch.points, batch.points) =
            split.features[which[b]];
        if (static_graph) graphs.push_back(&split.graphs[which[b]]);
    }
    if (static_graph) {
        graph_storage = nn::stack_graphs(graphs, batch.points);
        batch.static_graph = &graph_storage;
    }
    return batch;
}

std::vector<int> predict(nn::Model& model, const PreparedSplit& split, int batch_size,
                         bool static_graph) {
    std::vector<int> predictions(split.labels.size());
    std::size_t at = 0;
    while (at < split.features.size()) {
        const std::size_t take = std::min<std::size_t>(batch_size, split.features.size() - at);
        std::vector<std::size_t> which(take);
        std::iota(which.begin(), which.end(), at);
        NeighborGraph gs;
        const nn::Batch batch = assemble(split, which, gs, static_graph);
        const Eigen::MatrixXd logits = model.forward(batch, /*train=*/false);
        for (std::size_t b = 0; b < take; ++b) {
            int best = 0;
            for (Eigen::Index c = 1; c < logits.cols(); ++c)
                if (logits(static_cast<Eigen::Index>(b), c) >
                    logits(static_cast<Eigen::Index>(b), best))
                    best = static_cast<int>(c);
            predictions[at + b] = best;
        }
        at += take;
    }
    return predictions;
}

}  // namespace

MetricsReport evaluate_features(nn::Model& model, const std::vector<Eigen::MatrixXd>& features,
                                const std::vector<int>& labels, int batch_size) {
    if (features.empty()) throw InvalidInputError("evaluate: empty split");
    if (features.size() != labels.size())
        throw ContractError("evaluate: feature/label count mismatch");
    PreparedSplit split;
    split.features = features;
    split.labels = labels;
    const bool static_graph = !model.spec.dynamic_graph;
    if (static_graph) {
        split.graphs.resize(features.size());
        parallel_for(features.size(), [&](std::size_t i) {
            split.graphs[i] = knn(features[i].leftCols<3>(), model.spec.k);
        });
    }
    const std::vector<int> predictions = predict(model, split, batch_size, static_graph);
    return metrics_from_predictions(predictions, labels, model.spec.num_classes);
}

MetricsReport evaluate(nn::Model& model, const Dataset& dataset, Split split_tag, int k_lle,
                       int batch_size, const EmbeddingProvider& lle_provider) {
    const auto clouds = dataset.split(split_tag);
    if (clouds.empty()) throw InvalidInputError("evaluate: empty split");
    TrainConfig cfg;
    cfg.k_lle = k_lle;
    const bool static_graph = !model.spec.dynamic_graph;
    const PreparedSplit prepared =
        prepare_split(clouds, model.aug, cfg, static_graph, model.spec.k, lle_provider);
    const std::vector<int> predictions = predict(model, prepared, batch_size, static_graph);
    return metrics_from_predictions(predictions, prepared.labels, model.spec.num_classes);
}

TrainResult train(const Dataset& dataset, const TrainConfig& config,
                  const nn::ArchitectureSpec& profile, Augmentation aug,
                  const EmbeddingProvider& lle_provider) {
    config.validate();
    dataset.validate_for_training();

    const Eigen::Index points = dataset.entries.front().cloud.points.rows();
    for (const auto& e : dataset.entries)
        if (e.cloud.points.rows() != points)
            throw InvalidInputError("train: all clouds must have the same point count "
                                    "(resample upstream); '" +
                                    e.cloud.id + "' differs");

    nn::ArchitectureSpec arch = profile;
    arch.t = config.t;
    arch.k = config.k_edgeconv;
    arch.dropout_rate = config.dropout;
    arch.num_classes = static_cast<int>(dataset.class_names.size());
    arch.validate();

    const int epochs = config.resolved_epochs(aug);
    const bool static_graph = !arch.dynamic_graph;

    const PreparedSplit train_split = prepare_split(dataset.split(Split::Train), aug, config,
                                                    static_graph, config.k_edgeconv, lle_provider);
    const PreparedSplit test_split = prepare_split(dataset.split(Split::Test), aug, config,
                                                   static_graph, config.k_edgeconv, lle_provider);
    if (static_cast<int>(train_split.features.size()) < config.batch_size)
        throw InvalidInputError("train: fewer training clouds than one batch");

    Rng root(config.seed);
    Rng rng_init = root.fork(1);
    Rng rng_shuffle = root.fork(2);
    Rng rng_dropout = root.fork(3);

    nn::Model model(arch, aug, rng_init);
    auto params = model.params();
    SgdMomentum optimizer(params);

    TrainResult result;
    result.k_lle = config.k_lle;
    double best_oa = -1.0;
    std::vector<Eigen::VectorXd> best_state;

    std::vector<std::size_t> order(train_split.features.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < epochs; ++epoch) {
        const double lr = cosine_lr(epoch, epochs, config.lr0);
        rng_shuffle.shuffle(order);

        const std::size_t batches = order.size() / config.batch_size;  // drop last partial
        double loss_sum = 0.0;
        for (std::size_t bi = 0; bi < batches; ++bi) {
            const std::vector<std::size_t> which(order.begin() + bi * config.batch_size,
                                                 order.begin() + (bi + 1) * config.batch_size);
            NeighborGraph gs;
            const nn::Batch batch = assemble(train_split, which, gs, static_graph);
            std::vector<int> labels(which.size());
            for (std::size_t b = 0; b < which.size(); ++b)
                labels[b] = train_split.labels[which[b]];

            model.zero_grads();
            const Eigen::MatrixXd logits = model.forward(batch, /*train=*/true, &rng_dropout);
            nn::SoftmaxCrossEntropy loss_layer;
            const double loss = loss_layer.forward(logits, labels);
            if (!std::isfinite(loss))
                throw NumericalError("train: non-finite loss at epoch " + std::to_string(epoch) +
                                     ", batch " + std::to_string(bi) + ", lr " + fmt_double(lr));
            model.backward(loss_layer.backward());
            optimizer.step(params, lr, config.momentum);
            loss_sum += loss;
        }

        const std::vector<int> predictions =
            predict(model, test_split, config.batch_size, static_graph);
        const MetricsReport metrics =
            metrics_from_predictions(predictions, test_split.labels, arch.num_classes);

        EpochLog row;
        row.epoch = epoch;
        row.lr = lr;
        row.train_loss = loss_sum / static_cast<double>(batches);
        row.test_oa = metrics.oa;
        row.test_ma = metrics.ma;
        result.log.push_back(row);
        result.final_metrics = metrics;

        if (metrics.oa > best_oa) {
            best_oa = metrics.oa;
            result.best_epoch = epoch;
            result.best_metrics = metrics;
            best_state.clear();
            for (auto& p : params) best_state.emplace_back(p.value_vec());
        }
    }

    // restore the best snapshot (parameters and running statistics)
    std::size_t at = 0;
    for (auto& p : params) p.value_vec() = best_state[at++];
    result.model = std::move(model);
    return result;
}

AblationResult run_ablation(const Dataset& dataset, const TrainConfig& base,
                            const nn::ArchitectureSpec& profile,
                            const EmbeddingProvider& lle_provider) {
    struct Cell {
        Augmentation aug;
        int planes;
        int t;
    };
    const Cell grid[] = {
        {Augmentation::None, 0, 1}, {Augmentation::Lle, 1, 1},  {Augmentation::Mp, 1, 1},
        {Augmentation::Mp, 3, 2},   {Augmentation::Mp, 3, 4},   {Augmentation::LleMp, 3, 4},
    };
    AblationResult result;
    for (const Cell& cell : grid) {
        TrainConfig cfg = base;
        cfg.t = cell.t;
        nn::ArchitectureSpec arch = profile;
        if (cell.planes > 0) arch.mp_planes = cell.planes;
        const TrainResult r = train(dataset, cfg, arch, cell.aug, lle_provider);
        AblationRow row;
        row.lle = cell.aug == Augmentation::Lle || cell.aug == Augmentation::LleMp;
        row.mp = cell.aug == Augmentation::Mp || cell.aug == Augmentation::LleMp;
        row.planes = cell.planes;
        row.t = cell.t;
        row.test_oa = r.best_metrics.oa;
        row.test_ma = r.best_metrics.ma;
        result.rows.push_back(row);
    }
    return result;
}

std::string AblationResult::csv() const {
    std::string out = "lle,mp,planes,t,test_ma,test_oa\n";
    for (const auto& r : rows) {
        out += r.lle ? "1," : "0,";
        out += r.mp ? "1," : "0,";
        out += r.planes > 0 ? std::to_string(r.planes) : "-";
        out += ',';
        out += std::to_string(r.t);
        out += ',';
        out += fmt_double(r.test_ma);
        out += ',';
        out += fmt_double(r.test_oa);
        out += '\n';
    }
    return out;
}

}  // namespace pm
