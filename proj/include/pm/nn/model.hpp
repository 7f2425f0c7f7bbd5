#pragma once

#include <filesystem>
#include <optional>

#include "pm/nn/edgeconv.hpp"
#include "pm/nn/mp_gate.hpp"

namespace pm::nn {

enum class Augmentation { None, Lle, Mp, LleMp };

std::string augmentation_name(Augmentation a);
Augmentation augmentation_from_name(const std::string& name);  // InvalidInputError on unknown

/// Structural description of the classifier. Every hidden width is the base
/// width times the channel multiplier t; the logits width is num_classes.
struct ArchitectureSpec {
    int t = 1;
    std::vector<int> edgeconv_widths = {64, 64, 128, 256};
    int embedding_width = 1024;
    std::vector<int> head_widths = {512, 256};
    int k = 20;  // EdgeConv neighbor count
    int num_classes = 40;
    double dropout_rate = 0.5;
    int mp_planes = 3;
    // true: rebuild the kNN graph on each EdgeConv layer's input features;
    // false: one graph on the model input, reusable across a training run.
    bool dynamic_graph = true;

    // The small profile used by tests and the desk-scale benchmark.
    static ArchitectureSpec toy(int num_classes);

    void validate() const;
    // Width entering the first EdgeConv: 3 / 5 / 3+2*planes / 5+2*planes.
    int input_width(Augmentation aug) const;
    // Width of the batch handed to the model: the gate channels are produced
    // in-model, so mp batches carry only the precomputed columns.
    int batch_width(Augmentation aug) const {
        return aug == Augmentation::Lle || aug == Augmentation::LleMp ? 5 : 3;
    }
    int scaled(int base_width) const { return base_width * t; }
};

/// One stacked batch: clouds of equal size concatenated row-wise. For mp
/// augmentations the first three feature columns must be the standardized
/// coordinates; the gate channels are produced inside the model.
struct Batch {
    Eigen::MatrixXd features;  // (clouds * points) x input_width
    Eigen::Index clouds = 0;
    Eigen::Index points = 0;
    // Required when the spec uses a static graph; built on the input features.
    const NeighborGraph* static_graph = nullptr;
};

struct Model {
    Model() = default;
    Model(const ArchitectureSpec& spec, Augmentation aug, Rng& rng);

    ArchitectureSpec spec;
    Augmentation aug = Augmentation::None;

    std::optional<MpGate> gate;
    std::vector<EdgeConv> convs;
    Linear emb_linear;
    BatchNorm emb_bn;
    LeakyRelu emb_act;
    GlobalMaxPool pool;
    struct HeadBlock {
        Linear linear;
        BatchNorm bn;
        LeakyRelu act;
        Dropout drop;
    };
    std::vector<HeadBlock> head;
    Linear logits;

    // rng drives dropout only; it may be null in eval mode.
    Eigen::MatrixXd forward(const Batch& batch, bool train, Rng* rng = nullptr);
    void backward(const Eigen::MatrixXd& glogits);

    std::vector<ParamRef> params();
    void zero_grads();
    Eigen::Index num_trainable() ;

    // Widths of every hidden layer in order (EdgeConvs, embedding, head);
    // used by the structural channel-control checks.
    std::vector<Eigen::Index> hidden_widths() const;

    double kink_margin() const;

    // forward caches
    Eigen::Index gate_input_cols_ = 0;
    Eigen::MatrixXd concat_cache_;
    std::vector<Eigen::Index> conv_offsets_;
};

// ---------------------------------------------------------------------------
// Checkpoints: versioned container of (name, shape, f32 payload) per
// parameter plus the architecture and augmentation tag. Loading rebuilds the
// model and fails on any name/shape/spec mismatch.
// ---------------------------------------------------------------------------

struct Checkpoint {
    ArchitectureSpec spec;
    Augmentation aug = Augmentation::None;
    int k_lle = 12;  // needed to regenerate lle features at eval time
    Model model;
};

void save_checkpoint(Model& model, int k_lle, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace pm::nn
