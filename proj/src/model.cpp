#include <cmath>
#include <limits>

#include "pm/nn/model.hpp"

namespace pm::nn {

std::string augmentation_name(Augmentation a) {
    switch (a) {
        case Augmentation::None: return "none";
        case Augmentation::Lle: return "lle";
        case Augmentation::Mp: return "mp";
        case Augmentation::LleMp: return "lle+mp";
    }
    return "none";
}

Augmentation augmentation_from_name(const std::string& name) {
    if (name == "none") return Augmentation::None;
    if (name == "lle") return Augmentation::Lle;
    if (name == "mp") return Augmentation::Mp;
    if (name == "lle+mp" || name == "lle_mp") return Augmentation::LleMp;
    throw InvalidInputError("unknown augmentation '" + name +
                            "' (expected none|lle|mp|lle+mp)");
}

ArchitectureSpec ArchitectureSpec::toy(int num_classes_) {
    ArchitectureSpec s;
    s.edgeconv_widths = {16, 16, 32, 64};
    s.embedding_width = 128;
    s.head_widths = {64, 32};
    s.k = 10;
    s.num_classes = num_classes_;
    return s;
}

void ArchitectureSpec::validate() const {
    if (t < 1) throw InvalidInputError("ArchitectureSpec: t must be a positive integer");
    if (edgeconv_widths.empty()) throw InvalidInputError("ArchitectureSpec: no EdgeConv layers");
    for (int w : edgeconv_widths)
        if (w < 1) throw InvalidInputError("ArchitectureSpec: non-positive EdgeConv width");
    for (int w : head_widths)
        if (w < 1) throw InvalidInputError("ArchitectureSpec: non-positive head width");
    if (embedding_width < 1) throw InvalidInputError("ArchitectureSpec: bad embedding width");
    if (k < 1) throw InvalidInputError("ArchitectureSpec: k must be positive");
    if (num_classes < 2) throw InvalidInputError("ArchitectureSpec: need at least 2 classes");
    if (dropout_rate < 0.0 || dropout_rate >= 1.0)
        throw InvalidInputError("ArchitectureSpec: dropout must be in [0, 1)");
    if (mp_planes < 1 || mp_planes > 3)
        throw InvalidInputError("ArchitectureSpec: mp_planes must be in [1, 3]");
}

int ArchitectureSpec::input_width(Augmentation aug) const {
    switch (aug) {
        case Augmentation::None: return 3;
        case Augmentation::Lle: return 5;
        case Augmentation::Mp: return 3 + 2 * mp_planes;
        case Augmentation::LleMp: return 5 + 2 * mp_planes;
    }
    return 3;
}

Model::Model(const ArchitectureSpec& spec_, Augmentation aug_, Rng& rng)
    : spec(spec_), aug(aug_) {
    spec.validate();
    const bool with_mp = aug == Augmentation::Mp || aug == Augmentation::LleMp;
    if (with_mp) gate.emplace(spec.mp_planes, rng);

    int width = spec.input_width(aug);
    Eigen::Index concat = 0;
    for (int base : spec.edgeconv_widths) {
        const int out = spec.scaled(base);
        convs.emplace_back(width, out, rng);
        width = out;
        concat += out;
    }
    const int emb = spec.scaled(spec.embedding_width);
    emb_linear = Linear(concat, emb, false, rng);
    emb_bn = BatchNorm(emb);

    int head_in = emb;
    for (int base : spec.head_widths) {
        const int out = spec.scaled(base);
        HeadBlock block;
        block.linear = Linear(head_in, out, false, rng);
        block.bn = BatchNorm(out);
        block.drop.rate = spec.dropout_rate;
        head.push_back(std::move(block));
        head_in = out;
    }
    logits = Linear(head_in, spec.num_classes, true, rng);
}

Eigen::MatrixXd Model::forward(const Batch& batch, bool train, Rng* rng) {
    if (batch.features.rows() != batch.clouds * batch.points)
        throw ContractError("Model: batch features rows != clouds * points");
    if (batch.features.cols() != spec.batch_width(aug))
        throw ContractError("Model: batch width " + std::to_string(batch.features.cols()) +
                            " does not match augmentation batch width " +
                            std::to_string(spec.batch_width(aug)));
    if (train && spec.dropout_rate > 0.0 && !rng)
        throw ContractError("Model: training forward needs an rng for dropout");

    Eigen::MatrixXd x;
    gate_input_cols_ = batch.features.cols();
    if (gate) {
        const Eigen::MatrixXd gated = gate->forward(batch.features.leftCols<3>());
        x.resize(batch.features.rows(), batch.features.cols() + gated.cols());
        x << batch.features, gated;
    } else {
        x = batch.features;
    }

    if (!spec.dynamic_graph && !batch.static_graph)
        throw ContractError("Model: spec uses a static graph but none was supplied");

    std::vector<Eigen::MatrixXd> conv_out;
    conv_out.reserve(convs.size());
    conv_offsets_.assign(1, 0);
    for (auto& conv : convs) {
        const Eigen::MatrixXd& in = conv_out.empty() ? x : conv_out.back();
        Eigen::MatrixXd out;
        if (spec.dynamic_graph) {
            const NeighborGraph g = batched_knn(in, batch.points, spec.k);
            out = conv.forward(in, g, train);
        } else {
            out = conv.forward(in, *batch.static_graph, train);
        }
        conv_offsets_.push_back(conv_offsets_.back() + out.cols());
        conv_out.push_back(std::move(out));
    }

    concat_cache_.resize(x.rows(), conv_offsets_.back());
    for (std::size_t i = 0; i < conv_out.size(); ++i)
        concat_cache_.middleCols(conv_offsets_[i], conv_out[i].cols()) = conv_out[i];

    Eigen::MatrixXd y = emb_act.forward(emb_bn.forward(emb_linear.forward(concat_cache_), train));
    y = pool.forward(y, batch.points);
    Rng scratch(0);  // untouched in eval mode
    for (auto& block : head) {
        y = block.act.forward(block.bn.forward(block.linear.forward(y), train));
        y = block.drop.forward(y, train, rng ? *rng : scratch);
    }
    return logits.forward(y);
}

void Model::backward(const Eigen::MatrixXd& glogits) {
    Eigen::MatrixXd g = logits.backward(glogits);
    for (auto it = head.rbegin(); it != head.rend(); ++it)
        g = it->linear.backward(it->bn.backward(it->act.backward(it->drop.backward(g))));
    g = pool.backward(g);
    g = emb_linear.backward(emb_bn.backward(emb_act.backward(g)));

    // split the concatenation and run the EdgeConv chain in reverse
    Eigen::MatrixXd carry;
    for (std::size_t i = convs.size(); i-- > 0;) {
        Eigen::MatrixXd slice = g.middleCols(conv_offsets_[i], conv_offsets_[i + 1] - conv_offsets_[i]);
        if (carry.size()) slice += carry;
        carry = convs[i].backward(slice);
    }
    if (gate) gate->backward(carry.rightCols(gate->out_width()));
}

std::vector<ParamRef> Model::params() {
    std::vector<ParamRef> out;
    if (gate) gate->collect("gate", out);
    for (std::size_t i = 0; i < convs.size(); ++i)
        convs[i].collect("edgeconv" + std::to_string(i), out);
    emb_linear.collect("embedding", out);
    emb_bn.collect("embedding.bn", out);
    for (std::size_t i = 0; i < head.size(); ++i) {
        head[i].linear.collect("head" + std::to_string(i), out);
        head[i].bn.collect("head" + std::to_string(i) + ".bn", out);
    }
    logits.collect("logits", out);
    return out;
}

void Model::zero_grads() {
    for (auto& p : params())
        if (p.grad) p.grad_vec().setZero();
}

Eigen::Index Model::num_trainable() {
    Eigen::Index n = 0;
    for (auto& p : params())
        if (p.trainable) n += p.size();
    return n;
}

std::vector<Eigen::Index> Model::hidden_widths() const {
    std::vector<Eigen::Index> w;
    for (const auto& conv : convs) w.push_back(conv.theta.rows());
    w.push_back(emb_linear.w.rows());
    for (const auto& block : head) w.push_back(block.linear.w.rows());
    return w;
}

double Model::kink_margin() const {
    double m = std::numeric_limits<double>::infinity();
    for (const auto& conv : convs) m = std::min(m, conv.kink_margin());
    m = std::min(m, emb_act.kink_margin());
    m = std::min(m, pool.tie_margin());
    for (const auto& block : head) m = std::min(m, block.act.kink_margin());
    if (gate) m = std::min(m, gate->kink_margin());
    return m;
}

}  // namespace pm::nn
