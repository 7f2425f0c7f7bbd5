#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "pm/train/schedule.hpp"
#include "pm/train/trainer.hpp"

using namespace pm;
using nn::Augmentation;

namespace {

// Four easily separable classes, a few clouds each.
Dataset tiny_dataset(int per_class = 6, int points = 48, double noise = 0.02) {
    Dataset ds;
    const ShapeClass classes[] = {ShapeClass::Sphere, ShapeClass::Cube, ShapeClass::Cylinder,
                                  ShapeClass::Torus};
    for (int c = 0; c < 4; ++c) {
        ds.class_names.push_back(shape_class_names()[static_cast<int>(classes[c])]);
        for (int i = 0; i < per_class; ++i) {
            DatasetEntry e;
            e.cloud = generate_shape(classes[c], points, noise,
                                     1000 + static_cast<std::uint64_t>(c) * 100 + i);
            e.cloud.label = c;
            e.split = i < per_class - 2 ? Split::Train : Split::Test;
            ds.entries.push_back(std::move(e));
        }
    }
    return ds;
}

nn::ArchitectureSpec tiny_arch() {
    nn::ArchitectureSpec s;
    s.edgeconv_widths = {8, 8};
    s.embedding_width = 16;
    s.head_widths = {16, 8};
    s.k = 4;
    s.num_classes = 4;
    s.dynamic_graph = false;
    return s;
}

TrainConfig tiny_config() {
    TrainConfig c;
    c.epochs = 3;
    c.batch_size = 4;
    c.lr0 = 0.05;
    c.seed = 7;
    c.k_edgeconv = 4;
    c.k_lle = 6;
    return c;
}

}  // namespace

TEST_CASE("cosine schedule hits its endpoints") {
    CHECK(cosine_lr(0, 100, 0.1) == 0.1);
    const double lr_min = 0.1 * 1e-3;
    CHECK(cosine_lr(50, 100, 0.1) == doctest::Approx((0.1 + lr_min) / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(cosine_lr(100, 100, 0.1), InvalidInputError);
    CHECK_THROWS_AS(cosine_lr(-1, 100, 0.1), InvalidInputError);
}

TEST_CASE("cosine schedule is monotone non-increasing") {
    const int epochs = 250;
    double prev = cosine_lr(0, epochs, 0.1);
    for (int e = 1; e < epochs; ++e) {
        const double lr = cosine_lr(e, epochs, 0.1);
        CHECK(lr <= prev);
        prev = lr;
    }
    CHECK(prev >= 0.1 * 1e-3);
}

TEST_CASE("sgd momentum follows the velocity recurrence") {
    Eigen::MatrixXd p = Eigen::MatrixXd::Zero(1, 1);
    Eigen::MatrixXd g = Eigen::MatrixXd::Ones(1, 1);
    std::vector<nn::ParamRef> params = {{"p", p.data(), g.data(), 1, 1, true}};

    SgdMomentum plain(params);
    plain.step(params, 0.1, 0.0);
    CHECK(p(0, 0) == doctest::Approx(-0.1));

    p.setZero();
    SgdMomentum opt(params);
    opt.step(params, 0.1, 0.9);
    CHECK(opt.velocity[0](0) == doctest::Approx(1.0));
    opt.step(params, 0.1, 0.9);
    CHECK(opt.velocity[0](0) == doctest::Approx(1.9));
    CHECK(p(0, 0) == doctest::Approx(-0.1 - 0.19));

    g.setZero();
    SgdMomentum opt2(params);
    const double before = p(0, 0);
    opt2.step(params, 0.1, 0.9);
    CHECK(p(0, 0) == before);
}

TEST_CASE("metrics from the worked confusion matrix") {
    Eigen::MatrixXi confusion(2, 2);
    confusion << 2, 0, 1, 1;
    const MetricsReport r = metrics_from_confusion(confusion);
    CHECK(r.oa == doctest::Approx(0.75));
    CHECK(r.ma == doctest::Approx(0.75));
    CHECK(r.precision[0] == doctest::Approx(2.0 / 3.0));
    CHECK(r.recall[0] == doctest::Approx(1.0));
    CHECK(r.f1[0] == doctest::Approx(0.8));
    CHECK(r.support == std::vector<int>{2, 2});
}

TEST_CASE("a perfect predictor scores one everywhere") {
    const MetricsReport r = metrics_from_predictions({0, 1, 2, 0}, {0, 1, 2, 0}, 3);
    CHECK(r.oa == 1.0);
    CHECK(r.ma == 1.0);
    CHECK(r.confusion(0, 1) == 0);
    CHECK(r.confusion(1, 2) == 0);
}

TEST_CASE("metrics are invariant under class relabeling") {
    Rng rng(3);
    std::vector<int> actual, predicted;
    for (int i = 0; i < 200; ++i) {
        actual.push_back(static_cast<int>(rng.uniform_int(5)));
        predicted.push_back(static_cast<int>(rng.uniform_int(5)));
    }
    const MetricsReport base = metrics_from_predictions(predicted, actual, 5);

    const int perm[5] = {3, 0, 4, 1, 2};
    std::vector<int> actual_p, predicted_p;
    for (int i = 0; i < 200; ++i) {
        actual_p.push_back(perm[actual[i]]);
        predicted_p.push_back(perm[predicted[i]]);
    }
    const MetricsReport moved = metrics_from_predictions(predicted_p, actual_p, 5);
    CHECK(base.oa == doctest::Approx(moved.oa).epsilon(1e-12));
    CHECK(base.ma == doctest::Approx(moved.ma).epsilon(1e-12));

    int support_total = 0;
    for (int s : base.support) support_total += s;
    CHECK(support_total == 200);
    CHECK((base.confusion.array() >= 0).all());
}

TEST_CASE("unsupported classes are excluded from mean accuracy") {
    Eigen::MatrixXi confusion = Eigen::MatrixXi::Zero(3, 3);
    confusion(0, 0) = 4;
    confusion(1, 0) = 2;
    confusion(1, 1) = 2;  // class 2 has no examples
    const MetricsReport r = metrics_from_confusion(confusion);
    CHECK(r.ma == doctest::Approx((1.0 + 0.5) / 2.0));
}

TEST_CASE("training is deterministic and logs the cosine schedule") {
    const Dataset ds = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    const nn::ArchitectureSpec arch = tiny_arch();

    TrainResult a = train(ds, cfg, arch, Augmentation::None);
    TrainResult b = train(ds, cfg, arch, Augmentation::None);
    CHECK(render_epoch_csv(a.log) == render_epoch_csv(b.log));
    CHECK(a.best_metrics.to_json() == b.best_metrics.to_json());
    CHECK(a.best_epoch == b.best_epoch);

    REQUIRE(a.log.size() == 3);
    for (int e = 0; e < 3; ++e) {
        CHECK(a.log[e].lr == cosine_lr(e, 3, cfg.lr0));
        CHECK(std::isfinite(a.log[e].train_loss));
    }
    // the returned model carries the best snapshot
    CHECK(a.best_metrics.oa >= a.final_metrics.oa - 1e-12);
}

TEST_CASE("training works with lle and mp augmentations at toy scale") {
    const Dataset ds = tiny_dataset(4, 32);
    TrainConfig cfg = tiny_config();
    cfg.batch_size = 2;
    cfg.epochs = 1;
    cfg.k_lle = 5;
    for (const auto aug : {Augmentation::Lle, Augmentation::Mp, Augmentation::LleMp}) {
        const TrainResult r = train(ds, cfg, tiny_arch(), aug);
        CHECK(r.log.size() == 1);
        CHECK(std::isfinite(r.log[0].train_loss));
    }
}

TEST_CASE("training aborts with diagnostics when the loss blows up") {
    const Dataset ds = tiny_dataset(4, 32);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 2;
    cfg.batch_size = 4;
    cfg.lr0 = 1e160;
    try {
        train(ds, cfg, tiny_arch(), Augmentation::None);
        FAIL("expected NumericalError");
    } catch (const NumericalError& e) {
        const std::string msg = e.what();
        CHECK(msg.find("epoch") != std::string::npos);
        CHECK(msg.find("lr") != std::string::npos);
    }
}

TEST_CASE("train rejects mixed point counts and undersized datasets") {
    Dataset ds = tiny_dataset(4, 32);
    ds.entries[3].cloud.points.conservativeResize(20, 3);
    CHECK_THROWS_AS(train(ds, tiny_config(), tiny_arch(), Augmentation::None),
                    InvalidInputError);

    const Dataset small = tiny_dataset(2, 32);  // 0 test per class after split rule
    TrainConfig cfg = tiny_config();
    cfg.batch_size = 64;  // more than the training split
    CHECK_THROWS_AS(train(tiny_dataset(4, 32), cfg, tiny_arch(), Augmentation::None),
                    InvalidInputError);
}

TEST_CASE("evaluate matches training-side metrics and rejects empty splits") {
    const Dataset ds = tiny_dataset();
    const TrainConfig cfg = tiny_config();
    TrainResult r = train(ds, cfg, tiny_arch(), Augmentation::None);

    const MetricsReport again = evaluate(r.model, ds, Split::Test, cfg.k_lle, cfg.batch_size);
    CHECK(again.oa == doctest::Approx(r.best_metrics.oa));
    CHECK(again.ma == doctest::Approx(r.best_metrics.ma));

    Dataset no_test = ds;
    for (auto& e : no_test.entries) e.split = Split::Train;
    CHECK_THROWS_AS(evaluate(r.model, no_test, Split::Test, cfg.k_lle), InvalidInputError);
}

TEST_CASE("the ablation grid has the six expected rows") {
    const Dataset ds = tiny_dataset(5, 32);
    TrainConfig cfg = tiny_config();
    cfg.epochs = 1;
    cfg.batch_size = 4;
    cfg.k_lle = 5;
    nn::ArchitectureSpec arch = tiny_arch();
    const AblationResult r = run_ablation(ds, cfg, arch);
    REQUIRE(r.rows.size() == 6);
    CHECK_FALSE(r.rows[0].lle);
    CHECK_FALSE(r.rows[0].mp);
    CHECK(r.rows[1].lle);
    CHECK(r.rows[2].mp);
    CHECK(r.rows[2].planes == 1);
    CHECK(r.rows[3].t == 2);
    CHECK(r.rows[4].t == 4);
    CHECK(r.rows[5].lle);
    CHECK(r.rows[5].mp);
    for (const auto& row : r.rows) {
        CHECK(std::isfinite(row.test_oa));
        CHECK(std::isfinite(row.test_ma));
    }
    const std::string csv = r.csv();
    CHECK(csv.find("lle,mp,planes,t,test_ma,test_oa\n") == 0);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 7);
}
