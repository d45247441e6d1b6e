#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "pcib/classifiers.hpp"
#include "pcib/rng.hpp"

using namespace pcib;
using ml::ModelKind;

namespace {

// two well-separated gaussian blobs in 2-d, 10 points per class
FeatureMatrix separable_toy(std::uint64_t seed = 0) {
    DetRng rng(seed);
    FeatureMatrix m;
    m.variant = FeatureVariant::Base;
    m.names = {"f0", "f1"};
    for (int cls = 0; cls <= 1; ++cls) {
        double center = cls == 0 ? -2.0 : 2.0;
        for (int i = 0; i < 10; ++i) {
            m.rows.push_back({center + 0.3 * rng.normal(), center + 0.3 * rng.normal()});
            m.labels.push_back(cls);
        }
    }
    return m;
}

FeatureMatrix planted_like(std::uint64_t seed, int n) {
    DetRng rng(seed);
    FeatureMatrix m;
    m.variant = FeatureVariant::Base;
    m.names = {"a", "b", "c"};
    for (int i = 0; i < n; ++i) {
        int label = i % 2;
        double shift = label == 1 ? 0.8 : 0.0;
        m.rows.push_back({rng.normal() + shift, rng.normal(), rng.uniform()});
        m.labels.push_back(label);
    }
    return m;
}

double train_accuracy(const ml::TrainedModel& model, const FeatureMatrix& m) {
    int correct = 0;
    for (std::size_t i = 0; i < m.size(); ++i) {
        int pred = model.predict_proba(m.rows[i]) >= 0.5 ? 1 : 0;
        correct += pred == m.labels[i];
    }
    return static_cast<double>(correct) / static_cast<double>(m.size());
}

const std::array<ModelKind, 5> kAllKinds = {
    ModelKind::RandomForest, ModelKind::GradientBoosting, ModelKind::LogisticWeighted,
    ModelKind::Mlp, ModelKind::MetaEnsemble};

}  // namespace

TEST_CASE("every kind separates the toy set perfectly") {
    FeatureMatrix m = separable_toy();
    ml::TrainConfig cfg;
    cfg.seed = 1;
    cfg.folds = 2;  // 20 points
    for (ModelKind kind : kAllKinds) {
        ml::TrainedModel model = ml::train(kind, m, cfg);
        CHECK_MESSAGE(train_accuracy(model, m) == 1.0, ml::to_string(kind));
    }
}

TEST_CASE("training is deterministic: identical serialized bytes") {
    FeatureMatrix m = planted_like(3, 40);
    ml::TrainConfig cfg;
    cfg.seed = 42;
    cfg.rf_trees = 20;
    cfg.gb_rounds = 15;
    cfg.mlp_epochs = 50;
    cfg.folds = 3;
    for (ModelKind kind : kAllKinds) {
        auto a = ml::serialize(ml::train(kind, m, cfg));
        auto b = ml::serialize(ml::train(kind, m, cfg));
        CHECK_MESSAGE(a == b, ml::to_string(kind));
    }
    // and a different seed changes stochastic kinds
    ml::TrainConfig cfg2 = cfg;
    cfg2.seed = 43;
    CHECK(ml::serialize(ml::train(ModelKind::RandomForest, m, cfg)) !=
          ml::serialize(ml::train(ModelKind::RandomForest, m, cfg2)));
}

TEST_CASE("single-class data is a training error") {
    FeatureMatrix m = separable_toy();
    std::fill(m.labels.begin(), m.labels.end(), 1);
    ml::TrainConfig cfg;
    cfg.folds = 2;
    CHECK_THROWS_AS(ml::train(ModelKind::RandomForest, m, cfg), TrainingError);
}

TEST_CASE("meta-ensemble needs enough examples for its internal folds") {
    FeatureMatrix m = separable_toy();
    m.rows.resize(6);
    m.labels.assign({0, 1, 0, 1, 0, 1});
    ml::TrainConfig cfg;
    cfg.folds = 5;  // needs >= 10
    CHECK_THROWS_AS(ml::train(ModelKind::MetaEnsemble, m, cfg), TrainingError);
}

TEST_CASE("degenerate constant features are tolerated") {
    FeatureMatrix m = separable_toy();
    for (auto& row : m.rows) row.push_back(7.0);  // constant column
    m.names.push_back("constant");
    ml::TrainConfig cfg;
    cfg.folds = 2;
    cfg.rf_trees = 25;
    for (ModelKind kind : kAllKinds) {
        ml::TrainedModel model = ml::train(kind, m, cfg);
        CHECK(train_accuracy(model, m) == 1.0);
    }
}

TEST_CASE("predict_proba bounds and dimension checks") {
    FeatureMatrix m = planted_like(9, 30);
    ml::TrainConfig cfg;
    cfg.seed = 5;
    cfg.rf_trees = 15;
    cfg.gb_rounds = 10;
    cfg.mlp_epochs = 30;
    cfg.folds = 3;
    DetRng rng(4);
    for (ModelKind kind : kAllKinds) {
        ml::TrainedModel model = ml::train(kind, m, cfg);
        for (int i = 0; i < 200; ++i) {
            std::vector<double> x = {rng.normal() * 100, rng.normal() * 100,
                                     rng.normal() * 100};
            double p = model.predict_proba(x);
            CHECK(p >= 0.0);
            CHECK(p <= 1.0);
        }
        try {
            model.predict_proba(std::vector<double>{1.0});
            FAIL("expected DimensionError");
        } catch (const DimensionError& e) {
            CHECK(std::string(e.what()).find("a, b, c") != std::string::npos);
        }
    }
}

TEST_CASE("trivial prediction identities") {
    // logistic with zero weights and bias scores 0.5
    ml::LinearParams zero;
    zero.weights = {0.0, 0.0};
    zero.mean = {0.0, 0.0};
    zero.scale = {1.0, 1.0};
    std::vector<double> x = {3.0, -1.0};
    CHECK(ml::detail::predict_linear(zero, x) == doctest::Approx(0.5));

    // a forest of identical always-1 stumps votes 1.0
    ml::TrainedModel rf;
    rf.kind = ModelKind::RandomForest;
    rf.feature_names = {"f0", "f1"};
    ml::Tree stump;
    stump.nodes.push_back({-1, 0.0, -1, -1, 1.0});
    rf.forest_trees = {stump, stump, stump};
    CHECK(rf.predict_proba(x) == 1.0);
}

TEST_CASE("MLP confidently separates its training points") {
    FeatureMatrix m = separable_toy(2);
    ml::TrainConfig cfg;
    cfg.seed = 7;
    cfg.folds = 2;
    ml::TrainedModel model = ml::train(ModelKind::Mlp, m, cfg);
    for (std::size_t i = 0; i < m.size(); ++i) {
        double p = model.predict_proba(m.rows[i]);
        if (m.labels[i] == 1) CHECK(p >= 0.9);
        else CHECK(p <= 0.1);
    }
}

TEST_CASE("GB training loss is non-increasing") {
    for (std::uint64_t seed : {0ull, 1ull, 2ull}) {
        FeatureMatrix m = planted_like(seed, 60);
        ml::TrainConfig cfg;
        cfg.seed = seed;
        cfg.gb_rounds = 60;
        cfg.folds = 3;
        auto curve = ml::gb_training_loss_curve(m, cfg);
        REQUIRE(curve.size() == 61);
        for (std::size_t i = 1; i < curve.size(); ++i) {
            CHECK(curve[i] <= curve[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("tree growth is invariant to row permutation with fixed bootstraps") {
    FeatureMatrix m = planted_like(11, 24);
    std::vector<std::size_t> bootstrap = {0, 1, 2, 3, 4,  5,  6,  7,
                                          8, 9, 10, 11, 12, 13, 14, 15};

    DetRng rng_a(100);
    ml::Tree a = ml::detail::grow_classification_tree(m.rows, m.labels, bootstrap, 6,
                                                      3, rng_a, nullptr);

    // permute the training rows and remap the bootstrap to the same multiset
    std::vector<std::size_t> perm(m.size());
    for (std::size_t i = 0; i < perm.size(); ++i) perm[i] = (i + 7) % perm.size();
    std::vector<std::vector<double>> rows_p(m.size());
    std::vector<int> labels_p(m.size());
    for (std::size_t i = 0; i < m.size(); ++i) {
        rows_p[perm[i]] = m.rows[i];
        labels_p[perm[i]] = m.labels[i];
    }
    std::vector<std::size_t> bootstrap_p;
    for (std::size_t r : bootstrap) bootstrap_p.push_back(perm[r]);

    DetRng rng_b(100);
    ml::Tree b = ml::detail::grow_classification_tree(rows_p, labels_p, bootstrap_p, 6,
                                                      3, rng_b, nullptr);

    DetRng probe(55);
    for (int i = 0; i < 100; ++i) {
        std::vector<double> x = {probe.normal(), probe.normal(), probe.uniform()};
        CHECK(a.predict(x) == b.predict(x));
    }
}

TEST_CASE("oof_predictions bookkeeping") {
    FeatureMatrix m;
    m.variant = FeatureVariant::Base;
    m.names = {"f"};
    m.rows = {{0.1}, {0.9}, {0.2}, {0.8}};
    m.labels = {0, 1, 0, 1};
    FoldAssignment folds;
    folds.k = 2;
    folds.fold_index = {0, 0, 1, 1};
    ml::TrainConfig cfg;
    cfg.folds = 2;
    cfg.rf_trees = 10;

    auto oof = ml::oof_predictions(ModelKind::RandomForest, m, folds, cfg);
    REQUIRE(oof.size() == 4);  // concatenated OOF count equals dataset size
    for (std::size_t i = 0; i < 4; ++i) CHECK(oof[i].second == m.labels[i]);

    auto oof2 = ml::oof_predictions(ModelKind::RandomForest, m, folds, cfg);
    CHECK(oof == oof2);

    FoldAssignment bad;
    bad.k = 2;
    bad.fold_index = {0, 1};
    CHECK_THROWS_AS(ml::oof_predictions(ModelKind::RandomForest, m, bad, cfg),
                    DataError);
}

TEST_CASE("meta-ensemble combiner is fit on exactly the OOF base probabilities") {
    FeatureMatrix m = planted_like(21, 40);
    ml::TrainConfig cfg;
    cfg.seed = 17;
    cfg.rf_trees = 20;
    cfg.gb_rounds = 10;
    cfg.mlp_epochs = 40;
    cfg.folds = 4;

    ml::TrainedModel meta = ml::train(ModelKind::MetaEnsemble, m, cfg);

    // reproduce the leakage-safe path by hand: same folds, same OOF probs
    FoldAssignment folds = stratified_folds_from_labels(m.labels, cfg.folds, cfg.seed);
    std::vector<std::vector<double>> meta_x(m.size(), std::vector<double>(4));
    std::size_t col = 0;
    for (ModelKind kind : {ModelKind::RandomForest, ModelKind::GradientBoosting,
                           ModelKind::LogisticWeighted, ModelKind::Mlp}) {
        auto oof = ml::oof_predictions(kind, m, folds, cfg);
        for (std::size_t i = 0; i < oof.size(); ++i) meta_x[i][col] = oof[i].first;
        ++col;
    }
    ml::LinearParams expected = ml::detail::fit_logistic(meta_x, m.labels);
    REQUIRE(meta.meta_combiner.weights.size() == expected.weights.size());
    for (std::size_t i = 0; i < expected.weights.size(); ++i) {
        CHECK(meta.meta_combiner.weights[i] == expected.weights[i]);
    }
    CHECK(meta.meta_combiner.bias == expected.bias);
    CHECK(meta.meta_base.size() == 4);
}

TEST_CASE("serialization round-trips predictions bit-exactly") {
    FeatureMatrix m = planted_like(31, 30);
    ml::TrainConfig cfg;
    cfg.seed = 3;
    cfg.rf_trees = 12;
    cfg.gb_rounds = 8;
    cfg.mlp_epochs = 25;
    cfg.folds = 3;
    DetRng rng(6);
    for (ModelKind kind : kAllKinds) {
        ml::TrainedModel model = ml::train(kind, m, cfg);
        std::string bytes = ml::serialize(model);
        ml::TrainedModel restored = ml::deserialize(bytes);
        CHECK(restored.kind == model.kind);
        CHECK(restored.feature_names == model.feature_names);
        for (int i = 0; i < 1000; ++i) {
            std::vector<double> x = {rng.normal(), rng.normal(), rng.uniform()};
            CHECK(model.predict_proba(x) == restored.predict_proba(x));
        }
        CHECK(ml::serialize(restored) == bytes);
    }
}

TEST_CASE("deserialize rejects truncated bytes and old versions") {
    FeatureMatrix m = separable_toy();
    ml::TrainConfig cfg;
    cfg.folds = 2;
    cfg.rf_trees = 5;
    std::string bytes = ml::serialize(ml::train(ModelKind::RandomForest, m, cfg));

    CHECK_THROWS_AS(ml::deserialize(bytes.substr(0, bytes.size() / 2)),
                    ModelFormatError);

    std::string old = bytes;
    auto pos = old.find("pcib-model-v1");
    REQUIRE(pos != std::string::npos);
    old.replace(pos, 13, "pcib-model-v0");
    CHECK_THROWS_AS(ml::deserialize(old), ModelFormatError);
}

TEST_CASE("mlp gradient check against central finite differences") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        double dev = ml::mlp_gradient_check(seed);
        CHECK_MESSAGE(dev <= 1e-4, "seed ", seed, " deviation ", dev);
    }

    // zero-weight net: gradients vanish where finite differences do
    double dev = ml::mlp_gradient_check(123, 5, 4, 10);
    CHECK(dev <= 1e-4);
}

TEST_CASE("tree feature importance concentrates on the informative feature") {
    FeatureMatrix m = planted_like(41, 120);  // only feature 0 is informative
    ml::TrainConfig cfg;
    cfg.seed = 2;
    cfg.rf_trees = 60;
    cfg.folds = 3;
    ml::TrainedModel rf = ml::train(ModelKind::RandomForest, m, cfg);
    REQUIRE(rf.feature_importance.size() == 3);
    double total = rf.feature_importance[0] + rf.feature_importance[1] +
                   rf.feature_importance[2];
    CHECK(total == doctest::Approx(1.0));
    CHECK(rf.feature_importance[0] > rf.feature_importance[1]);
    CHECK(rf.feature_importance[0] > rf.feature_importance[2]);
}
