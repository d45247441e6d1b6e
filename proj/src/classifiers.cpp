#include "pcib/classifiers.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numeric>

#include <json.hpp>

namespace pcib::ml {

namespace {

using nlohmann::json;

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

std::uint64_t derive_seed(std::uint64_t seed, const char* tag, std::uint64_t salt) {
    std::uint64_t h = fnv1a64_combine(fnv1a64(tag), seed);
    return fnv1a64_combine(h, salt);
}

void standardize_stats(const std::vector<std::vector<double>>& x,
                       std::vector<double>& mean, std::vector<double>& scale) {
    const std::size_t n = x.size(), d = x[0].size();
    mean.assign(d, 0.0);
    scale.assign(d, 1.0);
    for (const auto& row : x) {
        for (std::size_t j = 0; j < d; ++j) mean[j] += row[j];
    }
    for (std::size_t j = 0; j < d; ++j) mean[j] /= static_cast<double>(n);
    for (std::size_t j = 0; j < d; ++j) {
        double var = 0.0;
        for (const auto& row : x) {
            double c = row[j] - mean[j];
            var += c * c;
        }
        double sd = std::sqrt(var / static_cast<double>(n));
        scale[j] = sd > 1e-12 ? sd : 1.0;
    }
}

void check_trainable(ModelKind kind, const FeatureMatrix& matrix,
                     const TrainConfig& cfg) {
    cfg.validate();
    if (matrix.rows.empty()) throw TrainingError("empty feature matrix");
    long pos = std::accumulate(matrix.labels.begin(), matrix.labels.end(), 0L);
    if (pos == 0 || pos == static_cast<long>(matrix.labels.size())) {
        throw TrainingError("training needs both classes present");
    }
    // only the meta-ensemble folds internally during training
    if (kind == ModelKind::MetaEnsemble &&
        matrix.size() < 2 * static_cast<std::size_t>(cfg.folds)) {
        throw TrainingError("meta-ensemble training needs at least 2*folds examples (" +
                            std::to_string(2 * cfg.folds) + ")");
    }
}

struct MlpGradients {
    std::vector<double> w1, b1, w2;
    double b2 = 0.0;
};

// forward pass on already-standardized input
double mlp_forward(const MlpParams& p, std::span<const double> z,
                   std::vector<double>* hidden_out = nullptr) {
    const int h = p.hidden;
    const std::size_t d = z.size();
    double out = p.b2;
    if (hidden_out) hidden_out->assign(static_cast<std::size_t>(h), 0.0);
    for (int i = 0; i < h; ++i) {
        double zi = p.b1[static_cast<std::size_t>(i)];
        for (std::size_t j = 0; j < d; ++j) {
            zi += p.w1[static_cast<std::size_t>(i) * d + j] * z[j];
        }
        double ai = std::tanh(zi);
        if (hidden_out) (*hidden_out)[static_cast<std::size_t>(i)] = ai;
        out += p.w2[static_cast<std::size_t>(i)] * ai;
    }
    return sigmoid(out);
}

// mean logistic loss over a standardized batch
double mlp_loss(const MlpParams& p, const std::vector<std::vector<double>>& z,
                const std::vector<int>& y) {
    double acc = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        double prob = std::clamp(mlp_forward(p, z[i]), 1e-12, 1.0 - 1e-12);
        acc -= y[i] == 1 ? std::log(prob) : std::log(1.0 - prob);
    }
    return acc / static_cast<double>(z.size());
}

MlpGradients mlp_gradients(const MlpParams& p,
                           const std::vector<std::vector<double>>& z,
                           const std::vector<int>& y) {
    const std::size_t n = z.size(), d = z[0].size();
    const int h = p.hidden;
    MlpGradients g;
    g.w1.assign(p.w1.size(), 0.0);
    g.b1.assign(p.b1.size(), 0.0);
    g.w2.assign(p.w2.size(), 0.0);

    std::vector<double> a1;
    for (std::size_t i = 0; i < n; ++i) {
        double prob = mlp_forward(p, z[i], &a1);
        double dz2 = (prob - static_cast<double>(y[i])) / static_cast<double>(n);
        g.b2 += dz2;
        for (int k = 0; k < h; ++k) {
            double ak = a1[static_cast<std::size_t>(k)];
            g.w2[static_cast<std::size_t>(k)] += dz2 * ak;
            double dz1 = dz2 * p.w2[static_cast<std::size_t>(k)] * (1.0 - ak * ak);
            g.b1[static_cast<std::size_t>(k)] += dz1;
            for (std::size_t j = 0; j < d; ++j) {
                g.w1[static_cast<std::size_t>(k) * d + j] += dz1 * z[i][j];
            }
        }
    }
    return g;
}

MlpParams init_mlp(std::size_t dim, int hidden, DetRng& rng) {
    MlpParams p;
    p.hidden = hidden;
    double s1 = 1.0 / std::sqrt(static_cast<double>(dim));
    double s2 = 1.0 / std::sqrt(static_cast<double>(hidden));
    p.w1.resize(static_cast<std::size_t>(hidden) * dim);
    p.b1.assign(static_cast<std::size_t>(hidden), 0.0);
    p.w2.resize(static_cast<std::size_t>(hidden));
    for (double& w : p.w1) w = rng.uniform(-s1, s1);
    for (double& w : p.w2) w = rng.uniform(-s2, s2);
    p.b2 = 0.0;
    return p;
}

MlpParams fit_mlp(const std::vector<std::vector<double>>& x,
                  const std::vector<int>& y, const TrainConfig& cfg) {
    std::vector<double> mean, scale;
    standardize_stats(x, mean, scale);
    std::vector<std::vector<double>> z = x;
    for (auto& row : z) {
        for (std::size_t j = 0; j < row.size(); ++j) {
            row[j] = (row[j] - mean[j]) / scale[j];
        }
    }

    DetRng rng(derive_seed(cfg.seed, "mlp-init", 0));
    MlpParams p = init_mlp(x[0].size(), cfg.mlp_hidden, rng);
    for (int epoch = 0; epoch < cfg.mlp_epochs; ++epoch) {
        MlpGradients g = mlp_gradients(p, z, y);
        for (std::size_t i = 0; i < p.w1.size(); ++i) p.w1[i] -= cfg.mlp_learning_rate * g.w1[i];
        for (std::size_t i = 0; i < p.b1.size(); ++i) p.b1[i] -= cfg.mlp_learning_rate * g.b1[i];
        for (std::size_t i = 0; i < p.w2.size(); ++i) p.w2[i] -= cfg.mlp_learning_rate * g.w2[i];
        p.b2 -= cfg.mlp_learning_rate * g.b2;
    }
    p.mean = std::move(mean);
    p.scale = std::move(scale);
    return p;
}

double predict_mlp(const MlpParams& p, std::span<const double> x) {
    std::vector<double> z(x.size());
    for (std::size_t j = 0; j < x.size(); ++j) {
        z[j] = (x[j] - p.mean[j]) / p.scale[j];
    }
    return mlp_forward(p, z);
}

constexpr std::array<ModelKind, 4> kMetaBaseKinds = {
    ModelKind::RandomForest, ModelKind::GradientBoosting,
    ModelKind::LogisticWeighted, ModelKind::Mlp};

}  // namespace

void TrainConfig::validate() const {
    if (rf_trees < 1 || rf_max_depth < 1 || gb_rounds < 1 || gb_max_depth < 1 ||
        mlp_hidden < 1 || mlp_epochs < 1 || folds < 2) {
        throw ValidationError("TrainConfig: counts must be positive (folds >= 2)");
    }
    if (rf_features_per_split < 0) {
        throw ValidationError("TrainConfig: rf_features_per_split must be >= 0");
    }
    if (!(gb_learning_rate > 0) || !(mlp_learning_rate > 0)) {
        throw ValidationError("TrainConfig: learning rates must be positive");
    }
}

std::string to_string(ModelKind k) {
    switch (k) {
        case ModelKind::RandomForest: return "random_forest";
        case ModelKind::GradientBoosting: return "gradient_boosting";
        case ModelKind::LogisticWeighted: return "logistic_weighted";
        case ModelKind::Mlp: return "mlp";
        case ModelKind::MetaEnsemble: return "meta_ensemble";
    }
    throw ValidationError("unknown model kind");
}

ModelKind model_kind_from_string(const std::string& s) {
    if (s == "random_forest" || s == "rf") return ModelKind::RandomForest;
    if (s == "gradient_boosting" || s == "gb") return ModelKind::GradientBoosting;
    if (s == "logistic_weighted" || s == "logistic") return ModelKind::LogisticWeighted;
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "meta_ensemble" || s == "meta") return ModelKind::MetaEnsemble;
    throw ValidationError("unknown model kind: " + s);
}

namespace detail {

LinearParams fit_logistic(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y) {
    const std::size_t n = x.size(), d = x[0].size();
    LinearParams p;
    standardize_stats(x, p.mean, p.scale);
    std::vector<std::vector<double>> z = x;
    for (auto& row : z) {
        for (std::size_t j = 0; j < d; ++j) row[j] = (row[j] - p.mean[j]) / p.scale[j];
    }

    p.weights.assign(d, 0.0);
    p.bias = 0.0;
    constexpr int kIters = 1000;
    constexpr double kLr = 0.5;
    std::vector<double> grad(d);
    for (int it = 0; it < kIters; ++it) {
        std::fill(grad.begin(), grad.end(), 0.0);
        double grad_b = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double zi = p.bias;
            for (std::size_t j = 0; j < d; ++j) zi += p.weights[j] * z[i][j];
            double err = (sigmoid(zi) - static_cast<double>(y[i])) /
                         static_cast<double>(n);
            grad_b += err;
            for (std::size_t j = 0; j < d; ++j) grad[j] += err * z[i][j];
        }
        for (std::size_t j = 0; j < d; ++j) p.weights[j] -= kLr * grad[j];
        p.bias -= kLr * grad_b;
    }
    return p;
}

double predict_linear(const LinearParams& p, std::span<const double> x) {
    double z = p.bias;
    for (std::size_t j = 0; j < x.size(); ++j) {
        double v = p.mean.empty() ? x[j] : (x[j] - p.mean[j]) / p.scale[j];
        z += p.weights[j] * v;
    }
    return sigmoid(z);
}

}  // namespace detail

TrainedModel train(ModelKind kind, const FeatureMatrix& matrix,
                   const TrainConfig& cfg) {
    check_trainable(kind, matrix, cfg);

    TrainedModel m;
    m.kind = kind;
    m.variant = matrix.variant;
    m.feature_names = matrix.names;
    m.train_seed = cfg.seed;

    switch (kind) {
        case ModelKind::RandomForest: {
            m.feature_importance.assign(matrix.dim(), 0.0);
            m.forest_trees = detail::fit_forest(matrix.rows, matrix.labels, cfg,
                                                &m.feature_importance);
            break;
        }
        case ModelKind::GradientBoosting: {
            m.feature_importance.assign(matrix.dim(), 0.0);
            m.boost = detail::fit_boosting(matrix.rows, matrix.labels, cfg,
                                           &m.feature_importance, nullptr);
            break;
        }
        case ModelKind::LogisticWeighted: {
            m.linear = detail::fit_logistic(matrix.rows, matrix.labels);
            break;
        }
        case ModelKind::Mlp: {
            m.mlp = fit_mlp(matrix.rows, matrix.labels, cfg);
            break;
        }
        case ModelKind::MetaEnsemble: {
            // combiner learns only from out-of-fold base probabilities
            FoldAssignment folds =
                stratified_folds_from_labels(matrix.labels, cfg.folds, cfg.seed);
            std::vector<std::vector<double>> meta_x(
                matrix.size(), std::vector<double>(kMetaBaseKinds.size()));
            for (std::size_t k = 0; k < kMetaBaseKinds.size(); ++k) {
                auto oof = oof_predictions(kMetaBaseKinds[k], matrix, folds, cfg);
                for (std::size_t i = 0; i < oof.size(); ++i) {
                    meta_x[i][k] = oof[i].first;
                }
            }
            m.meta_combiner = detail::fit_logistic(meta_x, matrix.labels);
            for (ModelKind base_kind : kMetaBaseKinds) {
                m.meta_base.push_back(train(base_kind, matrix, cfg));
            }
            break;
        }
    }
    return m;
}

double TrainedModel::predict_proba(std::span<const double> features) const {
    if (features.size() != feature_names.size()) {
        std::string names;
        for (const auto& n : feature_names) {
            if (!names.empty()) names += ", ";
            names += n;
        }
        throw DimensionError("predict_proba: got " + std::to_string(features.size()) +
                             " features, model expects [" + names + "]");
    }
    switch (kind) {
        case ModelKind::RandomForest: {
            double acc = 0.0;
            for (const Tree& t : forest_trees) acc += t.predict(features);
            return acc / static_cast<double>(forest_trees.size());
        }
        case ModelKind::GradientBoosting: {
            double score = boost.base_score;
            for (const Tree& t : boost.trees) {
                score += boost.learning_rate * t.predict(features);
            }
            return sigmoid(score);
        }
        case ModelKind::LogisticWeighted:
            return detail::predict_linear(linear, features);
        case ModelKind::Mlp:
            return predict_mlp(mlp, features);
        case ModelKind::MetaEnsemble: {
            std::vector<double> base_probs;
            base_probs.reserve(meta_base.size());
            for (const TrainedModel& b : meta_base) {
                base_probs.push_back(b.predict_proba(features));
            }
            return detail::predict_linear(meta_combiner, base_probs);
        }
    }
    throw ValidationError("unknown model kind");
}

std::vector<std::pair<double, int>> oof_predictions(ModelKind kind,
                                                    const FeatureMatrix& matrix,
                                                    const FoldAssignment& folds,
                                                    const TrainConfig& cfg) {
    if (folds.fold_index.size() != matrix.size()) {
        throw DataError("fold assignment does not cover the matrix");
    }
    for (int f : folds.fold_index) {
        if (f < 0 || f >= folds.k) throw DataError("fold index out of range");
    }

    std::vector<std::pair<double, int>> out(matrix.size());
    for (int f = 0; f < folds.k; ++f) {
        FeatureMatrix sub;
        sub.variant = matrix.variant;
        sub.names = matrix.names;
        std::vector<std::size_t> holdout;
        for (std::size_t i = 0; i < matrix.size(); ++i) {
            if (folds.fold_index[i] == f) {
                holdout.push_back(i);
            } else {
                sub.rows.push_back(matrix.rows[i]);
                sub.labels.push_back(matrix.labels[i]);
            }
        }
        TrainConfig fold_cfg = cfg;
        fold_cfg.seed = derive_seed(cfg.seed, "oof-fold", static_cast<std::uint64_t>(f));
        TrainedModel model = train(kind, sub, fold_cfg);
        for (std::size_t i : holdout) {
            out[i] = {model.predict_proba(matrix.rows[i]), matrix.labels[i]};
        }
    }
    return out;
}

std::vector<double> gb_training_loss_curve(const FeatureMatrix& matrix,
                                           const TrainConfig& cfg) {
    check_trainable(ModelKind::GradientBoosting, matrix, cfg);
    std::vector<double> curve;
    detail::fit_boosting(matrix.rows, matrix.labels, cfg, nullptr, &curve);
    return curve;
}

double mlp_gradient_check(std::uint64_t seed, int dim, int hidden, int samples) {
    DetRng rng(derive_seed(seed, "gradcheck", 0));
    std::vector<std::vector<double>> z(static_cast<std::size_t>(samples),
                                       std::vector<double>(static_cast<std::size_t>(dim)));
    std::vector<int> y(static_cast<std::size_t>(samples));
    for (auto& row : z) {
        for (double& v : row) v = rng.normal();
    }
    for (int& v : y) v = rng.uniform() < 0.5 ? 0 : 1;

    MlpParams p = init_mlp(static_cast<std::size_t>(dim), hidden, rng);
    MlpGradients g = mlp_gradients(p, z, y);

    // flatten parameter/gradient views
    std::vector<double*> params;
    std::vector<double> analytic;
    for (std::size_t i = 0; i < p.w1.size(); ++i) { params.push_back(&p.w1[i]); analytic.push_back(g.w1[i]); }
    for (std::size_t i = 0; i < p.b1.size(); ++i) { params.push_back(&p.b1[i]); analytic.push_back(g.b1[i]); }
    for (std::size_t i = 0; i < p.w2.size(); ++i) { params.push_back(&p.w2[i]); analytic.push_back(g.w2[i]); }
    params.push_back(&p.b2);
    analytic.push_back(g.b2);

    constexpr double kStep = 1e-5;
    double worst = 0.0;
    for (std::size_t i = 0; i < params.size(); ++i) {
        double saved = *params[i];
        *params[i] = saved + kStep;
        double up = mlp_loss(p, z, y);
        *params[i] = saved - kStep;
        double down = mlp_loss(p, z, y);
        *params[i] = saved;
        double fd = (up - down) / (2.0 * kStep);
        double denom = std::max({1e-8, std::abs(analytic[i]) + std::abs(fd)});
        worst = std::max(worst, std::abs(analytic[i] - fd) / denom);
    }
    return worst;
}

namespace {

json tree_to_json(const Tree& t) {
    json nodes = json::array();
    for (const TreeNode& n : t.nodes) {
        nodes.push_back({n.feature, n.threshold, n.left, n.right, n.value});
    }
    return nodes;
}

Tree tree_from_json(const json& j) {
    Tree t;
    for (const auto& n : j) {
        t.nodes.push_back({n.at(0).get<int>(), n.at(1).get<double>(),
                           n.at(2).get<int>(), n.at(3).get<int>(),
                           n.at(4).get<double>()});
    }
    if (t.nodes.empty()) throw ModelFormatError("tree with no nodes");
    return t;
}

json linear_to_json(const LinearParams& p) {
    return {{"weights", p.weights}, {"bias", p.bias},
            {"mean", p.mean}, {"scale", p.scale}};
}

LinearParams linear_from_json(const json& j) {
    LinearParams p;
    p.weights = j.at("weights").get<std::vector<double>>();
    p.bias = j.at("bias").get<double>();
    p.mean = j.at("mean").get<std::vector<double>>();
    p.scale = j.at("scale").get<std::vector<double>>();
    return p;
}

json model_to_json(const TrainedModel& m) {
    json j;
    j["format_version"] = m.format_version;
    j["kind"] = to_string(m.kind);
    j["variant"] = to_string(m.variant);
    j["feature_names"] = m.feature_names;
    j["train_seed"] = m.train_seed;

    json params;
    switch (m.kind) {
        case ModelKind::RandomForest: {
            json trees = json::array();
            for (const Tree& t : m.forest_trees) trees.push_back(tree_to_json(t));
            params["trees"] = trees;
            params["feature_importance"] = m.feature_importance;
            break;
        }
        case ModelKind::GradientBoosting: {
            json trees = json::array();
            for (const Tree& t : m.boost.trees) trees.push_back(tree_to_json(t));
            params["base_score"] = m.boost.base_score;
            params["learning_rate"] = m.boost.learning_rate;
            params["trees"] = trees;
            params["feature_importance"] = m.feature_importance;
            break;
        }
        case ModelKind::LogisticWeighted:
            params = linear_to_json(m.linear);
            break;
        case ModelKind::Mlp:
            params = {{"hidden", m.mlp.hidden}, {"w1", m.mlp.w1},
                      {"b1", m.mlp.b1},         {"w2", m.mlp.w2},
                      {"b2", m.mlp.b2},         {"mean", m.mlp.mean},
                      {"scale", m.mlp.scale}};
            break;
        case ModelKind::MetaEnsemble: {
            json base = json::array();
            for (const TrainedModel& b : m.meta_base) base.push_back(model_to_json(b));
            params["base_models"] = base;
            params["combiner"] = linear_to_json(m.meta_combiner);
            break;
        }
    }
    j["parameters"] = params;
    return j;
}

TrainedModel model_from_json(const json& j) {
    TrainedModel m;
    m.format_version = j.at("format_version").get<std::string>();
    if (m.format_version != kModelFormatVersion) {
        throw ModelFormatError("incompatible model format version '" +
                               m.format_version + "' (expected '" +
                               kModelFormatVersion + "')");
    }
    m.kind = model_kind_from_string(j.at("kind").get<std::string>());
    m.variant = feature_variant_from_string(j.at("variant").get<std::string>());
    m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    m.train_seed = j.at("train_seed").get<std::uint64_t>();

    const json& params = j.at("parameters");
    switch (m.kind) {
        case ModelKind::RandomForest:
            for (const auto& t : params.at("trees")) {
                m.forest_trees.push_back(tree_from_json(t));
            }
            m.feature_importance =
                params.at("feature_importance").get<std::vector<double>>();
            break;
        case ModelKind::GradientBoosting:
            m.boost.base_score = params.at("base_score").get<double>();
            m.boost.learning_rate = params.at("learning_rate").get<double>();
            for (const auto& t : params.at("trees")) {
                m.boost.trees.push_back(tree_from_json(t));
            }
            m.feature_importance =
                params.at("feature_importance").get<std::vector<double>>();
            break;
        case ModelKind::LogisticWeighted:
            m.linear = linear_from_json(params);
            break;
        case ModelKind::Mlp:
            m.mlp.hidden = params.at("hidden").get<int>();
            m.mlp.w1 = params.at("w1").get<std::vector<double>>();
            m.mlp.b1 = params.at("b1").get<std::vector<double>>();
            m.mlp.w2 = params.at("w2").get<std::vector<double>>();
            m.mlp.b2 = params.at("b2").get<double>();
            m.mlp.mean = params.at("mean").get<std::vector<double>>();
            m.mlp.scale = params.at("scale").get<std::vector<double>>();
            break;
        case ModelKind::MetaEnsemble:
            for (const auto& b : params.at("base_models")) {
                m.meta_base.push_back(model_from_json(b));
            }
            m.meta_combiner = linear_from_json(params.at("combiner"));
            break;
    }
    return m;
}

}  // namespace

std::string serialize(const TrainedModel& model) {
    return model_to_json(model).dump(2) + "\n";
}

TrainedModel deserialize(const std::string& bytes) {
    json j;
    try {
        j = json::parse(bytes);
    } catch (const json::parse_error& e) {
        throw ModelFormatError(std::string("model file is not valid JSON: ") + e.what());
    }
    try {
        return model_from_json(j);
    } catch (const ModelFormatError&) {
        throw;
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("model file is malformed: ") + e.what());
    }
}

}  // namespace pcib::ml
