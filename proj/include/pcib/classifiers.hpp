#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "pcib/core.hpp"
#include "pcib/rng.hpp"

namespace pcib::ml {

enum class ModelKind { RandomForest, GradientBoosting, LogisticWeighted, Mlp, MetaEnsemble };

std::string to_string(ModelKind k);
ModelKind model_kind_from_string(const std::string& s);

inline constexpr const char* kModelFormatVersion = "pcib-model-v1";

struct TrainConfig {
    std::uint64_t seed = 0;
    int rf_trees = 200;
    int rf_max_depth = 6;
    int rf_features_per_split = 0;  // 0 = sqrt(d) rounded
    int gb_rounds = 100;
    double gb_learning_rate = 0.1;
    int gb_max_depth = 3;
    int mlp_hidden = 16;
    int mlp_epochs = 500;
    double mlp_learning_rate = 0.01;
    int folds = 5;

    void validate() const;
};

/// Flat binary tree. feature == -1 marks a leaf carrying `value`
/// (class-1 fraction for classification, additive score for boosting).
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
};

struct Tree {
    std::vector<TreeNode> nodes;
    double predict(std::span<const double> x) const;
};

struct ForestParams {
    std::vector<Tree> trees;
    std::vector<double> feature_importance;  // total Gini decrease, normalized
};

struct BoostParams {
    double base_score = 0.0;
    double learning_rate = 0.1;
    std::vector<Tree> trees;
    std::vector<double> feature_importance;
};

struct LinearParams {
    std::vector<double> weights;
    double bias = 0.0;
    std::vector<double> mean;   // feature standardization
    std::vector<double> scale;
};

struct MlpParams {
    int hidden = 0;
    std::vector<double> w1;  // hidden x dim, row-major
    std::vector<double> b1;
    std::vector<double> w2;
    double b2 = 0.0;
    std::vector<double> mean;
    std::vector<double> scale;
};

struct TrainedModel {
    ModelKind kind = ModelKind::RandomForest;
    FeatureVariant variant = FeatureVariant::Base;
    std::vector<std::string> feature_names;
    std::uint64_t train_seed = 0;
    std::string format_version = kModelFormatVersion;

    std::vector<Tree> forest_trees;          // RandomForest
    BoostParams boost;                       // GradientBoosting
    LinearParams linear;                     // LogisticWeighted
    MlpParams mlp;                           // Mlp
    std::vector<double> feature_importance;  // tree kinds
    std::vector<TrainedModel> meta_base;     // MetaEnsemble: [rf, gb, logistic, mlp]
    LinearParams meta_combiner;

    /// Probability of class 1. Feature count must match feature_names.
    double predict_proba(std::span<const double> features) const;
};

/// Trains one model kind on the matrix. Deterministic given
/// (matrix, cfg.seed). Requires both classes and >= 2*folds examples.
TrainedModel train(ModelKind kind, const FeatureMatrix& matrix, const TrainConfig& cfg);

/// Out-of-fold probabilities: each example is scored by a model that did
/// not train on its fold. Returned in matrix row order as (prob, label).
std::vector<std::pair<double, int>> oof_predictions(ModelKind kind,
                                                    const FeatureMatrix& matrix,
                                                    const FoldAssignment& folds,
                                                    const TrainConfig& cfg);

/// Self-describing text serialization (format "pcib-model-v1").
/// Round-trips bit-exactly.
std::string serialize(const TrainedModel& model);
TrainedModel deserialize(const std::string& bytes);

/// Compares analytic MLP gradients against central finite differences
/// (step 1e-5) on a random small net; returns the max relative deviation.
double mlp_gradient_check(std::uint64_t seed, int dim = 5, int hidden = 4,
                          int samples = 10);

/// Training-set logistic loss per boosting round (index 0 = base score
/// only). Test hook for the monotone-loss invariant.
std::vector<double> gb_training_loss_curve(const FeatureMatrix& matrix,
                                           const TrainConfig& cfg);

namespace detail {

/// Grows one classification tree on the given rows (Gini splits,
/// per-split feature subsampling when mtry < dim, ties broken by lowest
/// feature index then lowest threshold). The RF building block; exposed
/// so tests can drive it with fixed bootstraps.
Tree grow_classification_tree(const std::vector<std::vector<double>>& x,
                              const std::vector<int>& y,
                              const std::vector<std::size_t>& rows,
                              int max_depth, int mtry, DetRng& rng,
                              std::vector<double>* importance);

LinearParams fit_logistic(const std::vector<std::vector<double>>& x,
                          const std::vector<int>& y);

double predict_linear(const LinearParams& p, std::span<const double> x);

std::vector<Tree> fit_forest(const std::vector<std::vector<double>>& x,
                             const std::vector<int>& y, const TrainConfig& cfg,
                             std::vector<double>* importance);

BoostParams fit_boosting(const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y, const TrainConfig& cfg,
                         std::vector<double>* importance,
                         std::vector<double>* loss_curve);

}  // namespace detail

}  // namespace pcib::ml
