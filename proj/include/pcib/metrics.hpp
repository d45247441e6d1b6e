#pragma once

#include <limits>
#include <string>
#include <vector>

#include "pcib/errors.hpp"

namespace pcib::metrics {

struct RocPoint {
    double fpr = 0.0;
    double tpr = 0.0;
    double threshold = std::numeric_limits<double>::quiet_NaN();
};

struct PrPoint {
    double recall = 0.0;
    double precision = 0.0;
    double threshold = std::numeric_limits<double>::quiet_NaN();
};

struct ConfusionMetrics {
    double f1 = 0.0;
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
};

struct YoudenResult {
    double threshold = std::numeric_limits<double>::quiet_NaN();
    double j = 0.0;
    double fpr = 0.0;
    double tpr = 0.0;
};

struct EvalReport {
    double auroc = 0.0;
    double auprc = 0.0;
    double f1 = 0.0;           // at the Youden-optimal threshold
    double f1_at_half = 0.0;   // at the fixed 0.5 threshold, for comparison
    double sensitivity = 0.0;
    double specificity = 0.0;
    double accuracy = 0.0;
    double optimal_threshold = 0.0;
    double youden_j = 0.0;
    std::vector<RocPoint> roc_points;
    std::vector<PrPoint> pr_points;
    long n_pos = 0;
    long n_neg = 0;

    std::string to_json(int indent = 2) const;
};

/// Rank-statistic AUROC with ties credited 0.5; equals brute-force
/// pos/neg pair counting.
double auroc(const std::vector<double>& scores, const std::vector<int>& labels);

/// O(n^2) pair-counting AUROC. Test oracle for the rank-based route;
/// kept in the library so the acceptance suite can pit the two against
/// each other.
double auroc_bruteforce(const std::vector<double>& scores,
                        const std::vector<int>& labels);

/// Average precision (step-wise sum of precision times recall increments).
double auprc(const std::vector<double>& scores, const std::vector<int>& labels);

/// Metrics at a fixed threshold; prediction rule is score >= threshold.
ConfusionMetrics confusion_at(const std::vector<double>& scores,
                              const std::vector<int>& labels, double threshold);

/// ROC curve from (0,0) to (1,1), one point per distinct score, monotone
/// in fpr. Thresholds descend; the first point carries +inf.
std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels);

/// PR sweep over the same distinct thresholds, recall ascending.
std::vector<PrPoint> pr_points(const std::vector<double>& scores,
                               const std::vector<int>& labels);

/// Maximizes J = tpr - fpr; ties broken by lower fpr.
YoudenResult youden_optimal(const std::vector<RocPoint>& points);

/// Trapezoidal integral of a curve sorted by x, x in [0,1].
double trapezoid_auc(const std::vector<std::pair<double, double>>& points);

/// Full evaluation bundle.
EvalReport evaluate_scores(const std::vector<double>& scores,
                           const std::vector<int>& labels);

/// CSV exports: "fpr,tpr,threshold" / "recall,precision,threshold".
std::string roc_csv(const std::vector<RocPoint>& points);
std::string pr_csv(const std::vector<PrPoint>& points);

}  // namespace pcib::metrics
