#include "pcib/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include <json.hpp>

namespace pcib::metrics {

namespace {

struct ClassCounts {
    long n_pos = 0;
    long n_neg = 0;
};

ClassCounts check_scores_labels(const std::vector<double>& scores,
                                const std::vector<int>& labels,
                                bool need_both_classes) {
    if (scores.size() != labels.size()) {
        throw DimensionError("scores and labels differ in length");
    }
    if (scores.empty()) throw ValidationError("empty score list");
    ClassCounts c;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (!std::isfinite(scores[i])) throw DataError("non-finite score");
        if (labels[i] == 1) ++c.n_pos;
        else if (labels[i] == 0) ++c.n_neg;
        else throw ValidationError("labels must be 0 or 1");
    }
    if (need_both_classes && (c.n_pos == 0 || c.n_neg == 0)) {
        throw DataError("metric undefined: only one class present");
    }
    return c;
}

// indices sorted by descending score; stable so equal scores keep input order
std::vector<std::size_t> order_desc(const std::vector<double>& scores) {
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] > scores[b];
    });
    return idx;
}

}  // namespace

double auroc(const std::vector<double>& scores, const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, true);

    // midrank Mann-Whitney statistic
    std::vector<std::size_t> idx(scores.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
        return scores[a] < scores[b];
    });

    double pos_rank_sum = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) pos_rank_sum += avg_rank;
        }
        i = j;
    }
    double np = static_cast<double>(c.n_pos), nn = static_cast<double>(c.n_neg);
    double u = pos_rank_sum - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

double auroc_bruteforce(const std::vector<double>& scores,
                        const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, true);
    double credit = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        if (labels[i] != 1) continue;
        for (std::size_t j = 0; j < scores.size(); ++j) {
            if (labels[j] != 0) continue;
            if (scores[i] > scores[j]) credit += 1.0;
            else if (scores[i] == scores[j]) credit += 0.5;
        }
    }
    return credit / (static_cast<double>(c.n_pos) * static_cast<double>(c.n_neg));
}

double auprc(const std::vector<double>& scores, const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, false);
    if (c.n_pos == 0) throw DataError("auprc undefined without positives");

    auto idx = order_desc(scores);
    double ap = 0.0;
    long tp = 0, fp = 0;
    double prev_recall = 0.0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) ++tp; else ++fp;
        }
        double recall = static_cast<double>(tp) / static_cast<double>(c.n_pos);
        double precision = static_cast<double>(tp) / static_cast<double>(tp + fp);
        ap += (recall - prev_recall) * precision;
        prev_recall = recall;
        i = j;
    }
    return ap;
}

ConfusionMetrics confusion_at(const std::vector<double>& scores,
                              const std::vector<int>& labels, double threshold) {
    ClassCounts c = check_scores_labels(scores, labels, true);
    long tp = 0, fp = 0, tn = 0, fn = 0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
        bool pred = scores[i] >= threshold;
        if (labels[i] == 1) (pred ? tp : fn)++;
        else (pred ? fp : tn)++;
    }
    ConfusionMetrics m;
    m.sensitivity = static_cast<double>(tp) / static_cast<double>(c.n_pos);
    m.specificity = static_cast<double>(tn) / static_cast<double>(c.n_neg);
    m.accuracy = static_cast<double>(tp + tn) / static_cast<double>(scores.size());
    long pred_pos = tp + fp;
    if (pred_pos == 0 || tp == 0) {
        m.f1 = 0.0;  // no positive predictions (or none correct)
    } else {
        double precision = static_cast<double>(tp) / static_cast<double>(pred_pos);
        double recall = m.sensitivity;
        m.f1 = 2.0 * precision * recall / (precision + recall);
    }
    return m;
}

std::vector<RocPoint> roc_points(const std::vector<double>& scores,
                                 const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, true);
    auto idx = order_desc(scores);

    std::vector<RocPoint> pts;
    pts.push_back({0.0, 0.0, std::numeric_limits<double>::infinity()});
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) ++tp; else ++fp;
        }
        pts.push_back({static_cast<double>(fp) / static_cast<double>(c.n_neg),
                       static_cast<double>(tp) / static_cast<double>(c.n_pos),
                       scores[idx[i]]});
        i = j;
    }
    return pts;
}

std::vector<PrPoint> pr_points(const std::vector<double>& scores,
                               const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, false);
    if (c.n_pos == 0) throw DataError("pr curve undefined without positives");
    auto idx = order_desc(scores);

    std::vector<PrPoint> pts;
    long tp = 0, fp = 0;
    std::size_t i = 0;
    while (i < idx.size()) {
        std::size_t j = i;
        while (j < idx.size() && scores[idx[j]] == scores[idx[i]]) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (labels[idx[k]] == 1) ++tp; else ++fp;
        }
        pts.push_back({static_cast<double>(tp) / static_cast<double>(c.n_pos),
                       static_cast<double>(tp) / static_cast<double>(tp + fp),
                       scores[idx[i]]});
        i = j;
    }
    return pts;
}

YoudenResult youden_optimal(const std::vector<RocPoint>& points) {
    if (points.empty()) throw ValidationError("youden_optimal: empty curve");
    // J values that are equal as decimals can differ by one ulp; treat
    // near-equal J as a tie so the lower-fpr rule actually applies
    constexpr double kTieEps = 1e-9;
    YoudenResult best;
    best.j = -2.0;
    for (const auto& p : points) {
        double j = p.tpr - p.fpr;
        if (j > best.j + kTieEps || (j > best.j - kTieEps && p.fpr < best.fpr)) {
            best = {p.threshold, std::max(j, best.j), p.fpr, p.tpr};
        }
    }
    return best;
}

double trapezoid_auc(const std::vector<std::pair<double, double>>& points) {
    if (points.size() < 2) throw ValidationError("trapezoid_auc: needs >= 2 points");
    double auc = 0.0;
    for (std::size_t i = 1; i < points.size(); ++i) {
        const auto& [x0, y0] = points[i - 1];
        const auto& [x1, y1] = points[i];
        if (x1 < x0) throw ValidationError("trapezoid_auc: points must be sorted by x");
        if (x0 < 0.0 || x1 > 1.0) throw ValidationError("trapezoid_auc: x must be in [0,1]");
        auc += (x1 - x0) * 0.5 * (y0 + y1);
    }
    return auc;
}

EvalReport evaluate_scores(const std::vector<double>& scores,
                           const std::vector<int>& labels) {
    ClassCounts c = check_scores_labels(scores, labels, true);

    EvalReport r;
    r.n_pos = c.n_pos;
    r.n_neg = c.n_neg;
    r.auroc = auroc(scores, labels);
    r.auprc = auprc(scores, labels);
    r.roc_points = roc_points(scores, labels);
    r.pr_points = pr_points(scores, labels);

    YoudenResult y = youden_optimal(r.roc_points);
    // +inf threshold (the (0,0) anchor) is not operable; fall back to the
    // first real threshold if the curve is fully degenerate
    if (std::isinf(y.threshold) && r.roc_points.size() > 1) {
        y.threshold = r.roc_points[1].threshold;
        y.fpr = r.roc_points[1].fpr;
        y.tpr = r.roc_points[1].tpr;
        y.j = y.tpr - y.fpr;
    }
    r.optimal_threshold = y.threshold;
    r.youden_j = y.j;

    ConfusionMetrics at_opt = confusion_at(scores, labels, r.optimal_threshold);
    r.f1 = at_opt.f1;
    r.sensitivity = at_opt.sensitivity;
    r.specificity = at_opt.specificity;
    r.accuracy = at_opt.accuracy;
    r.f1_at_half = confusion_at(scores, labels, 0.5).f1;
    return r;
}

std::string EvalReport::to_json(int indent) const {
    nlohmann::json j;
    j["auroc"] = auroc;
    j["auprc"] = auprc;
    j["f1"] = f1;
    j["f1_at_half"] = f1_at_half;
    j["sensitivity"] = sensitivity;
    j["specificity"] = specificity;
    j["accuracy"] = accuracy;
    j["optimal_threshold"] = optimal_threshold;
    j["youden_j"] = youden_j;
    j["n_pos"] = n_pos;
    j["n_neg"] = n_neg;
    auto roc = nlohmann::json::array();
    for (const auto& p : roc_points) {
        roc.push_back({{"fpr", p.fpr}, {"tpr", p.tpr},
                       {"threshold", std::isfinite(p.threshold)
                                         ? nlohmann::json(p.threshold)
                                         : nlohmann::json("inf")}});
    }
    j["roc_points"] = roc;
    auto pr = nlohmann::json::array();
    for (const auto& p : pr_points) {
        pr.push_back({{"recall", p.recall}, {"precision", p.precision},
                      {"threshold", p.threshold}});
    }
    j["pr_points"] = pr;
    return j.dump(indent);
}

namespace {
std::string fmt(double v) {
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::ostringstream out;
    out.precision(17);
    out << v;
    return out.str();
}
}  // namespace

std::string roc_csv(const std::vector<RocPoint>& points) {
    std::string out = "fpr,tpr,threshold\n";
    for (const auto& p : points) {
        out += fmt(p.fpr) + "," + fmt(p.tpr) + "," + fmt(p.threshold) + "\n";
    }
    return out;
}

std::string pr_csv(const std::vector<PrPoint>& points) {
    std::string out = "recall,precision,threshold\n";
    for (const auto& p : points) {
        out += fmt(p.recall) + "," + fmt(p.precision) + "," + fmt(p.threshold) + "\n";
    }
    return out;
}

}  // namespace pcib::metrics
