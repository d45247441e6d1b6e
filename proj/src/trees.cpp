#include <algorithm>
#include <cmath>
#include <numeric>

#include "pcib/classifiers.hpp"

namespace pcib::ml {

double Tree::predict(std::span<const double> x) const {
    int i = 0;
    while (nodes[static_cast<std::size_t>(i)].feature >= 0) {
        const TreeNode& n = nodes[static_cast<std::size_t>(i)];
        i = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(i)].value;
}

namespace detail {

namespace {

double gini(long pos, long total) {
    if (total == 0) return 0.0;
    double p = static_cast<double>(pos) / static_cast<double>(total);
    return 2.0 * p * (1.0 - p);
}

struct Split {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

// candidate features: mtry distinct indices, scanned in ascending order so
// equal gains resolve to the lowest feature index
std::vector<int> sample_features(int dim, int mtry, DetRng& rng) {
    std::vector<int> all(static_cast<std::size_t>(dim));
    std::iota(all.begin(), all.end(), 0);
    if (mtry >= dim) return all;
    for (int i = 0; i < mtry; ++i) {
        std::size_t j = static_cast<std::size_t>(i) +
                        static_cast<std::size_t>(rng.uniform_index(
                            static_cast<std::uint64_t>(dim - i)));
        std::swap(all[static_cast<std::size_t>(i)], all[j]);
    }
    all.resize(static_cast<std::size_t>(mtry));
    std::sort(all.begin(), all.end());
    return all;
}

Split best_gini_split(const std::vector<std::vector<double>>& x,
                      const std::vector<int>& y,
                      const std::vector<std::size_t>& rows,
                      const std::vector<int>& features) {
    const long n = static_cast<long>(rows.size());
    long pos = 0;
    for (std::size_t r : rows) pos += y[r];
    const double parent = gini(pos, n);

    Split best;
    std::vector<std::pair<double, int>> vals(rows.size());
    for (int f : features) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            vals[i] = {x[rows[i]][static_cast<std::size_t>(f)], y[rows[i]]};
        }
        std::sort(vals.begin(), vals.end());

        long left_n = 0, left_pos = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            ++left_n;
            left_pos += vals[i].second;
            if (vals[i].first == vals[i + 1].first) continue;
            long right_n = n - left_n;
            double weighted =
                (static_cast<double>(left_n) * gini(left_pos, left_n) +
                 static_cast<double>(right_n) * gini(pos - left_pos, right_n)) /
                static_cast<double>(n);
            double gain = parent - weighted;
            if (gain > best.gain) {  // strict: earliest (feature, threshold) wins ties
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

struct TreeBuilder {
    const std::vector<std::vector<double>>& x;
    const std::vector<int>& y;
    int max_depth;
    int mtry;
    DetRng& rng;
    std::vector<double>* importance;
    std::size_t n_total;
    Tree tree;

    int build(std::vector<std::size_t> rows, int depth) {
        long pos = 0;
        for (std::size_t r : rows) pos += y[r];
        const long n = static_cast<long>(rows.size());

        auto make_leaf = [&]() {
            tree.nodes.push_back(
                {-1, 0.0, -1, -1,
                 static_cast<double>(pos) / static_cast<double>(n)});
            return static_cast<int>(tree.nodes.size() - 1);
        };

        if (depth >= max_depth || pos == 0 || pos == n || n < 2) return make_leaf();

        auto features = sample_features(static_cast<int>(x[0].size()), mtry, rng);
        Split s = best_gini_split(x, y, rows, features);
        if (!s.found) return make_leaf();

        if (importance) {
            (*importance)[static_cast<std::size_t>(s.feature)] +=
                s.gain * static_cast<double>(n) / static_cast<double>(n_total);
        }

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (x[r][static_cast<std::size_t>(s.feature)] < s.threshold ? left : right)
                .push_back(r);
        }
        rows.clear();
        rows.shrink_to_fit();

        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({s.feature, s.threshold, -1, -1, 0.0});
        int l = build(std::move(left), depth + 1);
        int r = build(std::move(right), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = l;
        tree.nodes[static_cast<std::size_t>(idx)].right = r;
        return idx;
    }
};

}  // namespace

Tree grow_classification_tree(const std::vector<std::vector<double>>& x,
                              const std::vector<int>& y,
                              const std::vector<std::size_t>& rows,
                              int max_depth, int mtry, DetRng& rng,
                              std::vector<double>* importance) {
    TreeBuilder b{x, y, max_depth, mtry, rng, importance, rows.size(), {}};
    b.build(rows, 0);
    return std::move(b.tree);
}

namespace {

struct RegressionSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;  // sum-of-squares improvement
};

RegressionSplit best_sse_split(const std::vector<std::vector<double>>& x,
                               const std::vector<double>& target,
                               const std::vector<std::size_t>& rows) {
    const long n = static_cast<long>(rows.size());
    double total = 0.0;
    for (std::size_t r : rows) total += target[r];
    const double parent_score = total * total / static_cast<double>(n);

    RegressionSplit best;
    std::vector<std::pair<double, double>> vals(rows.size());
    const int dim = static_cast<int>(x[0].size());
    for (int f = 0; f < dim; ++f) {
        for (std::size_t i = 0; i < rows.size(); ++i) {
            vals[i] = {x[rows[i]][static_cast<std::size_t>(f)], target[rows[i]]};
        }
        std::sort(vals.begin(), vals.end());

        double left_sum = 0.0;
        long left_n = 0;
        for (std::size_t i = 0; i + 1 < vals.size(); ++i) {
            left_sum += vals[i].second;
            ++left_n;
            if (vals[i].first == vals[i + 1].first) continue;
            long right_n = n - left_n;
            double right_sum = total - left_sum;
            double score = left_sum * left_sum / static_cast<double>(left_n) +
                           right_sum * right_sum / static_cast<double>(right_n);
            double gain = score - parent_score;
            if (gain > best.gain + 1e-12) {
                best.found = true;
                best.feature = f;
                best.threshold = 0.5 * (vals[i].first + vals[i + 1].first);
                best.gain = gain;
            }
        }
    }
    return best;
}

struct RegTreeBuilder {
    const std::vector<std::vector<double>>& x;
    const std::vector<double>& residual;
    const std::vector<double>& hessian;
    int max_depth;
    std::vector<double>* importance;
    std::size_t n_total;
    Tree tree;

    // Newton leaf value, clamped for stability
    double leaf_value(const std::vector<std::size_t>& rows) const {
        double num = 0.0, den = 0.0;
        for (std::size_t r : rows) {
            num += residual[r];
            den += hessian[r];
        }
        double v = num / std::max(den, 1e-12);
        return std::clamp(v, -4.0, 4.0);
    }

    int build(std::vector<std::size_t> rows, int depth) {
        if (depth >= max_depth || rows.size() < 2) {
            tree.nodes.push_back({-1, 0.0, -1, -1, leaf_value(rows)});
            return static_cast<int>(tree.nodes.size() - 1);
        }
        RegressionSplit s = best_sse_split(x, residual, rows);
        if (!s.found) {
            tree.nodes.push_back({-1, 0.0, -1, -1, leaf_value(rows)});
            return static_cast<int>(tree.nodes.size() - 1);
        }
        if (importance) {
            (*importance)[static_cast<std::size_t>(s.feature)] +=
                s.gain / static_cast<double>(n_total);
        }
        std::vector<std::size_t> left, right;
        for (std::size_t r : rows) {
            (x[r][static_cast<std::size_t>(s.feature)] < s.threshold ? left : right)
                .push_back(r);
        }
        int idx = static_cast<int>(tree.nodes.size());
        tree.nodes.push_back({s.feature, s.threshold, -1, -1, 0.0});
        int l = build(std::move(left), depth + 1);
        int r = build(std::move(right), depth + 1);
        tree.nodes[static_cast<std::size_t>(idx)].left = l;
        tree.nodes[static_cast<std::size_t>(idx)].right = r;
        return idx;
    }
};

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

}  // namespace

std::vector<Tree> fit_forest(const std::vector<std::vector<double>>& x,
                             const std::vector<int>& y, const TrainConfig& cfg,
                             std::vector<double>* importance) {
    const std::size_t n = x.size();
    const int dim = static_cast<int>(x[0].size());
    int mtry = cfg.rf_features_per_split > 0
                   ? cfg.rf_features_per_split
                   : std::max(1, static_cast<int>(std::lround(std::sqrt(
                                  static_cast<double>(dim)))));

    std::vector<Tree> trees;
    trees.reserve(static_cast<std::size_t>(cfg.rf_trees));
    for (int t = 0; t < cfg.rf_trees; ++t) {
        // per-tree stream so trees could be grown in any order
        std::uint64_t tree_seed =
            fnv1a64_combine(fnv1a64("rf-tree"), cfg.seed);
        tree_seed = fnv1a64_combine(tree_seed, static_cast<std::uint64_t>(t));
        DetRng rng(tree_seed);

        std::vector<std::size_t> bootstrap(n);
        for (std::size_t i = 0; i < n; ++i) {
            bootstrap[i] = static_cast<std::size_t>(rng.uniform_index(n));
        }
        trees.push_back(grow_classification_tree(x, y, bootstrap, cfg.rf_max_depth,
                                                 mtry, rng, importance));
    }
    if (importance) {
        double total = std::accumulate(importance->begin(), importance->end(), 0.0);
        if (total > 0) {
            for (double& v : *importance) v /= total;
        }
    }
    return trees;
}

BoostParams fit_boosting(const std::vector<std::vector<double>>& x,
                         const std::vector<int>& y, const TrainConfig& cfg,
                         std::vector<double>* importance,
                         std::vector<double>* loss_curve) {
    const std::size_t n = x.size();
    double pos = 0.0;
    for (int v : y) pos += v;
    double p0 = std::clamp(pos / static_cast<double>(n), 1e-6, 1.0 - 1e-6);

    BoostParams out;
    out.base_score = std::log(p0 / (1.0 - p0));
    out.learning_rate = cfg.gb_learning_rate;

    std::vector<double> score(n, out.base_score);
    std::vector<double> residual(n), hessian(n);
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);

    auto log_loss = [&]() {
        double acc = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double p = std::clamp(sigmoid(score[i]), 1e-12, 1.0 - 1e-12);
            acc -= y[i] == 1 ? std::log(p) : std::log(1.0 - p);
        }
        return acc / static_cast<double>(n);
    };
    if (loss_curve) loss_curve->push_back(log_loss());

    for (int round = 0; round < cfg.gb_rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) {
            double p = sigmoid(score[i]);
            residual[i] = static_cast<double>(y[i]) - p;
            hessian[i] = std::max(p * (1.0 - p), 1e-12);
        }
        RegTreeBuilder b{x, residual, hessian, cfg.gb_max_depth, importance, n, {}};
        b.build(all, 0);
        Tree tree = std::move(b.tree);
        for (std::size_t i = 0; i < n; ++i) {
            score[i] += cfg.gb_learning_rate * tree.predict(x[i]);
        }
        out.trees.push_back(std::move(tree));
        if (loss_curve) loss_curve->push_back(log_loss());
    }
    if (importance) {
        double total = std::accumulate(importance->begin(), importance->end(), 0.0);
        if (total > 0) {
            for (double& v : *importance) v /= total;
        }
    }
    return out;
}

}  // namespace detail
}  // namespace pcib::ml
