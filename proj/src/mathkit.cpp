#include "pcib/mathkit.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>

namespace pcib::math {

namespace {

constexpr double kSumTolerance = 1e-9;

// 0*log2(0) := 0
double xlog2x_ratio(double x, double m) {
    if (x <= 0.0) return 0.0;
    return x * std::log2(x / m);
}

}  // namespace

ProbDist::ProbDist(std::vector<double> weights) : weights_(std::move(weights)) {
    if (weights_.size() < 2) {
        throw ValidationError("ProbDist needs at least 2 weights");
    }
    double sum = 0.0;
    for (double w : weights_) {
        if (w < 0.0 || !std::isfinite(w)) {
            throw ValidationError("ProbDist weights must be finite and non-negative");
        }
        sum += w;
    }
    if (std::abs(sum - 1.0) > kSumTolerance) {
        throw ValidationError("ProbDist weights must sum to 1 (got " +
                              std::to_string(sum) + ")");
    }
}

double js_divergence(const ProbDist& p, const ProbDist& q) {
    if (p.size() != q.size()) {
        throw DimensionError("js_divergence: distributions have lengths " +
                             std::to_string(p.size()) + " and " +
                             std::to_string(q.size()));
    }
    double div = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        double m = 0.5 * (p[i] + q[i]);
        div += 0.5 * xlog2x_ratio(p[i], m) + 0.5 * xlog2x_ratio(q[i], m);
    }
    // guard fp drift at the boundaries
    return std::clamp(div, 0.0, 1.0);
}

double jaccard_similarity(const std::unordered_set<std::string>& a,
                          const std::unordered_set<std::string>& b) {
    if (a.empty() && b.empty()) return 1.0;
    std::size_t inter = 0;
    for (const auto& w : a) inter += b.count(w);
    std::size_t uni = a.size() + b.size() - inter;
    return static_cast<double>(inter) / static_cast<double>(uni);
}

double harmonic_mean(std::span<const double> components) {
    if (components.empty()) throw ValidationError("harmonic_mean: empty input");
    double inv_sum = 0.0;
    for (double c : components) {
        if (!(c > 0.0)) throw ValidationError("harmonic_mean: components must be > 0");
        inv_sum += 1.0 / c;
    }
    return static_cast<double>(components.size()) / inv_sum;
}

double geometric_mean(std::span<const double> components) {
    if (components.empty()) throw ValidationError("geometric_mean: empty input");
    double log_sum = 0.0;
    for (double c : components) {
        if (!(c > 0.0)) throw ValidationError("geometric_mean: components must be > 0");
        log_sum += std::log(c);
    }
    return std::exp(log_sum / static_cast<double>(components.size()));
}

std::unordered_set<std::string> word_set(const std::string& text) {
    std::unordered_set<std::string> words;
    std::string cur;
    for (unsigned char c : text) {
        if (std::isalnum(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            words.insert(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.insert(cur);
    return words;
}

}  // namespace pcib::math
