#pragma once

#include <span>
#include <string>
#include <unordered_set>
#include <vector>

#include "pcib/errors.hpp"

namespace pcib::math {

/// Discrete probability distribution. Weights are non-negative, sum to 1
/// within 1e-9, and there are at least two of them.
class ProbDist {
public:
    explicit ProbDist(std::vector<double> weights);

    const std::vector<double>& weights() const { return weights_; }
    std::size_t size() const { return weights_.size(); }
    double operator[](std::size_t i) const { return weights_[i]; }

private:
    std::vector<double> weights_;
};

/// Base-2 Jensen-Shannon divergence; symmetric, 0 iff p == q, bounded by 1.
double js_divergence(const ProbDist& p, const ProbDist& q);

/// |a∩b| / |a∪b|. Two empty sets compare equal (returns 1).
double jaccard_similarity(const std::unordered_set<std::string>& a,
                          const std::unordered_set<std::string>& b);

/// n / Σ(1/c_i); every component must be strictly positive.
double harmonic_mean(std::span<const double> components);

/// (Π c_i)^(1/n); every component must be strictly positive.
double geometric_mean(std::span<const double> components);

/// Lowercase alphanumeric word set of a text; the token universe for
/// Jaccard-based signals.
std::unordered_set<std::string> word_set(const std::string& text);

}  // namespace pcib::math
