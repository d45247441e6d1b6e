#pragma once

#include <string>
#include <utility>
#include <vector>

#include "pcib/errors.hpp"

namespace pcib {

/// One (question, context, answer) instance. Context may be empty;
/// question and answer may not.
struct QcaTriple {
    std::string id;
    std::string question;
    std::string context;
    std::string answer;

    void validate() const;
};

struct LabeledExample {
    QcaTriple triple;
    int label = 0;  // 1 = hallucination, 0 = factual
};

/// The eight extracted signals plus the two ESI composites.
struct SignalVector {
    double uptake = 0.0;             // U, nats/token, >= 0
    double stress = 0.0;             // S in [0,1]
    double conflict = 0.0;           // Cf in [0,1]
    double rationalization = 0.0;    // R in [0,1]
    double esi_harm = 0.0;           // (0,1]
    double esi_geo = 0.0;            // (0,1]
    double entity_uptake = 0.0;      // U_ent >= 0
    double context_adherence = 0.0;  // A_ctx in [0,1]
    double falsifiability = 0.0;     // F >= 0

    void validate() const;
};

enum class FeatureVariant { Base, Improved };

std::string to_string(FeatureVariant v);
FeatureVariant feature_variant_from_string(const std::string& s);

/// Column order is the contract: BASE is [U, S, Cf, R, esi_harm],
/// IMPROVED appends [U_ent, A_ctx, F].
const std::vector<std::string>& feature_names(FeatureVariant v);

struct FeatureMatrix {
    FeatureVariant variant = FeatureVariant::Base;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
    std::vector<std::string> names;

    std::size_t size() const { return rows.size(); }
    std::size_t dim() const { return names.size(); }
};

struct FoldAssignment {
    int k = 0;
    std::vector<int> fold_index;  // one entry per example, in [0, k)
};

/// Loads a JSONL dataset. Required fields: question, answer, label (0/1).
/// Optional: context (default empty), id (default "line-<n>").
/// Errors name the offending 1-based line.
std::vector<LabeledExample> load_jsonl_dataset(const std::string& path);

/// Writes examples back out in the same schema, one object per line.
void save_jsonl_dataset(const std::vector<LabeledExample>& examples,
                        const std::string& path);

/// Deterministic stratified fold assignment. Each fold's positive count is
/// within one example of the exact proportional share.
FoldAssignment stratified_folds(const std::vector<LabeledExample>& examples,
                                int k, std::uint64_t seed);

FoldAssignment stratified_folds_from_labels(const std::vector<int>& labels,
                                            int k, std::uint64_t seed);

/// Stacks signal vectors into the fixed column order for `variant`.
/// `ids`, when provided, is used to name rows in error messages.
FeatureMatrix to_feature_matrix(
    const std::vector<std::pair<SignalVector, int>>& vectors,
    FeatureVariant variant,
    const std::vector<std::string>& ids = {});

/// Features of one signal vector in the `variant` column order.
std::vector<double> features_of(const SignalVector& v, FeatureVariant variant);

}  // namespace pcib
