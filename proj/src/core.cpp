#include "pcib/core.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include <json.hpp>

#include "pcib/rng.hpp"

namespace pcib {

namespace {

using nlohmann::json;

bool is_blank(const std::string& s) {
    return std::all_of(s.begin(), s.end(),
                       [](unsigned char c) { return std::isspace(c); });
}

void check_range(double v, double lo, double hi, const char* name) {
    if (!std::isfinite(v) || v < lo || v > hi) {
        throw ValidationError(std::string("SignalVector.") + name +
                              " out of range: " + std::to_string(v));
    }
}

}  // namespace

void QcaTriple::validate() const {
    if (is_blank(question)) throw ValidationError("question must be non-empty");
    if (is_blank(answer)) throw ValidationError("answer must be non-empty");
}

void SignalVector::validate() const {
    if (!std::isfinite(uptake) || uptake < 0.0) {
        throw ValidationError("SignalVector.uptake must be finite and >= 0");
    }
    check_range(stress, 0.0, 1.0, "stress");
    check_range(conflict, 0.0, 1.0, "conflict");
    check_range(rationalization, 0.0, 1.0, "rationalization");
    check_range(context_adherence, 0.0, 1.0, "context_adherence");
    if (!std::isfinite(entity_uptake) || entity_uptake < 0.0) {
        throw ValidationError("SignalVector.entity_uptake must be finite and >= 0");
    }
    if (!std::isfinite(falsifiability) || falsifiability < 0.0) {
        throw ValidationError("SignalVector.falsifiability must be finite and >= 0");
    }
    if (!(esi_harm > 0.0) || esi_harm > 1.0) {
        throw ValidationError("SignalVector.esi_harm must be in (0,1]");
    }
    if (!(esi_geo > 0.0) || esi_geo > 1.0) {
        throw ValidationError("SignalVector.esi_geo must be in (0,1]");
    }
}

std::string to_string(FeatureVariant v) {
    return v == FeatureVariant::Base ? "base" : "improved";
}

FeatureVariant feature_variant_from_string(const std::string& s) {
    if (s == "base") return FeatureVariant::Base;
    if (s == "improved") return FeatureVariant::Improved;
    throw ValidationError("unknown feature variant: " + s);
}

const std::vector<std::string>& feature_names(FeatureVariant v) {
    static const std::vector<std::string> base = {
        "uptake", "stress", "conflict", "rationalization", "esi_harm"};
    static const std::vector<std::string> improved = {
        "uptake",        "stress",           "conflict",
        "rationalization", "esi_harm",       "entity_uptake",
        "context_adherence", "falsifiability"};
    return v == FeatureVariant::Base ? base : improved;
}

std::vector<double> features_of(const SignalVector& v, FeatureVariant variant) {
    std::vector<double> f = {v.uptake, v.stress, v.conflict, v.rationalization,
                             v.esi_harm};
    if (variant == FeatureVariant::Improved) {
        f.push_back(v.entity_uptake);
        f.push_back(v.context_adherence);
        f.push_back(v.falsifiability);
    }
    return f;
}

std::vector<LabeledExample> load_jsonl_dataset(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open dataset file: " + path);

    std::vector<LabeledExample> examples;
    std::string line;
    long lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (is_blank(line)) continue;

        json obj;
        try {
            obj = json::parse(line);
        } catch (const json::parse_error& e) {
            throw IngestionError(std::string("malformed JSON (") + e.what() + ")",
                                 lineno);
        }
        if (!obj.is_object()) {
            throw IngestionError("expected a JSON object", lineno);
        }

        LabeledExample ex;
        for (const char* field : {"question", "answer"}) {
            if (!obj.contains(field) || !obj[field].is_string() ||
                is_blank(obj[field].get<std::string>())) {
                throw IngestionError(std::string("missing or empty field '") +
                                         field + "'",
                                     lineno);
            }
        }
        ex.triple.question = obj["question"].get<std::string>();
        ex.triple.answer = obj["answer"].get<std::string>();

        if (obj.contains("context")) {
            if (!obj["context"].is_string()) {
                throw IngestionError("field 'context' must be a string", lineno);
            }
            ex.triple.context = obj["context"].get<std::string>();
        }
        if (obj.contains("id")) {
            if (!obj["id"].is_string() || obj["id"].get<std::string>().empty()) {
                throw IngestionError("field 'id' must be a non-empty string", lineno);
            }
            ex.triple.id = obj["id"].get<std::string>();
        } else {
            ex.triple.id = "line-" + std::to_string(lineno);
        }

        if (!obj.contains("label")) {
            throw IngestionError("missing field 'label'", lineno);
        }
        const auto& lab = obj["label"];
        if (lab.is_number_integer()) {
            long v = lab.get<long>();
            if (v != 0 && v != 1) throw IngestionError("label must be 0 or 1", lineno);
            ex.label = static_cast<int>(v);
        } else if (lab.is_boolean()) {
            ex.label = lab.get<bool>() ? 1 : 0;
        } else {
            throw IngestionError("label must be 0 or 1", lineno);
        }

        examples.push_back(std::move(ex));
    }
    return examples;
}

void save_jsonl_dataset(const std::vector<LabeledExample>& examples,
                        const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IngestionError("cannot open file for writing: " + path);
    for (const auto& ex : examples) {
        json obj;
        obj["id"] = ex.triple.id;
        obj["question"] = ex.triple.question;
        obj["context"] = ex.triple.context;
        obj["answer"] = ex.triple.answer;
        obj["label"] = ex.label;
        out << obj.dump() << '\n';
    }
}

FoldAssignment stratified_folds_from_labels(const std::vector<int>& labels,
                                            int k, std::uint64_t seed) {
    if (k < 2) throw ConfigError("stratified folds need k >= 2");

    std::vector<std::size_t> pos, neg;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        (labels[i] == 1 ? pos : neg).push_back(i);
    }
    if (pos.empty() || neg.empty()) {
        throw ConfigError("stratified folds need both classes present");
    }
    if (static_cast<std::size_t>(k) > pos.size() ||
        static_cast<std::size_t>(k) > neg.size()) {
        throw ConfigError("k exceeds the size of a class (" +
                          std::to_string(pos.size()) + " pos / " +
                          std::to_string(neg.size()) + " neg)");
    }

    DetRng rng(seed);
    rng.shuffle(pos);
    rng.shuffle(neg);

    FoldAssignment fa;
    fa.k = k;
    fa.fold_index.assign(labels.size(), -1);
    for (std::size_t i = 0; i < pos.size(); ++i) {
        fa.fold_index[pos[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    for (std::size_t i = 0; i < neg.size(); ++i) {
        fa.fold_index[neg[i]] = static_cast<int>(i % static_cast<std::size_t>(k));
    }
    return fa;
}

FoldAssignment stratified_folds(const std::vector<LabeledExample>& examples,
                                int k, std::uint64_t seed) {
    std::vector<int> labels;
    labels.reserve(examples.size());
    for (const auto& ex : examples) labels.push_back(ex.label);
    return stratified_folds_from_labels(labels, k, seed);
}

FeatureMatrix to_feature_matrix(
    const std::vector<std::pair<SignalVector, int>>& vectors,
    FeatureVariant variant,
    const std::vector<std::string>& ids) {
    if (vectors.empty()) {
        throw ValidationError("to_feature_matrix: empty input");
    }
    FeatureMatrix m;
    m.variant = variant;
    m.names = feature_names(variant);
    m.rows.reserve(vectors.size());
    m.labels.reserve(vectors.size());
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        std::vector<double> row = features_of(vectors[i].first, variant);
        for (std::size_t j = 0; j < row.size(); ++j) {
            if (!std::isfinite(row[j])) {
                std::string who = i < ids.size() ? ids[i] : ("row " + std::to_string(i));
                throw DataError("non-finite value in feature '" + m.names[j] +
                                "' of example " + who);
            }
        }
        m.rows.push_back(std::move(row));
        m.labels.push_back(vectors[i].second);
    }
    return m;
}

}  // namespace pcib
