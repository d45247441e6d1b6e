#include "pcib/signals.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "pcib/rng.hpp"

namespace pcib::signals {

namespace {

double mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

// token with leading/trailing punctuation stripped
std::string token_core(const std::string& tok) {
    std::size_t b = 0, e = tok.size();
    while (b < e && !std::isalnum(static_cast<unsigned char>(tok[b]))) ++b;
    while (e > b && !std::isalnum(static_cast<unsigned char>(tok[e - 1]))) --e;
    return tok.substr(b, e - b);
}

bool ends_sentence(const std::string& tok) {
    for (auto it = tok.rbegin(); it != tok.rend(); ++it) {
        if (*it == '.' || *it == '!' || *it == '?') return true;
        if (std::isalnum(static_cast<unsigned char>(*it))) return false;
    }
    return false;
}

}  // namespace

std::string to_string(ConflictAggregation a) {
    return a == ConflictAggregation::MeanOfMax ? "mean_of_max" : "max";
}

ConflictAggregation conflict_aggregation_from_string(const std::string& s) {
    if (s == "mean_of_max") return ConflictAggregation::MeanOfMax;
    if (s == "max") return ConflictAggregation::Max;
    throw ValidationError("unknown conflict aggregation: " + s);
}

void SignalConfig::validate() const {
    if (k_perturbations < 1) throw ValidationError("k_perturbations must be >= 1");
    if (m_traces < 2) throw ValidationError("m_traces must be >= 2");
    if (max_claims < 1) throw ValidationError("max_claims must be >= 1");
    if (alpha < 0) throw ValidationError("alpha must be >= 0");
    if (beta < 0) throw ValidationError("beta must be >= 0");
    if (paraphrase_temperature < 0 || paraphrase_temperature > 2) {
        throw ValidationError("paraphrase_temperature must be in [0,2]");
    }
    if (!(esi_epsilon > 0)) throw ValidationError("esi_epsilon must be positive");
    if (context_norm_words < 1) throw ValidationError("context_norm_words must be >= 1");
}

std::string SignalConfig::digest() const {
    std::ostringstream out;
    out << "k=" << k_perturbations << ";m=" << m_traces << ";claims=" << max_claims
        << ";alpha=" << alpha << ";beta=" << beta
        << ";temp=" << paraphrase_temperature << ";eps=" << esi_epsilon
        << ";norm=" << context_norm_words
        << ";agg=" << to_string(conflict_aggregation);
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(out.str())));
    return buf;
}

HedgeLexicon::HedgeLexicon(std::unordered_set<std::string> definitive,
                           std::unordered_set<std::string> hedge)
    : definitive_(std::move(definitive)), hedge_(std::move(hedge)) {
    if (definitive_.empty() || hedge_.empty()) {
        throw ValidationError("HedgeLexicon: both word sets must be non-empty");
    }
    for (const auto& w : definitive_) {
        if (hedge_.count(w)) {
            throw ValidationError("HedgeLexicon: word in both sets: " + w);
        }
    }
}

const HedgeLexicon& HedgeLexicon::builtin() {
    static const HedgeLexicon lex(
        {"definitely", "certainly", "clearly", "undoubtedly", "absolutely",
         "obviously", "unquestionably", "surely", "undeniably"},
        {"possibly", "maybe", "perhaps", "might", "likely", "probably",
         "presumably", "apparently", "seemingly", "arguably"});
    return lex;
}

HedgeLexicon HedgeLexicon::load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IngestionError("cannot open lexicon file: " + path);
    std::unordered_set<std::string> definitive, hedge;
    std::unordered_set<std::string>* current = nullptr;
    std::string line;
    while (std::getline(in, line)) {
        auto words = math::word_set(line);
        if (line.find("[definitive]") != std::string::npos) {
            current = &definitive;
        } else if (line.find("[hedge]") != std::string::npos) {
            current = &hedge;
        } else if (!words.empty()) {
            if (!current) {
                throw IngestionError("lexicon word before any section header: " + line);
            }
            for (auto& w : words) current->insert(w);
        }
    }
    return HedgeLexicon(std::move(definitive), std::move(hedge));
}

double uptake(const backends::TokenLogliks& post, const backends::TokenLogliks& prior) {
    post.validate();
    prior.validate();
    if (post.tokens.size() != prior.tokens.size()) {
        throw DimensionError("uptake: token counts differ (" +
                             std::to_string(post.tokens.size()) + " vs " +
                             std::to_string(prior.tokens.size()) + ")");
    }
    double acc = 0.0;
    for (std::size_t i = 0; i < post.logliks.size(); ++i) {
        acc += post.logliks[i] - prior.logliks[i];
    }
    // KL approximation must stay non-negative
    return std::max(0.0, acc / static_cast<double>(post.logliks.size()));
}

double stress(const std::vector<std::vector<double>>& per_claim_js) {
    if (per_claim_js.empty()) throw ValidationError("stress: no claims");
    double outer = 0.0;
    for (const auto& claim_js : per_claim_js) {
        if (claim_js.empty()) throw ValidationError("stress: claim without perturbations");
        for (double v : claim_js) {
            if (v < 0.0 || v > 1.0) throw ValidationError("stress: JS value out of [0,1]");
        }
        outer += mean(claim_js);
    }
    return outer / static_cast<double>(per_claim_js.size());
}

double conflict(const std::vector<std::vector<double>>& per_claim_contradiction,
                ConflictAggregation mode) {
    if (per_claim_contradiction.empty()) throw ValidationError("conflict: no claims");
    double acc = 0.0;
    for (const auto& claim_c : per_claim_contradiction) {
        if (claim_c.empty()) throw ValidationError("conflict: claim without perturbations");
        double mx = 0.0;
        for (double v : claim_c) {
            if (v < 0.0 || v > 1.0) throw ValidationError("conflict: value out of [0,1]");
            mx = std::max(mx, v);
        }
        if (mode == ConflictAggregation::Max) {
            acc = std::max(acc, mx);
        } else {
            acc += mx;
        }
    }
    if (mode == ConflictAggregation::Max) return acc;
    return acc / static_cast<double>(per_claim_contradiction.size());
}

double rationalization(const std::vector<std::string>& traces) {
    if (traces.size() < 2) throw ValidationError("rationalization: needs >= 2 traces");
    std::vector<std::unordered_set<std::string>> sets;
    sets.reserve(traces.size());
    for (const auto& t : traces) sets.push_back(math::word_set(t));

    double acc = 0.0;
    std::size_t pairs = 0;
    for (std::size_t j = 0; j < sets.size(); ++j) {
        for (std::size_t k = j + 1; k < sets.size(); ++k) {
            acc += math::jaccard_similarity(sets[j], sets[k]);
            ++pairs;
        }
    }
    return acc / static_cast<double>(pairs);  // the 2/(M(M-1)) normalization
}

std::pair<int, double> entity_density(const std::string& answer) {
    auto tokens = backends::whitespace_tokens(answer);
    if (tokens.empty()) return {0, 0.0};

    int count = 0;
    bool sentence_start = true;
    for (const auto& tok : tokens) {
        std::string core = token_core(tok);
        bool entity = false;
        if (!core.empty()) {
            bool capital = std::isupper(static_cast<unsigned char>(core[0])) != 0;
            bool has_digit = std::any_of(core.begin(), core.end(), [](unsigned char c) {
                return std::isdigit(c) != 0;
            });
            entity = (capital && !sentence_start) || has_digit || core.size() >= 12;
        }
        if (entity) ++count;
        sentence_start = ends_sentence(tok);
    }
    return {count, static_cast<double>(count) / static_cast<double>(tokens.size())};
}

double entity_uptake(double u_base, double density, double alpha) {
    if (u_base < 0) throw ValidationError("entity_uptake: u_base must be >= 0");
    if (density < 0 || density > 1) throw ValidationError("entity_uptake: density must be in [0,1]");
    return u_base * (1.0 + alpha * density);
}

double context_adherence(double stress_value, int context_word_count,
                         int norm_words) {
    if (stress_value < 0 || stress_value > 1) {
        throw ValidationError("context_adherence: stress must be in [0,1]");
    }
    if (context_word_count < 0) {
        throw ValidationError("context_adherence: word count must be >= 0");
    }
    if (norm_words < 1) throw ValidationError("context_adherence: norm_words must be >= 1");
    double availability = std::min(1.0, static_cast<double>(context_word_count) /
                                            static_cast<double>(norm_words));
    return (1.0 / (1.0 + stress_value)) * availability;
}

double falsifiability_from_counts(double conflict_value, long n_definitive,
                                  long n_hedge, double beta) {
    if (conflict_value < 0 || conflict_value > 1) {
        throw ValidationError("falsifiability: conflict must be in [0,1]");
    }
    double factor = std::max(0.0, 1.0 + beta * static_cast<double>(n_definitive - n_hedge));
    return conflict_value * factor;
}

double falsifiability(double conflict_value, const std::string& answer,
                      const HedgeLexicon& lexicon, double beta) {
    long n_def = 0, n_hedge = 0;
    for (const auto& tok : backends::whitespace_tokens(answer)) {
        std::string core = token_core(tok);
        std::transform(core.begin(), core.end(), core.begin(),
                       [](unsigned char c) { return std::tolower(c); });
        if (core.empty()) continue;
        if (lexicon.definitive_words().count(core)) ++n_def;
        if (lexicon.hedge_words().count(core)) ++n_hedge;
    }
    return falsifiability_from_counts(conflict_value, n_def, n_hedge, beta);
}

std::pair<double, double> esi(double u, double s, double cf, double epsilon) {
    if (u < 0) throw ValidationError("esi: u must be >= 0");
    if (s < 0 || s > 1) throw ValidationError("esi: s must be in [0,1]");
    if (cf < 0 || cf > 1) throw ValidationError("esi: cf must be in [0,1]");
    if (!(epsilon > 0)) throw ValidationError("esi: epsilon must be positive");

    std::array<double, 3> comps = {
        std::max(epsilon, u / (1.0 + u)),  // saturating uptake orientation
        std::max(epsilon, 1.0 - s),
        std::max(epsilon, 1.0 - cf),
    };
    return {math::harmonic_mean(comps), math::geometric_mean(comps)};
}

double risk_score(const SignalVector& v) {
    v.validate();
    return 1.0 - v.esi_harm;
}

int count_words(const std::string& text) {
    return static_cast<int>(backends::whitespace_tokens(text).size());
}

SignalVector extract_signals(const QcaTriple& triple, const SignalConfig& cfg,
                             const backends::Backends& be,
                             const HedgeLexicon& lexicon) {
    triple.validate();
    cfg.validate();
    if (!be.llm || !be.nli) throw ConfigError("extract_signals: backends not configured");

    try {
        SignalVector out;
        const bool has_context = count_words(triple.context) > 0;

        // Step 1: uptake. Empty context skips the conditioning entirely.
        if (has_context) {
            auto post = be.llm->answer_token_logliks(triple.question, triple.answer,
                                                     triple.context);
            auto prior = be.llm->answer_token_logliks(triple.question, triple.answer,
                                                      std::nullopt);
            out.uptake = uptake(post, prior);
        }

        // Step 2: claims -> paraphrases -> NLI for stress and conflict.
        // With no context, entailment is probed against the question, the
        // only grounding text left.
        const std::string& stress_premise = has_context ? triple.context : triple.question;
        auto claims = be.llm->extract_claims(triple.answer, cfg.max_claims);
        std::vector<std::vector<double>> per_claim_js, per_claim_contra;
        per_claim_js.reserve(claims.size());
        per_claim_contra.reserve(claims.size());
        for (const auto& claim : claims) {
            auto variants = be.llm->paraphrase(claim, cfg.k_perturbations,
                                               cfg.paraphrase_temperature);
            auto p_orig = be.nli->nli_probs(stress_premise, claim).to_prob_dist();
            std::vector<double> js_vals, contra_vals;
            js_vals.reserve(variants.size());
            contra_vals.reserve(variants.size());
            for (const auto& variant : variants) {
                auto p_pert = be.nli->nli_probs(stress_premise, variant).to_prob_dist();
                js_vals.push_back(math::js_divergence(p_orig, p_pert));
                contra_vals.push_back(
                    be.nli->nli_probs(triple.answer, variant).contradiction);
            }
            per_claim_js.push_back(std::move(js_vals));
            per_claim_contra.push_back(std::move(contra_vals));
        }
        out.stress = stress(per_claim_js);
        out.conflict = conflict(per_claim_contra, cfg.conflict_aggregation);

        auto traces = be.llm->reasoning_traces(triple.question, triple.answer,
                                               cfg.m_traces);
        out.rationalization = rationalization(traces);

        auto [entity_count, density] = entity_density(triple.answer);
        (void)entity_count;
        out.entity_uptake = entity_uptake(out.uptake, density, cfg.alpha);
        out.context_adherence = context_adherence(
            out.stress, count_words(triple.context), cfg.context_norm_words);
        out.falsifiability = falsifiability(out.conflict, triple.answer, lexicon,
                                            cfg.beta);
        std::tie(out.esi_harm, out.esi_geo) =
            esi(out.uptake, out.stress, out.conflict, cfg.esi_epsilon);

        out.validate();
        return out;
    } catch (const TransportError& e) {
        throw TransportError("triple " + triple.id + ": " + e.what(),
                             e.http_status(), true);
    } catch (const CapabilityError& e) {
        throw CapabilityError("triple " + triple.id + ": " + e.what());
    } catch (const Error& e) {
        throw DataError("triple " + triple.id + ": " + e.what());
    }
}

}  // namespace pcib::signals
