#pragma once

#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "pcib/backends.hpp"
#include "pcib/core.hpp"

namespace pcib::signals {

enum class ConflictAggregation { MeanOfMax, Max };

std::string to_string(ConflictAggregation a);
ConflictAggregation conflict_aggregation_from_string(const std::string& s);

struct SignalConfig {
    int k_perturbations = 3;
    int m_traces = 3;
    int max_claims = 5;
    double alpha = 2.0;                 // entity-uptake amplification
    double beta = 0.1;                  // falsifiability language weight
    double paraphrase_temperature = 0.7;
    double esi_epsilon = 1e-3;
    int context_norm_words = 200;
    ConflictAggregation conflict_aggregation = ConflictAggregation::MeanOfMax;

    void validate() const;
    /// Stable digest of every field; part of the signal-cache key.
    std::string digest() const;
};

/// Definitive/hedge word lists for the falsifiability signal. Sets are
/// disjoint and non-empty.
class HedgeLexicon {
public:
    HedgeLexicon(std::unordered_set<std::string> definitive,
                 std::unordered_set<std::string> hedge);

    static const HedgeLexicon& builtin();
    /// Plain-text format: one word per line under "[definitive]" and
    /// "[hedge]" section headers.
    static HedgeLexicon load(const std::string& path);

    const std::unordered_set<std::string>& definitive_words() const { return definitive_; }
    const std::unordered_set<std::string>& hedge_words() const { return hedge_; }

private:
    std::unordered_set<std::string> definitive_;
    std::unordered_set<std::string> hedge_;
};

/// Mean per-token loglik difference (post - prior), clipped at 0.
/// Both inputs must share the answer's token segmentation.
double uptake(const backends::TokenLogliks& post, const backends::TokenLogliks& prior);

/// Mean over claims of the mean over perturbations of JS divergences.
double stress(const std::vector<std::vector<double>>& per_claim_js);

/// MeanOfMax: mean over claims of the max over perturbations.
/// Max: global max.
double conflict(const std::vector<std::vector<double>>& per_claim_contradiction,
                ConflictAggregation mode);

/// Mean pairwise Jaccard similarity over lowercase alphanumeric word sets.
double rationalization(const std::vector<std::string>& traces);

/// Entity tokens: capital-initial tokens that don't open a sentence,
/// tokens containing a digit, tokens of length >= 12.
std::pair<int, double> entity_density(const std::string& answer);

/// u_base * (1 + alpha * density)
double entity_uptake(double u_base, double density, double alpha);

/// (1 / (1 + stress)) * min(1, context_word_count / norm_words)
double context_adherence(double stress_value, int context_word_count,
                         int norm_words);

/// conflict * max(0, 1 + beta * (n_definitive - n_hedge)) from raw counts.
double falsifiability_from_counts(double conflict_value, long n_definitive,
                                  long n_hedge, double beta);

/// Same, counting case-insensitive whole-word lexicon matches in the answer.
double falsifiability(double conflict_value, const std::string& answer,
                      const HedgeLexicon& lexicon, double beta);

/// Both ESI composites over the orientation-corrected components
/// 𝒰 = u/(1+u), 𝒮 = 1−s, 𝒞 = 1−cf, each floored at epsilon.
std::pair<double, double> esi(double u, double s, double cf, double epsilon);

/// 1 − esi_harm: the theory-guided hallucination risk.
double risk_score(const SignalVector& v);

/// Runs the full extraction pipeline for one triple: uptake from the two
/// loglik calls, claims → paraphrases → NLI for stress and conflict,
/// traces for rationalization, the three enhancement signals, and both
/// ESI composites. Empty-context triples skip the context conditioning
/// (U = 0) and get A_ctx = 0.
SignalVector extract_signals(const QcaTriple& triple, const SignalConfig& cfg,
                             const backends::Backends& be,
                             const HedgeLexicon& lexicon = HedgeLexicon::builtin());

int count_words(const std::string& text);

}  // namespace pcib::signals
