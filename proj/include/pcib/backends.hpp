#pragma once

#include <atomic>
#include <cstdint>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "pcib/errors.hpp"
#include "pcib/mathkit.hpp"

namespace pcib::backends {

/// Per-token natural-log likelihoods of an answer under some prompt.
struct TokenLogliks {
    std::vector<std::string> tokens;
    std::vector<double> logliks;  // nats, each <= 0

    void validate() const;
};

/// 3-class NLI output simplex.
struct NliDistribution {
    double entailment = 0.0;
    double neutral = 0.0;
    double contradiction = 0.0;

    void validate() const;
    /// Defensive renormalization of raw backend output.
    static NliDistribution normalized(double e, double n, double c);
    math::ProbDist to_prob_dist() const;
};

struct BackendConfig {
    std::string base_url;
    std::string api_key;
    std::string model_name;
    double timeout_seconds = 30.0;
    int max_in_flight = 4;
    int retries = 2;

    void validate() const;
};

/// LLM-side contract: token scoring and text generation.
class LlmBackend {
public:
    virtual ~LlmBackend() = default;

    /// One loglik per answer token, conditioned on the question alone or on
    /// question + context. Token segmentation of the answer is identical
    /// either way.
    virtual TokenLogliks answer_token_logliks(
        const std::string& question, const std::string& answer,
        const std::optional<std::string>& context) = 0;

    /// 1..max_claims claims; falls back to the whole answer when the
    /// backend yields nothing usable.
    virtual std::vector<std::string> extract_claims(const std::string& answer,
                                                    int max_claims) = 0;

    /// Exactly k variants; empty generations are replaced by the original.
    virtual std::vector<std::string> paraphrase(const std::string& claim, int k,
                                                double temperature) = 0;

    /// Exactly m traces; m must be >= 2.
    virtual std::vector<std::string> reasoning_traces(const std::string& question,
                                                      const std::string& answer,
                                                      int m) = 0;

    virtual std::string model_name() const = 0;
};

/// NLI-side contract.
class NliBackend {
public:
    virtual ~NliBackend() = default;
    virtual NliDistribution nli_probs(const std::string& premise,
                                      const std::string& hypothesis) = 0;
};

/// The backend pair a signal extraction run operates against.
struct Backends {
    std::shared_ptr<LlmBackend> llm;
    std::shared_ptr<NliBackend> nli;
};

/// Deterministic in-process backend: a pure function of (inputs, seed).
/// Token logliks reward answer tokens that appear in the context, claim
/// extraction splits on sentence punctuation, paraphrases are seeded
/// word-order/synonym shuffles, and NLI is rule-based on word overlap and
/// negation markers.
class MockBackend : public LlmBackend, public NliBackend {
public:
    explicit MockBackend(std::uint64_t seed = 0) : seed_(seed) {}

    TokenLogliks answer_token_logliks(
        const std::string& question, const std::string& answer,
        const std::optional<std::string>& context) override;
    std::vector<std::string> extract_claims(const std::string& answer,
                                            int max_claims) override;
    std::vector<std::string> paraphrase(const std::string& claim, int k,
                                        double temperature) override;
    std::vector<std::string> reasoning_traces(const std::string& question,
                                              const std::string& answer,
                                              int m) override;
    NliDistribution nli_probs(const std::string& premise,
                              const std::string& hypothesis) override;

    std::string model_name() const override { return "mock"; }

    std::uint64_t seed() const { return seed_; }
    long call_count() const { return calls_.load(); }

private:
    std::uint64_t seed_;
    std::atomic<long> calls_{0};
};

Backends make_mock_backends(std::uint64_t seed);

/// Whitespace tokenization (the mock's answer segmentation).
std::vector<std::string> whitespace_tokens(const std::string& text);

/// Sentence segmentation on ./!/? boundaries; segments are trimmed and
/// non-empty.
std::vector<std::string> split_sentences(const std::string& text);

}  // namespace pcib::backends
