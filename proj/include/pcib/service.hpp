#pragma once

#include <memory>
#include <optional>
#include <string>

#include "pcib/backends.hpp"
#include "pcib/classifiers.hpp"
#include "pcib/core.hpp"
#include "pcib/signals.hpp"

namespace pcib::app {

struct ModelDescriptor {
    std::string kind;     // model kind or "theory-guided"
    std::string variant;  // "base"/"improved"; empty for theory-guided
    std::string version;

    std::string to_json() const;
};

struct ScoreResponse {
    double risk = 0.0;
    std::string verdict;  // "HALLUCINATION" iff risk >= threshold
    double threshold = 0.5;
    SignalVector signals;
    ModelDescriptor model;

    std::string to_json(int indent = 2) const;
};

/// Shared scoring path for the CLI and the HTTP service: extract signals,
/// then either the theory-guided risk (1 - esi_harm) or a trained model's
/// probability.
class Scorer {
public:
    /// Theory-guided scorer.
    Scorer(signals::SignalConfig cfg, backends::Backends be, double threshold);
    /// Model-backed scorer.
    Scorer(ml::TrainedModel model, signals::SignalConfig cfg, backends::Backends be,
           double threshold);

    ScoreResponse score(const QcaTriple& triple) const;
    ModelDescriptor descriptor() const;

private:
    std::optional<ml::TrainedModel> model_;
    signals::SignalConfig cfg_;
    backends::Backends backends_;
    double threshold_;
};

/// HTTP scoring service.
///   POST /v1/score  {question, context, answer} -> ScoreResponse
///   GET  /health    -> {status, model}
/// Malformed bodies get 400 with the missing fields, backend failures 502,
/// and requests beyond the in-flight cap 429. Each request is isolated.
class ScoreService {
public:
    ScoreService(std::shared_ptr<Scorer> scorer, int max_in_flight);
    ~ScoreService();

    /// Binds and serves; blocks until stop().
    void run(const std::string& bind_address, int port);
    /// Binds an ephemeral port and serves on a background thread (tests).
    int start_async(const std::string& bind_address);
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace pcib::app
