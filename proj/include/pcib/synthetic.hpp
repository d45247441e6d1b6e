#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include "pcib/core.hpp"

namespace pcib::synth {

/// Planted-data generator spec. The distribution constants are fixed here
/// (not configurable) so downstream expectations stay stable. Class
/// directions: factual answers take up context (high U), stay stable under
/// paraphrase (low S), rarely contradict (low Cf), come with richer
/// context, and hedge more; hallucinated answers are entity-dense and
/// definitive. Rationalization is drawn from the same distribution for
/// both classes, so it carries no signal by construction.
struct PlantedSpec {
    std::uint64_t seed = 0;
    int n = 200;  // even; exactly n/2 per class

    // factual class (label 0)
    static constexpr double kFactualUptakeMean = 0.75;
    static constexpr double kFactualUptakeSd = 0.5;
    static constexpr int kFactualStressA = 3, kFactualStressB = 4;
    static constexpr int kFactualConflictA = 3, kFactualConflictB = 6;
    static constexpr double kFactualDensityLo = 0.0, kFactualDensityHi = 0.30;
    static constexpr long kFactualCtxLo = 120, kFactualCtxHi = 400;
    static constexpr double kFactualDefinitiveRate = 0.6;
    static constexpr double kFactualHedgeRate = 1.4;

    // hallucinated class (label 1)
    static constexpr double kHallucUptakeMean = 0.45;
    static constexpr double kHallucUptakeSd = 0.5;
    static constexpr int kHallucStressA = 4, kHallucStressB = 3;
    static constexpr int kHallucConflictA = 5, kHallucConflictB = 4;
    static constexpr double kHallucDensityLo = 0.10, kHallucDensityHi = 0.50;
    static constexpr long kHallucCtxLo = 20, kHallucCtxHi = 300;
    static constexpr double kHallucDefinitiveRate = 1.6;
    static constexpr double kHallucHedgeRate = 0.6;

    // both classes
    static constexpr int kRationalizationA = 5, kRationalizationB = 5;
    static constexpr double kAlpha = 2.0;
    static constexpr double kBeta = 0.1;
    static constexpr int kContextNormWords = 200;
    static constexpr double kEsiEpsilon = 1e-3;

    void validate() const;
};

/// Deterministic labeled signal vectors: first n/2 factual (label 0),
/// then n/2 hallucinated (label 1). Derived fields (entity uptake,
/// context adherence, falsifiability, ESI) are computed from the planted
/// raws through the signals-module formulas.
std::vector<std::pair<SignalVector, int>> generate(const PlantedSpec& spec);

}  // namespace pcib::synth
