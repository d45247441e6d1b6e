#include "pcib/synthetic.hpp"

#include <algorithm>

#include "pcib/rng.hpp"
#include "pcib/signals.hpp"

namespace pcib::synth {

void PlantedSpec::validate() const {
    if (n < 2 || n % 2 != 0) {
        throw ValidationError("PlantedSpec: n must be even and >= 2");
    }
}

std::vector<std::pair<SignalVector, int>> generate(const PlantedSpec& spec) {
    spec.validate();
    DetRng rng(spec.seed);

    std::vector<std::pair<SignalVector, int>> out;
    out.reserve(static_cast<std::size_t>(spec.n));
    for (int label = 0; label <= 1; ++label) {
        const bool halluc = label == 1;
        for (int i = 0; i < spec.n / 2; ++i) {
            SignalVector v;
            v.uptake = std::max(
                0.0, halluc ? rng.normal(PlantedSpec::kHallucUptakeMean,
                                         PlantedSpec::kHallucUptakeSd)
                            : rng.normal(PlantedSpec::kFactualUptakeMean,
                                         PlantedSpec::kFactualUptakeSd));
            v.stress = halluc ? rng.beta(PlantedSpec::kHallucStressA,
                                         PlantedSpec::kHallucStressB)
                              : rng.beta(PlantedSpec::kFactualStressA,
                                         PlantedSpec::kFactualStressB);
            v.conflict = halluc ? rng.beta(PlantedSpec::kHallucConflictA,
                                           PlantedSpec::kHallucConflictB)
                                : rng.beta(PlantedSpec::kFactualConflictA,
                                           PlantedSpec::kFactualConflictB);
            v.rationalization = rng.beta(PlantedSpec::kRationalizationA,
                                         PlantedSpec::kRationalizationB);

            double density = halluc ? rng.uniform(PlantedSpec::kHallucDensityLo,
                                                  PlantedSpec::kHallucDensityHi)
                                    : rng.uniform(PlantedSpec::kFactualDensityLo,
                                                  PlantedSpec::kFactualDensityHi);
            long ctx_words = halluc ? rng.uniform_int(PlantedSpec::kHallucCtxLo,
                                                      PlantedSpec::kHallucCtxHi)
                                    : rng.uniform_int(PlantedSpec::kFactualCtxLo,
                                                      PlantedSpec::kFactualCtxHi);
            long n_def = rng.poisson(halluc ? PlantedSpec::kHallucDefinitiveRate
                                            : PlantedSpec::kFactualDefinitiveRate);
            long n_hedge = rng.poisson(halluc ? PlantedSpec::kHallucHedgeRate
                                              : PlantedSpec::kFactualHedgeRate);

            v.entity_uptake =
                signals::entity_uptake(v.uptake, density, PlantedSpec::kAlpha);
            v.context_adherence = signals::context_adherence(
                v.stress, static_cast<int>(ctx_words), PlantedSpec::kContextNormWords);
            v.falsifiability = signals::falsifiability_from_counts(
                v.conflict, n_def, n_hedge, PlantedSpec::kBeta);
            std::tie(v.esi_harm, v.esi_geo) =
                signals::esi(v.uptake, v.stress, v.conflict, PlantedSpec::kEsiEpsilon);

            v.validate();
            out.emplace_back(v, label);
        }
    }
    return out;
}

}  // namespace pcib::synth
