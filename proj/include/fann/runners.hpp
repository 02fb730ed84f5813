#pragma once

#include <string>

#include "fann/config.hpp"
#include "fann/gen.hpp"
#include "fann/stats.hpp"

namespace fann {

/// Outcome tally of a fairness run. counts is aligned with ball (the oracle
/// near ids of the instance query). marginal/pairs are only populated for
/// uniform-sampling subjects, not for the plain filter search.
struct FairnessReport {
    SamplerKind sampler = SamplerKind::oracle;
    uint32_t trials = 0;
    std::vector<PointId> ball;
    std::vector<uint64_t> counts;
    uint64_t bot = 0;
    uint64_t invalid = 0;  // outcomes violating the sampler's correctness contract
    bool marginal_available = false;
    DistReport marginal;
    bool pairs_available = false;
    IndependenceReport pairs;
    bool state_hash_ok = true;
    double clamp_rate = 0.0;
    double mean_inspected = 0.0;

    double bot_rate() const { return trials ? static_cast<double>(bot) / trials : 0.0; }
    double success_rate() const { return 1.0 - bot_rate(); }

    /// Machine-readable: one key=value per line, stable key names.
    std::string to_kv() const;
    /// Human-readable table.
    std::string to_table() const;
};

/// Trial protocol by sampler: rebuild-per-trial for nns and filter,
/// repeated-query on one build for nns_rank_swap, nnis and filter_nnis,
/// plain draws for oracle.
FairnessReport run_fairness_test(const Config& cfg, const PlantedInstance& inst,
                                 Exec exec = Exec::parallel);

struct BenchReport {
    SamplerKind sampler = SamplerKind::oracle;
    double build_seconds = 0.0;
    uint32_t queries = 0;
    double query_mean_us = 0.0;
    double query_p50_us = 0.0;
    double mean_inspected = 0.0;
    uint64_t bot = 0;
    uint64_t memory_bytes = 0;

    std::string to_kv() const;
};

/// One build, `queries` timed queries. Counters are exact and deterministic
/// for fixed seeds.
BenchReport run_bench(const Config& cfg, const PlantedInstance& inst, uint32_t queries,
                      Exec exec = Exec::parallel);

}  // namespace fann
