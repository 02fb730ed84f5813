#pragma once

#include <optional>
#include <string>

#include "fann/core.hpp"

namespace fann {

enum class SamplerKind { nns, nns_rank_swap, nnis, filter, filter_nnis, oracle };

SamplerKind parse_sampler(const std::string& name);
const char* sampler_name(SamplerKind kind);

/// Hidden constants behind the asymptotic parameter choices; every one can be
/// overridden from the command line via --const NAME=VALUE.
struct Constants {
    double c_l = 3.0;       // tables: L = ceil(c_l ln(n) / p1)
    double c_lambda = 4.0;  // per-segment near cap
    double c_sigma = 4.0;   // failed draws before halving the segment count
    double c_delta = 8.0;   // sketch lists
    double c_t = 4.0;       // sketch list capacity
    double c_f = 3.0;       // filter copies for independent sampling

    void set(const std::string& name, double value);
};

struct Config {
    SamplerKind sampler = SamplerKind::nns;
    Constants consts;
    double sketch_eps = 0.5;
    double filter_eps = 0.1;
    uint32_t repetitions = 0;  // filter copies; 0 picks the calibrated default
    uint64_t seed = 1;
    uint32_t trials = 1000;
};

/// --seed beats the FANN_SEED environment variable beats the default of 1.
uint64_t resolve_seed(std::optional<uint64_t> cli_seed);

}  // namespace fann
