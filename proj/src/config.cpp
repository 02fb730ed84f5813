#include "fann/config.hpp"

#include <cstdlib>

namespace fann {

SamplerKind parse_sampler(const std::string& name) {
    if (name == "nns") return SamplerKind::nns;
    if (name == "nns_rank_swap") return SamplerKind::nns_rank_swap;
    if (name == "nnis") return SamplerKind::nnis;
    if (name == "filter") return SamplerKind::filter;
    if (name == "filter_nnis") return SamplerKind::filter_nnis;
    if (name == "oracle") return SamplerKind::oracle;
    throw std::invalid_argument("unknown sampler '" + name + "'");
}

const char* sampler_name(SamplerKind kind) {
    switch (kind) {
        case SamplerKind::nns: return "nns";
        case SamplerKind::nns_rank_swap: return "nns_rank_swap";
        case SamplerKind::nnis: return "nnis";
        case SamplerKind::filter: return "filter";
        case SamplerKind::filter_nnis: return "filter_nnis";
        case SamplerKind::oracle: return "oracle";
    }
    return "?";
}

void Constants::set(const std::string& name, double value) {
    if (!(value > 0.0)) throw std::invalid_argument("constant " + name + " must be positive");
    if (name == "C_L")
        c_l = value;
    else if (name == "C_lambda")
        c_lambda = value;
    else if (name == "C_sigma")
        c_sigma = value;
    else if (name == "C_delta")
        c_delta = value;
    else if (name == "C_t")
        c_t = value;
    else if (name == "C_f")
        c_f = value;
    else
        throw std::invalid_argument("unknown constant '" + name +
                                    "' (expected C_L, C_lambda, C_sigma, C_delta, C_t or C_f)");
}

uint64_t resolve_seed(std::optional<uint64_t> cli_seed) {
    if (cli_seed) return *cli_seed;
    if (const char* env = std::getenv("FANN_SEED")) {
        char* end = nullptr;
        const unsigned long long v = std::strtoull(env, &end, 10);
        if (end && *end == '\0') return v;
        throw std::invalid_argument("FANN_SEED is not a valid integer");
    }
    return 1;
}

}  // namespace fann
