#pragma once

#include <string>

#include "fann/core.hpp"
#include "fann/io.hpp"
#include "fann/oracle.hpp"

namespace fann {

/// Recipe for a synthetic instance with a known near/cnear split around one
/// query point. Background points are pushed outside the cnear shell and the
/// result is validated against the brute-force oracle.
struct PlantedSpec {
    MetricKind metric = MetricKind::hamming;
    uint32_t n = 0;
    uint32_t dim = 0;
    double r = 0.0, c = 0.0;         // distance metrics
    double alpha = 0.0, beta = 0.0;  // inner_product
    uint32_t near_count = 0;
    uint32_t cnear_count = 0;
    // inner_product: planted near similarities drawn from [near_sim_lo, near_sim_hi];
    // both zero means the default band [alpha, (1+alpha)/2].
    double near_sim_lo = 0.0, near_sim_hi = 0.0;
};

struct PlantedInstance {
    Dataset data;
    std::vector<float> query;
    Metric metric;
    std::vector<PointId> near_ids;
    std::vector<PointId> cnear_ids;
    uint64_t seed = 0;
};

/// Generate and oracle-validate; retries generation up to 100 times before
/// giving up.
PlantedInstance generate_planted(const PlantedSpec& spec, Rng& rng);

/// Instance files: <prefix>.data and <prefix>.query (datasets in the chosen
/// format) plus <prefix>.meta (key=value lines with the metric, planted
/// counts and the data format).
void save_instance(const PlantedInstance& inst, const std::string& prefix,
                   FileFormat format = FileFormat::binary);
PlantedInstance load_instance(const std::string& prefix);

}  // namespace fann
