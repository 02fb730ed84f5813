#pragma once

#include <vector>

#include "fann/core.hpp"
#include "fann/stats.hpp"

namespace fann {

/// Brute-force ground truth: exact neighborhoods and exact uniform sampling
/// by linear scan. Stateless beyond the dataset and metric it points at.
class NeighborhoodOracle {
public:
    NeighborhoodOracle(const Dataset& data, const Metric& metric) : data_(&data), metric_(metric) {}

    /// Ids whose zone is near (or near-or-cnear when include_cnear), ascending.
    std::vector<PointId> exact_ball(std::span<const float> q, bool include_cnear = false) const {
        std::vector<PointId> out;
        const auto n = static_cast<PointId>(data_->size());
        for (PointId id = 0; id < n; ++id) {
            const Zone z = classify(metric_, (*data_)[id], q);
            if (z == Zone::near || (include_cnear && z == Zone::cnear)) out.push_back(id);
        }
        return out;
    }

    /// Uniform element of the exact near ball; empty if the ball is empty.
    std::optional<PointId> exact_uniform_sample(std::span<const float> q, Rng& rng) const {
        const auto ball = exact_ball(q);
        if (ball.empty()) return std::nullopt;
        return ball[rng.below(ball.size())];
    }

    const Metric& metric() const { return metric_; }
    const Dataset& data() const { return *data_; }

private:
    const Dataset* data_;
    Metric metric_;
};

}  // namespace fann
