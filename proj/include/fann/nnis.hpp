#pragma once

#include <memory>
#include <optional>

#include "fann/lsh.hpp"
#include "fann/sketch.hpp"

namespace fann {

/// Tunables for the segment sampler. lambda = ceil(c_lambda ln n) caps the
/// near points expected per segment; sigma = ceil(c_sigma ln^2 n) failed
/// draws at one segment count halve it.
struct NnisConstants {
    double c_lambda = 4.0;
    double c_sigma = 4.0;
    double sketch_eps = 0.5;
    double c_delta = 8.0;
    double c_t = 4.0;
};

/// Independent uniform near-neighbor sampling by rejection over rank
/// segments. Buckets are rank-sorted so a rank window is a binary search
/// away, and each bucket carries a distinct-count sketch (materialized only
/// for buckets of at least ceil(ln n) points) used to size the initial
/// segment count. Queries never mutate, so any interleaving of query points
/// yields independent outputs; each query draws from a caller-supplied rng.
class SegmentSampler {
public:
    static SegmentSampler build(const Dataset& data, const Metric& metric, const LshFamily& family,
                                const LshParams& params, const RankPermutation& perm,
                                uint64_t sketch_seed, const NnisConstants& consts = {},
                                Exec exec = Exec::parallel);

    /// Approximate count of distinct points colliding with q, from merging
    /// the colliding buckets' sketches.
    uint64_t estimate_collisions(std::span<const float> q) const;

    /// Near points of q colliding in some bucket whose rank lies in segment h
    /// of k (k a power of two, ranks padded to the next power of two).
    std::vector<PointId> segment_near_neighbors(std::span<const float> q, uint32_t k,
                                                uint32_t h) const;

    struct Result {
        std::optional<PointId> id;
        uint64_t inspected = 0;
        uint64_t iterations = 0;
        uint64_t clamp_events = 0;  // segments holding more than lambda near points
    };

    Result query(std::span<const float> q, Rng& rng) const;

    uint32_t lambda() const { return lambda_; }
    uint32_t sigma_cap() const { return sigma_; }
    uint32_t padded_n() const { return n2_; }
    uint32_t sketch_threshold() const { return tau_; }
    const LshIndex& index() const { return index_; }

    uint64_t state_hash() const;
    uint64_t memory_bytes() const;

private:
    LshIndex index_;
    std::shared_ptr<const SketchConfig> sketch_cfg_;
    // sketches_[table][bucket]; empty below the materialization threshold.
    std::vector<std::vector<std::optional<DistinctSketch>>> sketches_;
    uint32_t tau_ = 0;
    uint32_t lambda_ = 1;
    uint32_t sigma_ = 1;
    uint32_t n2_ = 1;

    std::vector<int64_t> resolve_buckets(std::span<const float> q) const;
    // Near points with rank in [lo, hi), deduplicated by id.
    std::vector<PointId> collect_near(const std::vector<int64_t>& slots, std::span<const float> q,
                                      uint32_t lo, uint32_t hi, uint64_t& inspected) const;
};

}  // namespace fann
