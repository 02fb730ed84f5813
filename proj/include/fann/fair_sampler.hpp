#pragma once

#include <map>
#include <optional>

#include "fann/lsh.hpp"

namespace fann {

/// Uniform near-neighbor sampler over an LSH index: the answer to a query is
/// the minimum-rank near point among the colliding buckets, which the random
/// rank permutation makes a uniform draw from the near ball.
///
/// static_ranks mode never mutates and is deterministic per build; fresh
/// uniformity requires a fresh build. rank_swap mode rerandomizes the rank of
/// the returned point after every query, so repeating one identical query
/// yields independent uniform samples. rank_swap queries mutate shared state
/// and must be externally serialized.
class NnsSampler {
public:
    enum class Mode { static_ranks, rank_swap };

    static NnsSampler build(const Dataset& data, const Metric& metric, const LshFamily& family,
                            const LshParams& params, const RankPermutation& perm, Mode mode,
                            uint64_t query_seed = 0, Exec exec = Exec::parallel);

    Mode mode() const { return mode_; }

    /// Minimum-rank near point over the colliding buckets (static_ranks only).
    SampleResult query(std::span<const float> q) const;

    /// The (up to) k near points with smallest ranks, ranks strictly
    /// increasing in the output (static_ranks only).
    std::vector<PointId> query_k_without_replacement(std::span<const float> q, size_t k) const;

    /// Sample, then swap the returned point's rank with a uniformly chosen
    /// rank at or above it, updating every affected bucket (rank_swap only).
    SampleResult query_rank_swap(std::span<const float> q);

    /// k successive rank-swap queries; empty entries when the neighborhood
    /// is empty (rank_swap only).
    std::vector<std::optional<PointId>> query_k_with_replacement(std::span<const float> q, size_t k);

    const RankPermutation& perm() const { return mode_ == Mode::static_ranks ? index_->perm() : perm_; }
    const LshIndex& index() const;

    /// Full-scan invariant check: every bucket ordered by current ranks.
    bool buckets_rank_consistent() const;

    uint64_t state_hash() const;

private:
    Mode mode_ = Mode::static_ranks;

    // static_ranks state
    std::optional<LshIndex> index_;

    // rank_swap state
    struct SwapTable {
        KeyMap map;
        std::vector<std::map<uint32_t, PointId>> buckets;  // rank -> id
    };
    const Dataset* data_ = nullptr;
    Metric metric_;
    LshParams params_;
    LshHasher hasher_;
    RankPermutation perm_;
    std::vector<SwapTable> tables_;
    std::vector<uint64_t> point_keys_;  // n * L table keys for bucket lookup
    Rng swap_rng_{0};

    void require(Mode m, const char* op) const;
};

}  // namespace fann
