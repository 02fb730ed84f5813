#pragma once

#include <vector>

#include "fann/core.hpp"

namespace fann {

enum class FamilyKind { bit_sampling, hyperplane, p_stable };

/// A locality-sensitive hash family with a closed-form collision curve.
/// bit_sampling serves hamming, hyperplane serves inner_product on unit
/// vectors, p_stable (gaussian projections of width `width`) serves
/// euclidean.
struct LshFamily {
    FamilyKind kind = FamilyKind::bit_sampling;
    uint32_t dim = 0;
    double width = 0.0;  // p_stable only

    static LshFamily bit_sampling(uint32_t dim);
    static LshFamily hyperplane(uint32_t dim);
    static LshFamily p_stable(uint32_t dim, double width);

    /// For this family appropriate for the given metric.
    static LshFamily default_for(const Metric& metric, uint32_t dim);

    /// Collision probability of a single base hash at the given distance
    /// (similarity for hyperplane).
    double collision_prob(double value) const;

    void check_compatible(const Metric& metric) const;
};

/// Concatenation length K, table count L and the resulting collision
/// probabilities. K pushes the far collision probability below 1/n; L scales
/// as c_l * ln(n) / p1.
struct LshParams {
    uint32_t K = 1;
    uint32_t L = 1;
    double p1_base = 0.0, p2_base = 0.0;
    double p1 = 0.0, p2 = 0.0;
    double rho = 0.0;
    double c_l = 3.0;
    uint64_t seed = 0;
};

LshParams compute_params(const LshFamily& family, const Metric& metric, size_t n,
                         double c_l = 3.0, uint64_t seed = 0);

/// Open-addressing map from 64-bit bucket keys to dense bucket indices.
class KeyMap {
public:
    KeyMap() = default;
    explicit KeyMap(size_t expected) { reserve(expected); }

    void reserve(size_t expected);
    uint32_t insert_or_get(uint64_t key);
    int64_t find(uint64_t key) const;
    size_t size() const { return count_; }
    const std::vector<uint64_t>& key_of_slot() const { return key_of_slot_; }

private:
    void grow();

    std::vector<uint64_t> keys_;
    std::vector<uint32_t> slots_;
    std::vector<uint64_t> key_of_slot_;
    uint64_t mask_ = 0;
    size_t count_ = 0;
    static constexpr uint32_t kEmpty = UINT32_MAX;
};

/// Seeded source of the L concatenated hash functions. The key of a point in
/// table i is a 64-bit combination of its K base hash values.
class LshHasher {
public:
    LshHasher() = default;
    LshHasher(const LshFamily& family, uint32_t K, uint32_t L, uint64_t seed);

    uint64_t key(uint32_t table, std::span<const float> x) const;

    /// Raw output of one base hash, exposed for collision-curve checks.
    uint64_t base_value(uint32_t table, uint32_t k, std::span<const float> x) const;

    uint32_t tables() const { return L_; }
    uint32_t concat() const { return K_; }

private:
    FamilyKind kind_ = FamilyKind::bit_sampling;
    uint32_t dim_ = 0, K_ = 0, L_ = 0;
    double width_ = 0.0;
    std::vector<uint32_t> coords_;   // bit_sampling: L*K coordinate picks
    std::vector<float> vecs_;        // hyperplane/p_stable: L*K*dim gaussians
    std::vector<double> offsets_;    // p_stable: L*K shifts in [0, width)
};

/// L hash tables over a dataset; each bucket lists point ids sorted by
/// ascending rank under the build permutation. Immutable once built.
class LshIndex {
public:
    static LshIndex build(const Dataset& data, const Metric& metric, const LshFamily& family,
                          const LshParams& params, const RankPermutation& perm,
                          Exec exec = Exec::parallel);

    /// The L buckets colliding with q, in table order; empty spans for tables
    /// where q's bucket is empty.
    std::vector<std::span<const PointId>> query_buckets(std::span<const float> q) const;

    std::span<const PointId> bucket(uint32_t table, std::span<const float> q) const;

    /// Dense index of q's bucket in `table`, or -1 when empty.
    int64_t bucket_index(uint32_t table, std::span<const float> q) const;
    std::span<const PointId> bucket_by_index(uint32_t table, size_t idx) const;
    size_t bucket_count(uint32_t table) const { return tables_[table].offsets.size() - 1; }

    /// Standard approximate near-neighbor query: first (c,r)-near point
    /// found, giving up after more than 3L far points.
    SampleResult standard_ann_query(std::span<const float> q) const;

    const LshParams& params() const { return params_; }
    const RankPermutation& perm() const { return perm_; }
    const Dataset& data() const { return *data_; }
    const Metric& metric() const { return metric_; }
    const LshHasher& hasher() const { return hasher_; }

    uint64_t state_hash() const;
    uint64_t memory_bytes() const;

private:
    struct Table {
        KeyMap map;
        std::vector<uint32_t> offsets;  // bucket -> [offsets[b], offsets[b+1]) in ids
        std::vector<PointId> ids;       // rank-sorted within each bucket
    };

    const Dataset* data_ = nullptr;
    Metric metric_;
    LshFamily family_;
    LshParams params_;
    LshHasher hasher_;
    RankPermutation perm_;
    std::vector<Table> tables_;

    void check_dim(std::span<const float> q) const {
        if (q.size() != data_->dim()) throw std::invalid_argument("LshIndex: dimension mismatch");
    }
};

}  // namespace fann
