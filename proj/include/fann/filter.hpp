#pragma once

#include <optional>

#include "fann/core.hpp"
#include "fann/lsh.hpp"

namespace fann {

/// Query threshold slack below alpha * Delta_q: sqrt(2 (1 - alpha^2) ln(1/eps)).
double f_threshold(double alpha, double eps);

/// Query exponent (1 - alpha^2)(1 - beta^2) / (1 - alpha beta)^2.
double rho_exponent(double alpha, double beta);

/// Filter budget m = ceil(n^((1 - beta^2) / (1 - alpha beta)^2)).
uint64_t choose_m(uint64_t n, double alpha, double beta);

/// Tensoring split t = ceil(1 / (1 - alpha^2)).
uint32_t tensor_parts(double alpha);

/// Copies needed to lift the per-copy success probability (1-eps)^t back to
/// 1 - delta.
uint32_t choose_repetitions(double alpha, double eps, double delta);

struct FilterParams {
    double alpha = 0.0;
    double beta = 0.0;
    double eps = 0.1;
    uint32_t t = 1;
    uint32_t m_prime = 1;  // filters per part; effective budget is m_prime^t
    uint32_t repetitions = 1;
    uint64_t seed = 0;

    /// Derive t, m_prime from n and the thresholds. repetitions = 0 picks
    /// choose_repetitions(alpha, eps, 0.05).
    static FilterParams create(uint64_t n, double alpha, double beta, double eps, uint64_t seed,
                               uint32_t repetitions = 0);

    uint64_t effective_m() const {
        uint64_t m = 1;
        for (uint32_t i = 0; i < t; ++i) m *= m_prime;
        return m;
    }
};

namespace detail {

/// One tensored filter copy: t * m_prime gaussian filters and the bucket
/// table mapping each point id to its argmax tuple.
struct FilterCopy {
    std::vector<float> vecs;  // (part * m_prime + j) * dim
    KeyMap map;
    std::vector<uint32_t> offsets;
    std::vector<PointId> ids;
};

FilterCopy build_filter_copy(const Dataset& data, const FilterParams& p, uint64_t copy_seed,
                             Exec exec, std::vector<uint32_t>* bucket_of = nullptr);

/// Inner products of q with the filters of one part.
void part_dots(const FilterCopy& c, const FilterParams& p, uint32_t part, std::span<const float> q,
               std::vector<double>& out);

/// Indices whose filter clears alpha * Delta_part - f(alpha, eps), per part.
std::vector<std::vector<uint32_t>> threshold_sets(const FilterCopy& c, const FilterParams& p,
                                                  std::span<const float> q);

uint64_t tuple_key(std::span<const uint32_t> tuple, uint32_t m_prime);

void check_unit(std::span<const float> v, const char* what);

}  // namespace detail

/// Bucket grid over unit vectors: every point lives in exactly one bucket per
/// copy, keyed by its per-part argmax filters. Queries scan the buckets whose
/// filters clear the per-part threshold and report the first point with inner
/// product at least beta. Immutable after build; queries are concurrent-safe.
class FilterIndex {
public:
    static FilterIndex build(const Dataset& data, const FilterParams& params,
                             Exec exec = Exec::parallel);

    SampleResult query(std::span<const float> q) const;

    const FilterParams& params() const { return params_; }
    const Dataset& data() const { return *data_; }
    size_t bucket_count(uint32_t copy) const { return copies_[copy].offsets.size() - 1; }
    std::vector<uint32_t> threshold_set(uint32_t copy, uint32_t part, std::span<const float> q) const;
    uint64_t bucket_key_of(uint32_t copy, std::span<const float> x) const;
    std::span<const PointId> bucket_members(uint32_t copy, uint64_t key) const;
    uint64_t state_hash() const;
    uint64_t memory_bytes() const;

private:
    const Dataset* data_ = nullptr;
    FilterParams params_;
    std::vector<detail::FilterCopy> copies_;
};

/// Independent uniform sampling over the near ball: ceil(c_f ln n) filter
/// copies, per-point back-references, and a weighted-bucket rejection loop
/// that evicts far points as it meets them and restores them before
/// returning. Queries mutate transiently and must be externally serialized.
class NnisFilterIndex {
public:
    static NnisFilterIndex build(const Dataset& data, double alpha, double beta, double eps,
                                 uint64_t seed, double c_f = 3.0, Exec exec = Exec::parallel);

    struct Result {
        std::optional<PointId> id;
        uint64_t inspected = 0;
        uint64_t rounds = 0;
        uint64_t evictions = 0;
        double max_evicted_sim = -2.0;  // stays -2 when nothing was evicted
    };

    Result query(std::span<const float> q, Rng& rng);

    uint32_t copies() const { return static_cast<uint32_t>(copies_.size()); }
    const FilterParams& params() const { return params_; }

    /// Occurrence count of each given point in the buckets enumerated for q.
    std::vector<uint32_t> multiplicities(std::span<const float> q,
                                         std::span<const PointId> pts) const;

    uint64_t state_hash() const;
    uint64_t memory_bytes() const;

private:
    struct Marked {
        // One entry per enumerated non-empty bucket.
        struct Entry {
            uint32_t copy;
            uint32_t bucket;
            uint32_t offset;
            uint32_t size;
        };
        std::vector<Entry> entries;
    };

    Marked mark_buckets(std::span<const float> q) const;
    void clear_marks(const Marked& m) const;

    const Dataset* data_ = nullptr;
    FilterParams params_;  // repetitions == 1; copies_ carries the log-many copies
    std::vector<detail::FilterCopy> copies_;
    std::vector<uint32_t> backref_;  // id * copies + r -> bucket index
    uint64_t static_hash_ = 0;
    mutable std::vector<std::vector<uint8_t>> mark_flags_;  // scratch, per copy
};

}  // namespace fann
