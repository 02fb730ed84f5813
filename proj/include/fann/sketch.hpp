#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "fann/core.hpp"

namespace fann {

/// Shared configuration for a family of mergeable distinct-count sketches:
/// list count, per-list capacity, hash range and the pairwise-independent
/// hash seeds. Sketches are mergeable only when built from the same config.
class SketchConfig {
public:
    /// universe: ids live in [0, universe). eps/delta: accuracy target, the
    /// estimate is within (1 +- eps) F0 with probability >= 1 - delta.
    SketchConfig(uint64_t universe, double eps, double delta, uint64_t seed,
                 double c_delta = 8.0, double c_t = 4.0);

    uint32_t lists() const { return lists_; }
    uint32_t capacity() const { return t_; }
    uint64_t range() const { return range_; }
    uint64_t seed() const { return seed_; }

    /// Pairwise-independent hash of list w: ((a*x + b) mod P) mod range.
    uint64_t psi(uint32_t w, uint64_t x) const {
        const unsigned __int128 prod =
            static_cast<unsigned __int128>(a_[w]) * x + b_[w];
        const uint64_t m = mod_mersenne(prod);
        return m % range_;
    }

    bool compatible(const SketchConfig& o) const {
        return lists_ == o.lists_ && t_ == o.t_ && range_ == o.range_ && seed_ == o.seed_;
    }

private:
    static constexpr uint64_t kPrime = (uint64_t{1} << 61) - 1;

    static uint64_t mod_mersenne(unsigned __int128 v) {
        uint64_t lo = static_cast<uint64_t>(v & kPrime);
        uint64_t hi = static_cast<uint64_t>(v >> 61);
        uint64_t r = lo + hi;
        // v < 2^122, so one extra fold suffices.
        r = (r & kPrime) + (r >> 61);
        if (r >= kPrime) r -= kPrime;
        return r;
    }

    uint32_t lists_;
    uint32_t t_;
    uint64_t range_;
    uint64_t seed_;
    std::vector<uint64_t> a_, b_;
};

/// Mergeable distinct-element estimator: per list, the capacity() smallest
/// distinct hash values seen so far, sorted ascending.
class DistinctSketch {
public:
    explicit DistinctSketch(std::shared_ptr<const SketchConfig> cfg);

    void insert(uint64_t id);

    /// Union semantics: afterwards this sketch equals the sketch of the union
    /// of both input streams, value for value.
    void merge_in_place(const DistinctSketch& other);

    static DistinctSketch merge(const DistinctSketch& a, const DistinctSketch& b) {
        DistinctSketch out = a;
        out.merge_in_place(b);
        return out;
    }

    /// F0 estimate: exact count while lists are under-full, otherwise the
    /// median of capacity * range / v_w over lists, rounded to nearest.
    uint64_t estimate() const;

    std::span<const uint64_t> list(uint32_t w) const {
        return {vals_.data() + static_cast<size_t>(w) * cfg_->capacity(), len_[w]};
    }

    const SketchConfig& config() const { return *cfg_; }
    uint64_t state_hash() const;

private:
    std::shared_ptr<const SketchConfig> cfg_;
    std::vector<uint64_t> vals_;  // lists() * capacity(), list w sorted ascending
    std::vector<uint16_t> len_;
};

}  // namespace fann
