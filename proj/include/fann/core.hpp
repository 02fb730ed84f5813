#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#if defined(_OPENMP)
#include <omp.h>
#endif

namespace fann {

using PointId = uint32_t;

/// splitmix64 finalizer; bijective on 64-bit values.
inline uint64_t mix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ull;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
    return x ^ (x >> 31);
}

/// FNV-1a over raw bytes, used for structure state hashes.
inline uint64_t hash_bytes(const void* data, size_t len, uint64_t h = 1469598103934665603ull) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 1099511628211ull;
    }
    return h;
}

template <typename T>
uint64_t hash_pod_vec(const std::vector<T>& v, uint64_t h = 1469598103934665603ull) {
    static_assert(std::is_trivially_copyable_v<T>);
    return hash_bytes(v.data(), v.size() * sizeof(T), h);
}

/// Seeded xoshiro256** generator. Identical seeds give identical draw
/// sequences; `derive` produces decorrelated child streams so that builds,
/// trials and queries can each own private randomness.
class Rng {
public:
    explicit Rng(uint64_t seed) : seed_(seed) {
        uint64_t x = seed;
        for (auto& w : s_) {
            x += 0x9e3779b97f4a7c15ull;
            w = mix64(x);
        }
    }

    uint64_t next() {
        const uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    /// Unbiased uniform draw in [0, bound). bound must be positive.
    uint64_t below(uint64_t bound) {
        if (bound == 0) throw std::invalid_argument("Rng::below: bound must be positive");
        unsigned __int128 m = static_cast<unsigned __int128>(next()) * bound;
        auto lo = static_cast<uint64_t>(m);
        if (lo < bound) {
            const uint64_t t = (0 - bound) % bound;
            while (lo < t) {
                m = static_cast<unsigned __int128>(next()) * bound;
                lo = static_cast<uint64_t>(m);
            }
        }
        return static_cast<uint64_t>(m >> 64);
    }

    /// Uniform double in [0, 1) with 53 random bits.
    double real() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    /// Standard normal draw (Box-Muller, pair cached).
    double normal() {
        if (has_spare_) {
            has_spare_ = false;
            return spare_;
        }
        const double u1 = 1.0 - real();  // (0, 1]
        const double u2 = real();
        const double mag = std::sqrt(-2.0 * std::log(u1));
        spare_ = mag * std::sin(6.283185307179586477 * u2);
        has_spare_ = true;
        return mag * std::cos(6.283185307179586477 * u2);
    }

    bool bernoulli(double p) { return real() < p; }

    /// Child generator keyed on (construction seed, stream tag).
    Rng derive(uint64_t stream) const { return Rng(mix64(seed_ ^ mix64(stream ^ 0xd1b54a32d192ed03ull))); }

    uint64_t seed() const { return seed_; }

private:
    static uint64_t rotl(uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }

    uint64_t seed_;
    std::array<uint64_t, 4> s_{};
    double spare_ = 0.0;
    bool has_spare_ = false;
};

/// Immutable collection of d-dimensional points. A point's id is its
/// insertion position; coordinates are stored contiguously row-major.
class Dataset {
public:
    explicit Dataset(size_t dim) : dim_(dim) {
        if (dim == 0) throw std::invalid_argument("Dataset: dimension must be at least 1");
    }

    Dataset(size_t dim, std::vector<float> flat) : dim_(dim), flat_(std::move(flat)) {
        if (dim == 0) throw std::invalid_argument("Dataset: dimension must be at least 1");
        if (flat_.size() % dim_ != 0)
            throw std::invalid_argument("Dataset: flat size not a multiple of dimension");
    }

    void add(std::span<const float> p) {
        if (p.size() != dim_) throw std::invalid_argument("Dataset::add: dimension mismatch");
        flat_.insert(flat_.end(), p.begin(), p.end());
    }

    size_t size() const { return flat_.size() / dim_; }
    size_t dim() const { return dim_; }

    std::span<const float> operator[](PointId id) const {
        return {flat_.data() + static_cast<size_t>(id) * dim_, dim_};
    }

    const std::vector<float>& raw() const { return flat_; }

private:
    size_t dim_;
    std::vector<float> flat_;
};

enum class MetricKind { euclidean, hamming, inner_product };

/// near / cnear / far classification of a point pair.
enum class Zone { near, cnear, far };

/// Distance (or similarity) thresholds. Distance metrics carry a radius r
/// and approximation c > 1; inner product carries -1 < beta < alpha < 1 and
/// assumes unit-norm inputs (tolerance 1e-6).
struct Metric {
    MetricKind kind = MetricKind::euclidean;
    double r = 0.0;
    double c = 0.0;
    double alpha = 0.0;
    double beta = 0.0;

    static Metric distance_based(MetricKind kind, double r, double c) {
        if (kind == MetricKind::inner_product)
            throw std::invalid_argument("Metric: inner_product takes alpha/beta thresholds");
        Metric m;
        m.kind = kind;
        m.r = r;
        m.c = c;
        m.validate();
        return m;
    }

    static Metric inner(double alpha, double beta) {
        Metric m;
        m.kind = MetricKind::inner_product;
        m.alpha = alpha;
        m.beta = beta;
        m.validate();
        return m;
    }

    void validate() const {
        if (kind == MetricKind::inner_product) {
            if (!(-1.0 < beta && beta < alpha && alpha < 1.0))
                throw std::invalid_argument("Metric: require -1 < beta < alpha < 1");
        } else {
            if (!(r > 0.0)) throw std::invalid_argument("Metric: require r > 0");
            if (!(c > 1.0)) throw std::invalid_argument("Metric: require c > 1");
        }
    }

    bool similarity_based() const { return kind == MetricKind::inner_product; }

    /// Classify a raw distance (or inner product) value.
    Zone zone_of(double value) const {
        if (similarity_based()) {
            if (value >= alpha) return Zone::near;
            if (value >= beta) return Zone::cnear;
            return Zone::far;
        }
        if (value <= r) return Zone::near;
        if (value <= c * r) return Zone::cnear;
        return Zone::far;
    }
};

/// Raw distance for euclidean/hamming, inner product for inner_product
/// (callers order by zone_of, not by raw value).
double distance(const Metric& m, std::span<const float> a, std::span<const float> b);

inline Zone classify(const Metric& m, std::span<const float> a, std::span<const float> b) {
    return m.zone_of(distance(m, a, b));
}

inline bool is_unit_norm(std::span<const float> p, double tol = 1e-6) {
    double s = 0.0;
    for (float v : p) s += static_cast<double>(v) * v;
    return std::abs(std::sqrt(s) - 1.0) <= tol;
}

/// Bijection between point ids and ranks. rank_of and id_at stay mutually
/// inverse through any sequence of swaps.
class RankPermutation {
public:
    /// Uniformly random permutation via Fisher-Yates.
    static RankPermutation random(uint32_t n, Rng& rng) {
        if (n == 0) throw std::invalid_argument("RankPermutation: n must be at least 1");
        RankPermutation p;
        p.rank_.resize(n);
        p.inv_.resize(n);
        for (uint32_t i = 0; i < n; ++i) p.rank_[i] = i;
        for (uint32_t i = n - 1; i > 0; --i) {
            const auto j = static_cast<uint32_t>(rng.below(i + 1));
            std::swap(p.rank_[i], p.rank_[j]);
        }
        for (uint32_t id = 0; id < n; ++id) p.inv_[p.rank_[id]] = id;
        return p;
    }

    uint32_t size() const { return static_cast<uint32_t>(rank_.size()); }

    uint32_t rank_of(PointId id) const {
        check(id);
        return rank_[id];
    }

    PointId id_at(uint32_t rank) const {
        check(rank);
        return inv_[rank];
    }

    /// Exchange the ranks of two ids; all other ranks are unchanged.
    void swap_ranks(PointId a, PointId b) {
        check(a);
        check(b);
        std::swap(rank_[a], rank_[b]);
        inv_[rank_[a]] = a;
        inv_[rank_[b]] = b;
    }

    uint64_t state_hash() const { return hash_pod_vec(inv_, hash_pod_vec(rank_)); }

private:
    void check(uint32_t v) const {
        if (v >= rank_.size()) throw std::out_of_range("RankPermutation: id out of range");
    }

    std::vector<uint32_t> rank_;  // id -> rank
    std::vector<uint32_t> inv_;   // rank -> id
};

/// Execution policy for the data-parallel kernels. `serial` is the reference
/// path; `parallel` runs the same loop under OpenMP and must produce
/// identical results.
enum class Exec { serial, parallel };

template <typename F>
void parallel_for(size_t n, Exec exec, F&& f) {
    if (exec == Exec::parallel) {
#pragma omp parallel for schedule(dynamic)
        for (int64_t i = 0; i < static_cast<int64_t>(n); ++i) f(static_cast<size_t>(i));
    } else {
        for (size_t i = 0; i < n; ++i) f(i);
    }
}

/// Outcome of one sampling query: the sampled id (empty if no near point was
/// produced) and how many points the query inspected.
struct SampleResult {
    std::optional<PointId> id;
    uint64_t inspected = 0;
};

}  // namespace fann
