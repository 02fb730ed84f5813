#include "fann/lsh.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fann {

namespace {

double norm_cdf(double x) { return 0.5 * std::erfc(-x / 1.4142135623730950488); }

uint64_t combine_key(uint64_t h, uint64_t v) {
    h ^= v;
    h *= 1099511628211ull;
    return h;
}

}  // namespace

LshFamily LshFamily::bit_sampling(uint32_t dim) { return {FamilyKind::bit_sampling, dim, 0.0}; }
LshFamily LshFamily::hyperplane(uint32_t dim) { return {FamilyKind::hyperplane, dim, 0.0}; }

LshFamily LshFamily::p_stable(uint32_t dim, double width) {
    if (!(width > 0.0)) throw std::invalid_argument("LshFamily: p_stable width must be positive");
    return {FamilyKind::p_stable, dim, width};
}

LshFamily LshFamily::default_for(const Metric& metric, uint32_t dim) {
    switch (metric.kind) {
        case MetricKind::hamming: return bit_sampling(dim);
        case MetricKind::inner_product: return hyperplane(dim);
        case MetricKind::euclidean: return p_stable(dim, metric.r);
    }
    throw std::logic_error("LshFamily::default_for: unknown metric");
}

double LshFamily::collision_prob(double value) const {
    switch (kind) {
        case FamilyKind::bit_sampling:
            return 1.0 - value / static_cast<double>(dim);
        case FamilyKind::hyperplane: {
            // value is an inner product of unit vectors
            const double s = std::clamp(value, -1.0, 1.0);
            return 1.0 - std::acos(s) / 3.14159265358979323846;
        }
        case FamilyKind::p_stable: {
            if (value <= 0.0) return 1.0;
            const double s = width / value;
            return 1.0 - 2.0 * norm_cdf(-s) -
                   (2.0 / (std::sqrt(2.0 * 3.14159265358979323846) * s)) *
                       (1.0 - std::exp(-0.5 * s * s));
        }
    }
    throw std::logic_error("LshFamily::collision_prob: unknown kind");
}

void LshFamily::check_compatible(const Metric& metric) const {
    const bool ok = (kind == FamilyKind::bit_sampling && metric.kind == MetricKind::hamming) ||
                    (kind == FamilyKind::hyperplane && metric.kind == MetricKind::inner_product) ||
                    (kind == FamilyKind::p_stable && metric.kind == MetricKind::euclidean);
    if (!ok) throw std::invalid_argument("LshFamily: family not applicable to this metric");
}

LshParams compute_params(const LshFamily& family, const Metric& metric, size_t n,
                         double c_l, uint64_t seed) {
    family.check_compatible(metric);
    if (n == 0) throw std::invalid_argument("compute_params: n must be positive");
    if (!(c_l >= 1.0)) throw std::invalid_argument("compute_params: c_l must be at least 1");

    LshParams p;
    p.c_l = c_l;
    p.seed = seed;
    if (metric.similarity_based()) {
        p.p1_base = family.collision_prob(metric.alpha);
        p.p2_base = family.collision_prob(metric.beta);
    } else {
        p.p1_base = family.collision_prob(metric.r);
        p.p2_base = family.collision_prob(metric.c * metric.r);
    }
    if (!(p.p2_base > 0.0 && p.p1_base < 1.0 && p.p1_base > p.p2_base))
        throw std::invalid_argument("compute_params: family is not sensitive for this metric");
    p.rho = std::log(p.p1_base) / std::log(p.p2_base);
    if (p.rho >= 1.0)
        throw std::invalid_argument("compute_params: degenerate sensitivity (rho >= 1)");

    const double k_exact = std::log(static_cast<double>(n)) / -std::log(p.p2_base);
    p.K = std::max<uint32_t>(1, static_cast<uint32_t>(std::ceil(k_exact - 1e-9)));
    p.p1 = std::pow(p.p1_base, p.K);
    p.p2 = std::pow(p.p2_base, p.K);
    const double l_exact = c_l * std::log(static_cast<double>(n)) / p.p1;
    p.L = std::max<uint32_t>(1, static_cast<uint32_t>(std::ceil(l_exact - 1e-9)));
    return p;
}

void KeyMap::reserve(size_t expected) {
    size_t cap = std::bit_ceil(std::max<size_t>(16, expected * 2));
    keys_.assign(cap, 0);
    slots_.assign(cap, kEmpty);
    mask_ = cap - 1;
    key_of_slot_.clear();
    key_of_slot_.reserve(expected);
    count_ = 0;
}

void KeyMap::grow() {
    std::vector<uint64_t> old_keys = std::move(key_of_slot_);
    reserve(old_keys.size() * 2 + 16);
    for (uint64_t k : old_keys) insert_or_get(k);
}

uint32_t KeyMap::insert_or_get(uint64_t key) {
    if (keys_.empty()) reserve(16);
    if (count_ * 2 >= keys_.size()) grow();
    size_t i = mix64(key) & mask_;
    while (slots_[i] != kEmpty) {
        if (keys_[i] == key) return slots_[i];
        i = (i + 1) & mask_;
    }
    keys_[i] = key;
    slots_[i] = static_cast<uint32_t>(count_);
    key_of_slot_.push_back(key);
    return static_cast<uint32_t>(count_++);
}

int64_t KeyMap::find(uint64_t key) const {
    if (keys_.empty()) return -1;
    size_t i = mix64(key) & mask_;
    while (slots_[i] != kEmpty) {
        if (keys_[i] == key) return slots_[i];
        i = (i + 1) & mask_;
    }
    return -1;
}

LshHasher::LshHasher(const LshFamily& family, uint32_t K, uint32_t L, uint64_t seed)
    : kind_(family.kind), dim_(family.dim), K_(K), L_(L), width_(family.width) {
    const size_t total = static_cast<size_t>(K) * L;
    Rng rng(mix64(seed ^ 0x6c7368ull));
    switch (kind_) {
        case FamilyKind::bit_sampling:
            coords_.resize(total);
            for (auto& c : coords_) c = static_cast<uint32_t>(rng.below(dim_));
            break;
        case FamilyKind::hyperplane:
            vecs_.resize(total * dim_);
            for (auto& v : vecs_) v = static_cast<float>(rng.normal());
            break;
        case FamilyKind::p_stable:
            vecs_.resize(total * dim_);
            for (auto& v : vecs_) v = static_cast<float>(rng.normal());
            offsets_.resize(total);
            for (auto& o : offsets_) o = rng.real() * width_;
            break;
    }
}

uint64_t LshHasher::base_value(uint32_t table, uint32_t k, std::span<const float> x) const {
    const size_t fn = static_cast<size_t>(table) * K_ + k;
    switch (kind_) {
        case FamilyKind::bit_sampling: {
            uint32_t bits;
            const float v = x[coords_[fn]];
            std::memcpy(&bits, &v, sizeof(bits));
            return bits;
        }
        case FamilyKind::hyperplane: {
            const float* g = vecs_.data() + fn * dim_;
            double dot = 0.0;
            for (uint32_t i = 0; i < dim_; ++i) dot += static_cast<double>(g[i]) * x[i];
            return dot >= 0.0 ? 1 : 0;
        }
        case FamilyKind::p_stable: {
            const float* g = vecs_.data() + fn * dim_;
            double dot = 0.0;
            for (uint32_t i = 0; i < dim_; ++i) dot += static_cast<double>(g[i]) * x[i];
            return static_cast<uint64_t>(
                static_cast<int64_t>(std::floor((dot + offsets_[fn]) / width_)));
        }
    }
    throw std::logic_error("LshHasher: unknown kind");
}

uint64_t LshHasher::key(uint32_t table, std::span<const float> x) const {
    uint64_t h = 1469598103934665603ull;
    for (uint32_t k = 0; k < K_; ++k) h = combine_key(h, base_value(table, k, x));
    return mix64(h);
}

LshIndex LshIndex::build(const Dataset& data, const Metric& metric, const LshFamily& family,
                         const LshParams& params, const RankPermutation& perm, Exec exec) {
    if (perm.size() != data.size())
        throw std::invalid_argument("LshIndex::build: permutation does not cover dataset");
    if (family.dim != data.dim())
        throw std::invalid_argument("LshIndex::build: family dimension mismatch");

    LshIndex idx;
    idx.data_ = &data;
    idx.metric_ = metric;
    idx.family_ = family;
    idx.params_ = params;
    idx.hasher_ = LshHasher(family, params.K, params.L, params.seed);
    idx.perm_ = perm;
    idx.tables_.resize(params.L);

    const auto n = static_cast<uint32_t>(data.size());
    parallel_for(params.L, exec, [&](size_t t) {
        Table& tab = idx.tables_[t];
        std::vector<uint64_t> keys(n);
        for (uint32_t id = 0; id < n; ++id) keys[id] = idx.hasher_.key(static_cast<uint32_t>(t), data[id]);

        tab.map.reserve(n);
        std::vector<uint32_t> counts;
        std::vector<uint32_t> slot_of(n);
        for (uint32_t id = 0; id < n; ++id) {
            const uint32_t s = tab.map.insert_or_get(keys[id]);
            slot_of[id] = s;
            if (s == counts.size()) counts.push_back(0);
            ++counts[s];
        }
        tab.offsets.assign(counts.size() + 1, 0);
        for (size_t b = 0; b < counts.size(); ++b) tab.offsets[b + 1] = tab.offsets[b] + counts[b];
        tab.ids.resize(n);
        // Filling in global rank order leaves every bucket rank-sorted.
        std::vector<uint32_t> cursor(tab.offsets.begin(), tab.offsets.end() - 1);
        for (uint32_t r = 0; r < n; ++r) {
            const PointId id = perm.id_at(r);
            tab.ids[cursor[slot_of[id]]++] = id;
        }
    });
    return idx;
}

int64_t LshIndex::bucket_index(uint32_t table, std::span<const float> q) const {
    check_dim(q);
    return tables_[table].map.find(hasher_.key(table, q));
}

std::span<const PointId> LshIndex::bucket_by_index(uint32_t table, size_t idx) const {
    const Table& tab = tables_[table];
    return {tab.ids.data() + tab.offsets[idx], tab.offsets[idx + 1] - tab.offsets[idx]};
}

std::span<const PointId> LshIndex::bucket(uint32_t table, std::span<const float> q) const {
    const int64_t b = bucket_index(table, q);
    if (b < 0) return {};
    return bucket_by_index(table, static_cast<size_t>(b));
}

std::vector<std::span<const PointId>> LshIndex::query_buckets(std::span<const float> q) const {
    check_dim(q);
    std::vector<std::span<const PointId>> out;
    out.reserve(params_.L);
    for (uint32_t t = 0; t < params_.L; ++t) out.push_back(bucket(t, q));
    return out;
}

SampleResult LshIndex::standard_ann_query(std::span<const float> q) const {
    check_dim(q);
    SampleResult res;
    const uint64_t far_cap = 3ull * params_.L;
    uint64_t far_seen = 0;
    for (uint32_t t = 0; t < params_.L; ++t) {
        for (PointId id : bucket(t, q)) {
            ++res.inspected;
            const Zone z = classify(metric_, (*data_)[id], q);
            if (z != Zone::far) {
                res.id = id;
                return res;
            }
            if (++far_seen > far_cap) return res;
        }
    }
    return res;
}

uint64_t LshIndex::memory_bytes() const {
    uint64_t b = 2ull * perm_.size() * sizeof(uint32_t);
    for (const Table& t : tables_) {
        b += t.ids.size() * sizeof(PointId) + t.offsets.size() * sizeof(uint32_t);
        b += t.map.key_of_slot().size() * (sizeof(uint64_t) + sizeof(uint32_t)) * 2;
    }
    return b;
}

uint64_t LshIndex::state_hash() const {
    uint64_t h = perm_.state_hash();
    for (const Table& t : tables_) {
        h = hash_pod_vec(t.map.key_of_slot(), h);
        h = hash_pod_vec(t.offsets, h);
        h = hash_pod_vec(t.ids, h);
    }
    return h;
}

}  // namespace fann
