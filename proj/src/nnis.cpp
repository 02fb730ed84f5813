#include "fann/nnis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fann {

SegmentSampler SegmentSampler::build(const Dataset& data, const Metric& metric,
                                     const LshFamily& family, const LshParams& params,
                                     const RankPermutation& perm, uint64_t sketch_seed,
                                     const NnisConstants& consts, Exec exec) {
    SegmentSampler s;
    s.index_ = LshIndex::build(data, metric, family, params, perm, exec);
    const auto n = static_cast<uint64_t>(data.size());
    const double ln_n = std::log(static_cast<double>(n));
    s.tau_ = static_cast<uint32_t>(std::ceil(ln_n));
    s.lambda_ = std::max<uint32_t>(1, static_cast<uint32_t>(std::ceil(consts.c_lambda * ln_n)));
    s.sigma_ = std::max<uint32_t>(1, static_cast<uint32_t>(std::ceil(consts.c_sigma * ln_n * ln_n)));
    s.n2_ = static_cast<uint32_t>(std::bit_ceil(n));

    const double delta = 1.0 / (static_cast<double>(n) * n * n);
    s.sketch_cfg_ = std::make_shared<SketchConfig>(n, consts.sketch_eps, std::min(delta, 0.5),
                                                   sketch_seed, consts.c_delta, consts.c_t);

    s.sketches_.resize(params.L);
    parallel_for(params.L, exec, [&](size_t t) {
        const auto tt = static_cast<uint32_t>(t);
        const size_t buckets = s.index_.bucket_count(tt);
        s.sketches_[t].resize(buckets);
        for (size_t b = 0; b < buckets; ++b) {
            const auto ids = s.index_.bucket_by_index(tt, b);
            if (ids.size() < s.tau_) continue;  // synthesized on demand at query time
            DistinctSketch sk(s.sketch_cfg_);
            for (PointId id : ids) sk.insert(id);
            s.sketches_[t][b].emplace(std::move(sk));
        }
    });
    return s;
}

std::vector<int64_t> SegmentSampler::resolve_buckets(std::span<const float> q) const {
    std::vector<int64_t> slots(index_.params().L);
    for (uint32_t t = 0; t < index_.params().L; ++t) slots[t] = index_.bucket_index(t, q);
    return slots;
}

uint64_t SegmentSampler::estimate_collisions(std::span<const float> q) const {
    const auto slots = resolve_buckets(q);
    DistinctSketch merged(sketch_cfg_);
    for (uint32_t t = 0; t < slots.size(); ++t) {
        if (slots[t] < 0) continue;
        const auto& sk = sketches_[t][static_cast<size_t>(slots[t])];
        if (sk) {
            merged.merge_in_place(*sk);
        } else {
            for (PointId id : index_.bucket_by_index(t, static_cast<size_t>(slots[t])))
                merged.insert(id);
        }
    }
    return merged.estimate();
}

std::vector<PointId> SegmentSampler::collect_near(const std::vector<int64_t>& slots,
                                                  std::span<const float> q, uint32_t lo,
                                                  uint32_t hi, uint64_t& inspected) const {
    const RankPermutation& perm = index_.perm();
    std::vector<PointId> cand;
    for (uint32_t t = 0; t < slots.size(); ++t) {
        if (slots[t] < 0) continue;
        const auto ids = index_.bucket_by_index(t, static_cast<size_t>(slots[t]));
        const auto* first = std::lower_bound(
            ids.data(), ids.data() + ids.size(), lo,
            [&](PointId id, uint32_t r) { return perm.rank_of(id) < r; });
        for (const auto* p = first; p != ids.data() + ids.size() && perm.rank_of(*p) < hi; ++p)
            cand.push_back(*p);
    }
    std::sort(cand.begin(), cand.end());
    cand.erase(std::unique(cand.begin(), cand.end()), cand.end());
    std::vector<PointId> near;
    for (PointId id : cand) {
        ++inspected;
        if (classify(index_.metric(), index_.data()[id], q) == Zone::near) near.push_back(id);
    }
    return near;
}

std::vector<PointId> SegmentSampler::segment_near_neighbors(std::span<const float> q, uint32_t k,
                                                            uint32_t h) const {
    if (k == 0 || !std::has_single_bit(k) || k > n2_)
        throw std::invalid_argument("segment_near_neighbors: k must be a power of two in [1, padded n]");
    if (h >= k) throw std::out_of_range("segment_near_neighbors: segment index out of range");
    const uint32_t width = n2_ / k;
    uint64_t inspected = 0;
    return collect_near(resolve_buckets(q), q, h * width, h * width + width, inspected);
}

SegmentSampler::Result SegmentSampler::query(std::span<const float> q, Rng& rng) const {
    Result res;
    const auto slots = resolve_buckets(q);
    const uint64_t s_hat = [&] {
        DistinctSketch merged(sketch_cfg_);
        for (uint32_t t = 0; t < slots.size(); ++t) {
            if (slots[t] < 0) continue;
            const auto& sk = sketches_[t][static_cast<size_t>(slots[t])];
            if (sk)
                merged.merge_in_place(*sk);
            else
                for (PointId id : index_.bucket_by_index(t, static_cast<size_t>(slots[t])))
                    merged.insert(id);
        }
        return merged.estimate();
    }();

    uint32_t k = s_hat == 0 ? 1
                            : static_cast<uint32_t>(std::min<uint64_t>(std::bit_ceil(2 * s_hat), n2_));
    uint32_t sigma_fail = 0;
    const double lam_cap = static_cast<double>(lambda_);
    while (k >= 1) {
        ++res.iterations;
        const auto h = static_cast<uint32_t>(rng.below(k));
        const uint32_t width = n2_ / k;
        const auto near = collect_near(slots, q, h * width, h * width + width, res.inspected);
        if (++sigma_fail == sigma_) {
            k /= 2;
            sigma_fail = 0;
        }
        if (!near.empty()) {
            if (near.size() > lambda_) ++res.clamp_events;
            const double accept = std::min(static_cast<double>(near.size()) / lam_cap, 1.0);
            if (rng.real() < accept) {
                res.id = near[rng.below(near.size())];
                return res;
            }
        }
    }
    return res;
}

uint64_t SegmentSampler::memory_bytes() const {
    uint64_t b = index_.memory_bytes();
    for (const auto& table : sketches_)
        for (const auto& sk : table)
            if (sk) {
                const auto& cfg = sk->config();
                b += static_cast<uint64_t>(cfg.lists()) * (cfg.capacity() * sizeof(uint64_t) + 2);
            }
    return b;
}

uint64_t SegmentSampler::state_hash() const {
    uint64_t h = index_.state_hash();
    h = hash_bytes(&tau_, sizeof(tau_), h);
    h = hash_bytes(&lambda_, sizeof(lambda_), h);
    h = hash_bytes(&sigma_, sizeof(sigma_), h);
    for (const auto& table : sketches_)
        for (const auto& sk : table) h = sk ? mix64(h ^ sk->state_hash()) : mix64(h ^ 0x6e6f6e65ull);
    return h;
}

}  // namespace fann
