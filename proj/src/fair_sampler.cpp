#include "fann/fair_sampler.hpp"

#include <algorithm>
#include <queue>

namespace fann {

NnsSampler NnsSampler::build(const Dataset& data, const Metric& metric, const LshFamily& family,
                             const LshParams& params, const RankPermutation& perm, Mode mode,
                             uint64_t query_seed, Exec exec) {
    NnsSampler s;
    s.mode_ = mode;
    if (mode == Mode::static_ranks) {
        s.index_ = LshIndex::build(data, metric, family, params, perm, exec);
        return s;
    }

    if (perm.size() != data.size())
        throw std::invalid_argument("NnsSampler::build: permutation does not cover dataset");
    s.data_ = &data;
    s.metric_ = metric;
    s.params_ = params;
    s.hasher_ = LshHasher(family, params.K, params.L, params.seed);
    s.perm_ = perm;
    s.swap_rng_ = Rng(mix64(query_seed ^ 0x72616e6b73ull));
    const auto n = static_cast<uint32_t>(data.size());
    s.point_keys_.resize(static_cast<size_t>(n) * params.L);
    s.tables_.resize(params.L);
    parallel_for(params.L, exec, [&](size_t t) {
        SwapTable& tab = s.tables_[t];
        tab.map.reserve(n);
        for (uint32_t id = 0; id < n; ++id) {
            const uint64_t key = s.hasher_.key(static_cast<uint32_t>(t), data[id]);
            s.point_keys_[static_cast<size_t>(id) * params.L + t] = key;
            const uint32_t slot = tab.map.insert_or_get(key);
            if (slot == tab.buckets.size()) tab.buckets.emplace_back();
            tab.buckets[slot].emplace(perm.rank_of(id), id);
        }
    });
    return s;
}

void NnsSampler::require(Mode m, const char* op) const {
    if (mode_ != m) throw std::logic_error(std::string(op) + ": wrong sampler mode");
}

const LshIndex& NnsSampler::index() const {
    require(Mode::static_ranks, "NnsSampler::index");
    return *index_;
}

SampleResult NnsSampler::query(std::span<const float> q) const {
    require(Mode::static_ranks, "NnsSampler::query");
    const LshIndex& idx = *index_;
    const Dataset& data = idx.data();
    SampleResult res;
    uint32_t best_rank = UINT32_MAX;
    for (uint32_t t = 0; t < idx.params().L; ++t) {
        for (PointId id : idx.bucket(t, q)) {
            ++res.inspected;
            if (classify(idx.metric(), data[id], q) == Zone::near) {
                const uint32_t r = idx.perm().rank_of(id);
                if (r < best_rank) {
                    best_rank = r;
                    res.id = id;
                }
                break;  // first near point is this bucket's min-rank near point
            }
        }
    }
    return res;
}

std::vector<PointId> NnsSampler::query_k_without_replacement(std::span<const float> q,
                                                             size_t k) const {
    require(Mode::static_ranks, "NnsSampler::query_k_without_replacement");
    if (k == 0) throw std::invalid_argument("query_k_without_replacement: k must be at least 1");
    const LshIndex& idx = *index_;
    const Dataset& data = idx.data();
    const auto buckets = idx.query_buckets(q);

    // Merge the rank-sorted buckets, deduplicate by id, keep near points.
    struct Head {
        uint32_t rank;
        uint32_t table;
        uint32_t pos;
        bool operator>(const Head& o) const { return rank > o.rank; }
    };
    std::priority_queue<Head, std::vector<Head>, std::greater<>> heap;
    for (uint32_t t = 0; t < buckets.size(); ++t)
        if (!buckets[t].empty()) heap.push({idx.perm().rank_of(buckets[t][0]), t, 0});

    std::vector<bool> seen(data.size(), false);
    std::vector<PointId> out;
    while (!heap.empty() && out.size() < k) {
        const Head h = heap.top();
        heap.pop();
        const PointId id = buckets[h.table][h.pos];
        if (h.pos + 1 < buckets[h.table].size())
            heap.push({idx.perm().rank_of(buckets[h.table][h.pos + 1]), h.table, h.pos + 1});
        if (seen[id]) continue;
        seen[id] = true;
        if (classify(idx.metric(), data[id], q) == Zone::near) out.push_back(id);
    }
    return out;
}

SampleResult NnsSampler::query_rank_swap(std::span<const float> q) {
    require(Mode::rank_swap, "NnsSampler::query_rank_swap");
    if (q.size() != data_->dim())
        throw std::invalid_argument("query_rank_swap: dimension mismatch");

    SampleResult res;
    uint32_t best_rank = UINT32_MAX;
    for (uint32_t t = 0; t < params_.L; ++t) {
        const int64_t slot = tables_[t].map.find(hasher_.key(t, q));
        if (slot < 0) continue;
        for (const auto& [rank, id] : tables_[t].buckets[slot]) {
            ++res.inspected;
            if (classify(metric_, (*data_)[id], q) == Zone::near) {
                if (rank < best_rank) {
                    best_rank = rank;
                    res.id = id;
                }
                break;
            }
        }
    }
    if (!res.id) return res;

    // Rerandomize: swap the winner with a uniform pick from the ranks at or
    // above it, then fix up the affected buckets.
    const PointId x = *res.id;
    const uint32_t n = perm_.size();
    const uint32_t rx = perm_.rank_of(x);
    const auto target = static_cast<uint32_t>(rx + swap_rng_.below(n - rx));
    const PointId y = perm_.id_at(target);
    if (y != x) {
        for (uint32_t t = 0; t < params_.L; ++t) {
            auto& bx = tables_[t].buckets[static_cast<size_t>(
                tables_[t].map.find(point_keys_[static_cast<size_t>(x) * params_.L + t]))];
            auto& by = tables_[t].buckets[static_cast<size_t>(
                tables_[t].map.find(point_keys_[static_cast<size_t>(y) * params_.L + t]))];
            bx.erase(perm_.rank_of(x));
            by.erase(perm_.rank_of(y));
            bx.emplace(perm_.rank_of(y), x);  // x takes y's rank
            by.emplace(perm_.rank_of(x), y);
        }
        perm_.swap_ranks(x, y);
    }
    return res;
}

std::vector<std::optional<PointId>> NnsSampler::query_k_with_replacement(std::span<const float> q,
                                                                         size_t k) {
    require(Mode::rank_swap, "NnsSampler::query_k_with_replacement");
    if (k == 0) throw std::invalid_argument("query_k_with_replacement: k must be at least 1");
    std::vector<std::optional<PointId>> out;
    out.reserve(k);
    for (size_t i = 0; i < k; ++i) out.push_back(query_rank_swap(q).id);
    return out;
}

bool NnsSampler::buckets_rank_consistent() const {
    if (mode_ == Mode::static_ranks) {
        const LshIndex& idx = *index_;
        for (uint32_t t = 0; t < idx.params().L; ++t)
            for (size_t b = 0; b < idx.bucket_count(t); ++b) {
                const auto span = idx.bucket_by_index(t, b);
                for (size_t i = 1; i < span.size(); ++i)
                    if (idx.perm().rank_of(span[i - 1]) >= idx.perm().rank_of(span[i])) return false;
            }
        return true;
    }
    for (const SwapTable& tab : tables_)
        for (const auto& bucket : tab.buckets)
            for (const auto& [rank, id] : bucket)
                if (perm_.rank_of(id) != rank) return false;
    return true;
}

uint64_t NnsSampler::state_hash() const {
    if (mode_ == Mode::static_ranks) return index_->state_hash();
    uint64_t h = perm_.state_hash();
    for (const SwapTable& tab : tables_) {
        h = hash_pod_vec(tab.map.key_of_slot(), h);
        for (const auto& bucket : tab.buckets)
            for (const auto& [rank, id] : bucket) {
                h = hash_bytes(&rank, sizeof(rank), h);
                h = hash_bytes(&id, sizeof(id), h);
            }
    }
    return h;
}

}  // namespace fann
