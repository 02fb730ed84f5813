#include "fann/filter.hpp"

#include <algorithm>
#include <bit>
#include <cmath>

namespace fann {

double f_threshold(double alpha, double eps) {
    if (!(alpha >= -1.0 && alpha <= 1.0))
        throw std::invalid_argument("f_threshold: alpha must be in [-1, 1]");
    if (!(eps > 0.0 && eps <= 1.0)) throw std::invalid_argument("f_threshold: eps must be in (0, 1]");
    return std::sqrt(2.0 * (1.0 - alpha * alpha) * std::log(1.0 / eps));
}

double rho_exponent(double alpha, double beta) {
    if (!(-1.0 < beta && beta <= alpha && alpha < 1.0))
        throw std::invalid_argument("rho_exponent: require -1 < beta <= alpha < 1");
    const double num = (1.0 - alpha * alpha) * (1.0 - beta * beta);
    const double den = (1.0 - alpha * beta) * (1.0 - alpha * beta);
    return num / den;
}

uint64_t choose_m(uint64_t n, double alpha, double beta) {
    if (!(-1.0 < beta && beta < alpha && alpha < 1.0))
        throw std::invalid_argument("choose_m: require -1 < beta < alpha < 1");
    if (n == 0) throw std::invalid_argument("choose_m: n must be positive");
    const double exponent = (1.0 - beta * beta) / ((1.0 - alpha * beta) * (1.0 - alpha * beta));
    return static_cast<uint64_t>(std::ceil(std::pow(static_cast<double>(n), exponent)));
}

uint32_t tensor_parts(double alpha) {
    if (!(alpha > -1.0 && alpha < 1.0)) throw std::invalid_argument("tensor_parts: |alpha| must be < 1");
    return static_cast<uint32_t>(std::ceil(1.0 / (1.0 - alpha * alpha) - 1e-9));
}

uint32_t choose_repetitions(double alpha, double eps, double delta) {
    if (!(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("choose_repetitions: delta must be in (0, 1)");
    const double per_copy_drop = std::pow(1.0 - eps, -1.0 / (1.0 - alpha * alpha));
    return std::max<uint32_t>(
        1, static_cast<uint32_t>(std::ceil(std::log(1.0 / delta) * per_copy_drop)));
}

FilterParams FilterParams::create(uint64_t n, double alpha, double beta, double eps, uint64_t seed,
                                  uint32_t repetitions) {
    FilterParams p;
    p.alpha = alpha;
    p.beta = beta;
    p.eps = eps;
    p.seed = seed;
    p.t = tensor_parts(alpha);
    const uint64_t m = choose_m(n, alpha, beta);
    p.m_prime = std::max<uint32_t>(
        1, static_cast<uint32_t>(std::ceil(std::pow(static_cast<double>(m), 1.0 / p.t) - 1e-9)));
    if (p.t * std::ceil(std::log2(static_cast<double>(p.m_prime) + 1)) > 62)
        throw std::invalid_argument("FilterParams: bucket key exceeds 64 bits");
    p.repetitions = repetitions == 0 ? choose_repetitions(alpha, eps, 0.05) : repetitions;
    return p;
}

namespace detail {

void check_unit(std::span<const float> v, const char* what) {
    if (!is_unit_norm(v)) throw std::invalid_argument(std::string(what) + ": point is not unit-norm");
}

uint64_t tuple_key(std::span<const uint32_t> tuple, uint32_t m_prime) {
    uint64_t key = 0;
    for (uint32_t j : tuple) key = key * m_prime + j;
    return key;
}

FilterCopy build_filter_copy(const Dataset& data, const FilterParams& p, uint64_t copy_seed,
                             Exec exec, std::vector<uint32_t>* bucket_of) {
    const size_t d = data.dim();
    const auto n = static_cast<uint32_t>(data.size());
    for (uint32_t id = 0; id < n; ++id) check_unit(data[id], "FilterIndex::build");
    FilterCopy c;
    Rng rng(mix64(copy_seed ^ 0x66696c746572ull));
    c.vecs.resize(static_cast<size_t>(p.t) * p.m_prime * d);
    for (auto& v : c.vecs) v = static_cast<float>(rng.normal());

    // Argmax tuple per point; parallel kernel, keys land in a presized array.
    std::vector<uint64_t> keys(n);
    parallel_for(n, exec, [&](size_t id) {
        const auto x = data[static_cast<PointId>(id)];
        uint64_t key = 0;
        for (uint32_t part = 0; part < p.t; ++part) {
            const float* base = c.vecs.data() + static_cast<size_t>(part) * p.m_prime * d;
            uint32_t best = 0;
            double best_dot = -HUGE_VAL;
            for (uint32_t j = 0; j < p.m_prime; ++j) {
                const float* g = base + static_cast<size_t>(j) * d;
                double dot = 0.0;
                for (size_t i = 0; i < d; ++i) dot += static_cast<double>(g[i]) * x[i];
                if (dot > best_dot) {
                    best_dot = dot;
                    best = j;
                }
            }
            key = key * p.m_prime + best;
        }
        keys[id] = key;
    });

    c.map.reserve(n);
    std::vector<uint32_t> counts;
    std::vector<uint32_t> slot(n);
    for (uint32_t id = 0; id < n; ++id) {
        const uint32_t s = c.map.insert_or_get(keys[id]);
        slot[id] = s;
        if (s == counts.size()) counts.push_back(0);
        ++counts[s];
    }
    c.offsets.assign(counts.size() + 1, 0);
    for (size_t b = 0; b < counts.size(); ++b) c.offsets[b + 1] = c.offsets[b] + counts[b];
    c.ids.resize(n);
    std::vector<uint32_t> cursor(c.offsets.begin(), c.offsets.end() - 1);
    for (uint32_t id = 0; id < n; ++id) c.ids[cursor[slot[id]]++] = id;
    if (bucket_of) *bucket_of = std::move(slot);
    return c;
}

void part_dots(const FilterCopy& c, const FilterParams& p, uint32_t part, std::span<const float> q,
               std::vector<double>& out) {
    const size_t d = q.size();
    out.resize(p.m_prime);
    const float* base = c.vecs.data() + static_cast<size_t>(part) * p.m_prime * d;
    for (uint32_t j = 0; j < p.m_prime; ++j) {
        const float* g = base + static_cast<size_t>(j) * d;
        double dot = 0.0;
        for (size_t i = 0; i < d; ++i) dot += static_cast<double>(g[i]) * q[i];
        out[j] = dot;
    }
}

std::vector<std::vector<uint32_t>> threshold_sets(const FilterCopy& c, const FilterParams& p,
                                                  std::span<const float> q) {
    const double slack = f_threshold(p.alpha, p.eps);
    std::vector<std::vector<uint32_t>> sets(p.t);
    std::vector<double> dots;
    for (uint32_t part = 0; part < p.t; ++part) {
        part_dots(c, p, part, q, dots);
        const double delta_q = *std::max_element(dots.begin(), dots.end());
        const double threshold = p.alpha * delta_q - slack;
        for (uint32_t j = 0; j < p.m_prime; ++j)
            if (dots[j] >= threshold) sets[part].push_back(j);
    }
    return sets;
}

// Lexicographic walk over I_1 x ... x I_t.
template <typename F>
void for_each_tuple(const std::vector<std::vector<uint32_t>>& sets, uint32_t m_prime, F&& f) {
    const size_t t = sets.size();
    std::vector<uint32_t> pos(t, 0), tuple(t);
    while (true) {
        for (size_t i = 0; i < t; ++i) tuple[i] = sets[i][pos[i]];
        if (!f(tuple_key(std::span<const uint32_t>(tuple), m_prime))) return;
        size_t i = t;
        while (i > 0) {
            --i;
            if (++pos[i] < sets[i].size()) break;
            pos[i] = 0;
            if (i == 0) return;
        }
    }
}

}  // namespace detail

FilterIndex FilterIndex::build(const Dataset& data, const FilterParams& params, Exec exec) {
    FilterIndex idx;
    idx.data_ = &data;
    idx.params_ = params;
    idx.copies_.reserve(params.repetitions);
    for (uint32_t r = 0; r < params.repetitions; ++r)
        idx.copies_.push_back(
            detail::build_filter_copy(data, params, mix64(params.seed + 0x9e3779b9ull * (r + 1)), exec));
    return idx;
}

SampleResult FilterIndex::query(std::span<const float> q) const {
    detail::check_unit(q, "FilterIndex::query");
    SampleResult res;
    const Metric metric = Metric::inner(params_.alpha, params_.beta);
    for (const auto& c : copies_) {
        const auto sets = detail::threshold_sets(c, params_, q);
        bool any_empty = false;
        for (const auto& s : sets) any_empty |= s.empty();
        if (any_empty) continue;
        std::optional<PointId> found;
        detail::for_each_tuple(sets, params_.m_prime, [&](uint64_t key) {
            const int64_t b = c.map.find(key);
            if (b < 0) return true;
            for (uint32_t i = c.offsets[b]; i < c.offsets[b + 1]; ++i) {
                const PointId id = c.ids[i];
                ++res.inspected;
                if (distance(metric, (*data_)[id], q) >= params_.beta) {
                    found = id;
                    return false;
                }
            }
            return true;
        });
        if (found) {
            res.id = found;
            return res;
        }
    }
    return res;
}

std::vector<uint32_t> FilterIndex::threshold_set(uint32_t copy, uint32_t part,
                                                 std::span<const float> q) const {
    return detail::threshold_sets(copies_[copy], params_, q)[part];
}

uint64_t FilterIndex::bucket_key_of(uint32_t copy, std::span<const float> x) const {
    const auto& c = copies_[copy];
    uint64_t key = 0;
    std::vector<double> dots;
    for (uint32_t part = 0; part < params_.t; ++part) {
        detail::part_dots(c, params_, part, x, dots);
        const auto best = static_cast<uint32_t>(
            std::max_element(dots.begin(), dots.end()) - dots.begin());
        key = key * params_.m_prime + best;
    }
    return key;
}

std::span<const PointId> FilterIndex::bucket_members(uint32_t copy, uint64_t key) const {
    const auto& c = copies_[copy];
    const int64_t b = c.map.find(key);
    if (b < 0) return {};
    return {c.ids.data() + c.offsets[b], c.offsets[b + 1] - c.offsets[b]};
}

namespace {
uint64_t copy_bytes(const detail::FilterCopy& c) {
    return c.vecs.size() * sizeof(float) + c.ids.size() * sizeof(PointId) +
           c.offsets.size() * sizeof(uint32_t) +
           c.map.key_of_slot().size() * (sizeof(uint64_t) + sizeof(uint32_t)) * 2;
}
}  // namespace

uint64_t FilterIndex::memory_bytes() const {
    uint64_t b = 0;
    for (const auto& c : copies_) b += copy_bytes(c);
    return b;
}

uint64_t FilterIndex::state_hash() const {
    uint64_t h = hash_bytes(&params_, sizeof(params_));
    for (const auto& c : copies_) {
        h = hash_pod_vec(c.vecs, h);
        h = hash_pod_vec(c.map.key_of_slot(), h);
        h = hash_pod_vec(c.offsets, h);
        h = hash_pod_vec(c.ids, h);
    }
    return h;
}

NnisFilterIndex NnisFilterIndex::build(const Dataset& data, double alpha, double beta, double eps,
                                       uint64_t seed, double c_f, Exec exec) {
    NnisFilterIndex idx;
    idx.data_ = &data;
    idx.params_ = FilterParams::create(data.size(), alpha, beta, eps, seed, 1);
    const auto copies = std::max<uint32_t>(
        1, static_cast<uint32_t>(std::ceil(c_f * std::log(static_cast<double>(data.size())))));
    const auto n = static_cast<uint32_t>(data.size());
    idx.backref_.resize(static_cast<size_t>(n) * copies);
    idx.copies_.reserve(copies);
    for (uint32_t r = 0; r < copies; ++r) {
        std::vector<uint32_t> bucket_of;
        idx.copies_.push_back(detail::build_filter_copy(
            data, idx.params_, mix64(seed + 0x9e3779b9ull * (r + 1)), exec, &bucket_of));
        for (uint32_t id = 0; id < n; ++id)
            idx.backref_[static_cast<size_t>(id) * copies + r] = bucket_of[id];
    }
    idx.mark_flags_.resize(copies);
    for (uint32_t r = 0; r < copies; ++r)
        idx.mark_flags_[r].assign(idx.copies_[r].offsets.size() - 1, 0);

    uint64_t h = hash_bytes(&idx.params_, sizeof(idx.params_));
    for (const auto& c : idx.copies_) {
        h = hash_pod_vec(c.vecs, h);
        h = hash_pod_vec(c.map.key_of_slot(), h);
        h = hash_pod_vec(c.offsets, h);
    }
    h = hash_pod_vec(idx.backref_, h);
    idx.static_hash_ = h;
    return idx;
}

NnisFilterIndex::Marked NnisFilterIndex::mark_buckets(std::span<const float> q) const {
    Marked m;
    for (uint32_t r = 0; r < copies_.size(); ++r) {
        const auto& c = copies_[r];
        const auto sets = detail::threshold_sets(c, params_, q);
        bool any_empty = false;
        for (const auto& s : sets) any_empty |= s.empty();
        if (any_empty) continue;
        detail::for_each_tuple(sets, params_.m_prime, [&](uint64_t key) {
            const int64_t b = c.map.find(key);
            if (b >= 0 && c.offsets[b + 1] > c.offsets[b] && !mark_flags_[r][b]) {
                mark_flags_[r][b] = 1;
                m.entries.push_back({r, static_cast<uint32_t>(b), c.offsets[b],
                                     c.offsets[b + 1] - c.offsets[b]});
            }
            return true;
        });
    }
    return m;
}

void NnisFilterIndex::clear_marks(const Marked& m) const {
    for (const auto& e : m.entries) mark_flags_[e.copy][e.bucket] = 0;
}

std::vector<uint32_t> NnisFilterIndex::multiplicities(std::span<const float> q,
                                                      std::span<const PointId> pts) const {
    const Marked m = mark_buckets(q);
    std::vector<uint32_t> out;
    out.reserve(pts.size());
    const uint32_t copies = this->copies();
    for (PointId p : pts) {
        uint32_t c = 0;
        for (uint32_t r = 0; r < copies; ++r)
            c += mark_flags_[r][backref_[static_cast<size_t>(p) * copies + r]];
        out.push_back(c);
    }
    clear_marks(m);
    return out;
}

NnisFilterIndex::Result NnisFilterIndex::query(std::span<const float> q, Rng& rng) {
    detail::check_unit(q, "NnisFilterIndex::query");
    Result res;
    const Metric metric = Metric::inner(params_.alpha, params_.beta);
    const Marked m = mark_buckets(q);

    // Existence check across the enumerated buckets; nothing is evicted yet,
    // so a miss needs no restoration.
    bool exists = false;
    for (const auto& e : m.entries) {
        const auto& c = copies_[e.copy];
        for (uint32_t i = e.offset; i < e.offset + e.size && !exists; ++i) {
            ++res.inspected;
            if (distance(metric, (*data_)[c.ids[i]], q) >= params_.alpha) exists = true;
        }
        if (exists) break;
    }
    if (!exists) {
        clear_marks(m);
        return res;
    }

    // Fenwick tree over live bucket sizes for weighted bucket selection.
    const size_t nb = m.entries.size();
    std::vector<int64_t> fen(nb + 1, 0);
    auto fen_add = [&](size_t i, int64_t v) {
        for (++i; i <= nb; i += i & (~i + 1)) fen[i] += v;
    };
    auto fen_pick = [&](int64_t target) {  // smallest i with prefix_sum(i) > target
        size_t pos = 0;
        size_t mask = std::bit_floor(nb);
        while (mask > 0) {
            const size_t next = pos + mask;
            if (next <= nb && fen[next] <= target) {
                pos = next;
                target -= fen[next];
            }
            mask >>= 1;
        }
        return pos;
    };
    std::vector<uint32_t> live(nb);
    int64_t total = 0;
    for (size_t i = 0; i < nb; ++i) {
        live[i] = m.entries[i].size;
        fen_add(i, m.entries[i].size);
        total += m.entries[i].size;
    }

    struct Evict {
        uint32_t entry;
        uint32_t pos;
    };
    std::vector<Evict> undo;
    const uint32_t copies = this->copies();
    while (!res.id) {
        ++res.rounds;
        const size_t e = fen_pick(static_cast<int64_t>(rng.below(static_cast<uint64_t>(total))));
        const auto& entry = m.entries[e];
        auto& ids = copies_[entry.copy].ids;
        const auto pos = static_cast<uint32_t>(rng.below(live[e]));
        const PointId p = ids[entry.offset + pos];
        ++res.inspected;
        const double sim = distance(metric, (*data_)[p], q);
        if (sim >= params_.alpha) {
            uint32_t cp = 0;
            for (uint32_t r = 0; r < copies; ++r)
                cp += mark_flags_[r][backref_[static_cast<size_t>(p) * copies + r]];
            if (cp <= 1 || rng.real() < 1.0 / cp) res.id = p;
        } else if (sim < params_.beta) {
            const uint32_t last = entry.offset + live[e] - 1;
            std::swap(ids[entry.offset + pos], ids[last]);
            --live[e];
            fen_add(e, -1);
            --total;
            undo.push_back({static_cast<uint32_t>(e), pos});
            ++res.evictions;
            res.max_evicted_sim = std::max(res.max_evicted_sim, sim);
        }
        // in-between points (beta <= sim < alpha) stay put and are never reported
    }

    // Put evicted far points back; reversing the swaps restores exact order.
    for (auto it = undo.rbegin(); it != undo.rend(); ++it) {
        const auto& entry = m.entries[it->entry];
        auto& ids = copies_[entry.copy].ids;
        const uint32_t last = entry.offset + live[it->entry];
        std::swap(ids[entry.offset + it->pos], ids[last]);
        ++live[it->entry];
    }
    clear_marks(m);
    return res;
}

uint64_t NnisFilterIndex::state_hash() const {
    uint64_t h = static_hash_;
    for (const auto& c : copies_) h = hash_pod_vec(c.ids, h);
    return h;
}

uint64_t NnisFilterIndex::memory_bytes() const {
    uint64_t b = backref_.size() * sizeof(uint32_t);
    for (const auto& c : copies_) b += copy_bytes(c);
    return b;
}

}  // namespace fann
