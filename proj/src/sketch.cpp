#include "fann/sketch.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fann {

SketchConfig::SketchConfig(uint64_t universe, double eps, double delta, uint64_t seed,
                           double c_delta, double c_t)
    : seed_(seed) {
    if (universe == 0 || universe > (uint64_t{1} << 20))
        throw std::invalid_argument("SketchConfig: universe must be in [1, 2^20]");
    if (!(eps > 0.0 && eps < 1.0) || !(delta > 0.0 && delta < 1.0))
        throw std::invalid_argument("SketchConfig: eps and delta must be in (0, 1)");
    lists_ = static_cast<uint32_t>(std::ceil(c_delta * std::log(1.0 / delta)));
    lists_ = std::max(lists_, 1u);
    t_ = static_cast<uint32_t>(std::ceil(c_t / (eps * eps)));
    t_ = std::max(t_, 1u);
    range_ = universe * universe * universe;
    Rng rng(mix64(seed ^ 0x736b65746368ull));
    a_.resize(lists_);
    b_.resize(lists_);
    for (uint32_t w = 0; w < lists_; ++w) {
        a_[w] = 1 + rng.below(kPrime - 1);
        b_[w] = rng.below(kPrime);
    }
}

DistinctSketch::DistinctSketch(std::shared_ptr<const SketchConfig> cfg) : cfg_(std::move(cfg)) {
    vals_.resize(static_cast<size_t>(cfg_->lists()) * cfg_->capacity());
    len_.assign(cfg_->lists(), 0);
}

void DistinctSketch::insert(uint64_t id) {
    const uint32_t t = cfg_->capacity();
    for (uint32_t w = 0; w < cfg_->lists(); ++w) {
        const uint64_t v = cfg_->psi(w, id);
        uint64_t* lst = vals_.data() + static_cast<size_t>(w) * t;
        uint16_t& len = len_[w];
        if (len == t && v >= lst[t - 1]) continue;
        uint64_t* pos = std::lower_bound(lst, lst + len, v);
        if (pos != lst + len && *pos == v) continue;  // duplicates ignored
        const uint16_t keep = (len < t) ? len : static_cast<uint16_t>(t - 1);
        std::copy_backward(pos, lst + keep, lst + keep + 1);
        *pos = v;
        if (len < t) ++len;
    }
}

void DistinctSketch::merge_in_place(const DistinctSketch& other) {
    if (!cfg_->compatible(other.config()))
        throw std::invalid_argument("DistinctSketch::merge: sketches built with different configs");
    const uint32_t t = cfg_->capacity();
    std::vector<uint64_t> scratch(t);
    for (uint32_t w = 0; w < cfg_->lists(); ++w) {
        const uint64_t* a = vals_.data() + static_cast<size_t>(w) * t;
        const uint64_t* b = other.vals_.data() + static_cast<size_t>(w) * t;
        const uint16_t la = len_[w], lb = other.len_[w];
        uint16_t i = 0, j = 0, k = 0;
        while (k < t && (i < la || j < lb)) {
            uint64_t v;
            if (j >= lb || (i < la && a[i] <= b[j])) {
                v = a[i++];
                if (j < lb && b[j] == v) ++j;
            } else {
                v = b[j++];
            }
            scratch[k++] = v;
        }
        std::copy(scratch.begin(), scratch.begin() + k,
                  vals_.begin() + static_cast<size_t>(w) * t);
        len_[w] = k;
    }
}

uint64_t DistinctSketch::estimate() const {
    const uint32_t t = cfg_->capacity();
    uint16_t min_len = len_[0], max_len = len_[0];
    for (uint16_t l : len_) {
        min_len = std::min(min_len, l);
        max_len = std::max(max_len, l);
    }
    if (min_len < t) return max_len;  // exact regime
    std::vector<double> est(cfg_->lists());
    const double tn3 = static_cast<double>(t) * static_cast<double>(cfg_->range());
    for (uint32_t w = 0; w < cfg_->lists(); ++w) {
        const uint64_t v = std::max<uint64_t>(vals_[static_cast<size_t>(w) * t + t - 1], 1);
        est[w] = tn3 / static_cast<double>(v);
    }
    const size_t mid = est.size() / 2;
    std::nth_element(est.begin(), est.begin() + mid, est.end());
    double med = est[mid];
    if (est.size() % 2 == 0) {
        const double lo = *std::max_element(est.begin(), est.begin() + mid);
        med = 0.5 * (lo + med);
    }
    return static_cast<uint64_t>(std::llround(med));
}

uint64_t DistinctSketch::state_hash() const {
    uint64_t h = hash_pod_vec(len_);
    const uint32_t t = cfg_->capacity();
    for (uint32_t w = 0; w < cfg_->lists(); ++w)
        h = hash_bytes(vals_.data() + static_cast<size_t>(w) * t, len_[w] * sizeof(uint64_t), h);
    return h;
}

}  // namespace fann
