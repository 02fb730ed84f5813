#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <set>

#include "fann/gen.hpp"
#include "fann/nnis.hpp"
#include "fann/oracle.hpp"
#include "fann/stats.hpp"

using namespace fann;

namespace {

PlantedInstance hamming_instance(uint32_t n, uint32_t near, uint32_t cnear, uint64_t seed) {
    Rng rng(seed);
    PlantedSpec spec;
    spec.metric = MetricKind::hamming;
    spec.n = n;
    spec.dim = 64;
    spec.r = 2;
    spec.c = 15;
    spec.near_count = near;
    spec.cnear_count = cnear;
    return generate_planted(spec, rng);
}

SegmentSampler build_sampler(const PlantedInstance& inst, uint64_t seed,
                             const NnisConstants& consts = {}) {
    const auto fam = LshFamily::bit_sampling(static_cast<uint32_t>(inst.data.dim()));
    const auto params = compute_params(fam, inst.metric, inst.data.size(), 3.0, seed);
    Rng prng(mix64(seed ^ 0xabcdull));
    const auto perm = RankPermutation::random(static_cast<uint32_t>(inst.data.size()), prng);
    return SegmentSampler::build(inst.data, inst.metric, fam, params, perm,
                                 mix64(seed ^ 0x5ce5ull), consts, Exec::serial);
}

// True distinct collision count of q, by direct scan.
uint64_t true_s_q(const SegmentSampler& s, std::span<const float> q) {
    std::set<PointId> ids;
    for (const auto& span : s.index().query_buckets(q))
        for (PointId id : span) ids.insert(id);
    return ids.size();
}

}  // namespace

TEST_CASE("collision estimate: empty and singleton cases are exact") {
    Dataset data(64);
    data.add(std::vector<float>(64, 0.0f));
    const Metric m = Metric::distance_based(MetricKind::hamming, 2, 5);
    const auto fam = LshFamily::bit_sampling(64);
    const auto params = compute_params(fam, m, 1);
    Rng prng(3);
    const auto s = SegmentSampler::build(data, m, fam, params, RankPermutation::random(1, prng), 9);

    CHECK(s.estimate_collisions(data[0]) == 1);
    const std::vector<float> nowhere(64, 1.0f);
    CHECK(s.estimate_collisions(nowhere) == 0);
}

TEST_CASE("collision estimate covers [s/2, 1.5s] in at least 99% of builds") {
    const auto inst = hamming_instance(512, 8, 180, 77);
    int hits = 0;
    const int trials = 200;
    for (int t = 0; t < trials; ++t) {
        const auto s = build_sampler(inst, 9000 + t);
        const uint64_t truth = true_s_q(s, inst.query);
        REQUIRE(truth > 0);
        const uint64_t est = s.estimate_collisions(inst.query);
        if (est >= truth - truth / 2 && est <= truth + truth / 2) ++hits;
    }
    CHECK(hits >= trials * 99 / 100);
}

TEST_CASE("segment retrieval: whole range, partition, and brute-force equality") {
    const auto inst = hamming_instance(400, 6, 30, 5);
    const auto s = build_sampler(inst, 11);
    const std::span<const float> q(inst.query);

    // colliding near set by direct scan
    std::set<PointId> colliding_near;
    for (const auto& span : s.index().query_buckets(q))
        for (PointId id : span)
            if (classify(inst.metric, inst.data[id], q) == Zone::near) colliding_near.insert(id);

    const auto whole = s.segment_near_neighbors(q, 1, 0);
    CHECK(std::set<PointId>(whole.begin(), whole.end()) == colliding_near);

    for (uint32_t k : {2u, 8u, 64u}) {
        std::set<PointId> unioned;
        size_t total = 0;
        for (uint32_t h = 0; h < k; ++h) {
            const auto part = s.segment_near_neighbors(q, k, h);
            total += part.size();
            unioned.insert(part.begin(), part.end());
            // brute-force window check
            const uint32_t width = s.padded_n() / k;
            for (PointId id : part) {
                const uint32_t rank = s.index().perm().rank_of(id);
                CHECK(rank >= h * width);
                CHECK(rank < (h + 1) * width);
                CHECK(colliding_near.count(id) == 1);
            }
        }
        CHECK(unioned == colliding_near);
        CHECK(total == colliding_near.size());  // segments are disjoint
    }

    CHECK_THROWS_AS((void)s.segment_near_neighbors(q, 3, 0), std::invalid_argument);
    CHECK_THROWS_AS((void)s.segment_near_neighbors(q, 4, 4), std::out_of_range);
}

TEST_CASE("query: empty neighborhood gives bottom, singleton nearly never does") {
    const auto inst = hamming_instance(300, 0, 10, 21);
    const auto s = build_sampler(inst, 13);
    Rng rng(1);
    CHECK(!s.query(inst.query, rng).id.has_value());

    Dataset one(64);
    one.add(std::vector<float>(64, 0.0f));
    const Metric m = Metric::distance_based(MetricKind::hamming, 2, 5);
    const auto fam = LshFamily::bit_sampling(64);
    const auto params = compute_params(fam, m, 1);
    Rng prng(4);
    const auto tiny =
        SegmentSampler::build(one, m, fam, params, RankPermutation::random(1, prng), 17);
    int bottoms = 0;
    for (int i = 0; i < 2000; ++i) {
        Rng qrng(100 + i);
        const auto res = tiny.query(one[0], qrng);
        if (!res.id)
            ++bottoms;
        else
            CHECK(*res.id == 0);
    }
    CHECK(bottoms < 20);  // under 1%
}

TEST_CASE("queries are read-only and deterministic in the query rng") {
    const auto inst = hamming_instance(300, 5, 20, 31);
    const auto s = build_sampler(inst, 41);
    const uint64_t h0 = s.state_hash();
    for (int i = 0; i < 500; ++i) {
        Rng rng(i);
        (void)s.query(inst.query, rng);
    }
    CHECK(s.state_hash() == h0);

    Rng a(7), b(7);
    const auto ra = s.query(inst.query, a);
    const auto rb = s.query(inst.query, b);
    CHECK(ra.id == rb.id);
    CHECK(ra.inspected == rb.inspected);
    CHECK(ra.iterations == rb.iterations);
}

TEST_CASE("uniformity and correctness over one build") {
    const auto inst = hamming_instance(512, 4, 24, 47);
    const auto s = build_sampler(inst, 53);
    const std::span<const float> q(inst.query);
    std::vector<uint64_t> counts(4, 0);
    uint64_t clamps = 0;
    const int queries = 4000;
    int bottoms = 0;
    for (int i = 0; i < queries; ++i) {
        Rng rng(5000 + i);
        const auto res = s.query(q, rng);
        clamps += res.clamp_events;
        if (!res.id) {
            ++bottoms;
            continue;
        }
        REQUIRE(*res.id < 4);  // only the planted near points may come back
        ++counts[*res.id];
    }
    CHECK(bottoms < queries / 100);
    CHECK(static_cast<double>(clamps) / queries < 0.01);
    const auto rep = compare_distributions(counts, bottoms, std::vector<double>(4, 0.25));
    CHECK(rep.max_abs_dev < 0.03);
    CHECK(rep.chi2_pvalue > 0.001);
}

TEST_CASE("at the matched segment count, segments rarely exceed the near cap") {
    const auto inst = hamming_instance(512, 12, 30, 83);
    int good = 0;
    const int trials = 120;
    for (int t = 0; t < trials; ++t) {
        const auto s = build_sampler(inst, 30000 + t);
        const auto all = s.segment_near_neighbors(inst.query, 1, 0);
        if (all.empty()) continue;
        const auto k = static_cast<uint32_t>(std::bit_ceil(all.size()));
        uint32_t worst = 0;
        for (uint32_t h = 0; h < k; ++h)
            worst = std::max(worst,
                             static_cast<uint32_t>(s.segment_near_neighbors(inst.query, k, h).size()));
        good += worst <= s.lambda();
    }
    CHECK(good >= trials * 99 / 100);
}

TEST_CASE("materialization threshold leaves small buckets without sketches") {
    const auto inst = hamming_instance(256, 3, 10, 61);
    const auto s = build_sampler(inst, 71);
    CHECK(s.sketch_threshold() == static_cast<uint32_t>(std::ceil(std::log(256.0))));
    CHECK(s.padded_n() == 256);
    CHECK(s.lambda() == static_cast<uint32_t>(std::ceil(4.0 * std::log(256.0))));
    CHECK(s.sigma_cap() ==
          static_cast<uint32_t>(std::ceil(4.0 * std::log(256.0) * std::log(256.0))));
}
