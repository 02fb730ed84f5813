#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <map>

#include "fann/fair_sampler.hpp"
#include "fann/gen.hpp"
#include "fann/oracle.hpp"
#include "fann/stats.hpp"

using namespace fann;

namespace {

struct Built {
    PlantedInstance inst;
    LshFamily family;
};

Built make_instance(uint32_t n, uint32_t near, uint32_t cnear, uint64_t seed) {
    Rng rng(seed);
    PlantedSpec spec;
    spec.metric = MetricKind::hamming;
    spec.n = n;
    spec.dim = 64;
    spec.r = 2;
    spec.c = 15;
    spec.near_count = near;
    spec.cnear_count = cnear;
    return {generate_planted(spec, rng), LshFamily::bit_sampling(64)};
}

NnsSampler build_sampler(const Built& b, uint64_t seed, NnsSampler::Mode mode) {
    const auto params = compute_params(b.family, b.inst.metric, b.inst.data.size(), 3.0, seed);
    Rng prng(mix64(seed ^ 0x70ull));
    const auto perm =
        RankPermutation::random(static_cast<uint32_t>(b.inst.data.size()), prng);
    return NnsSampler::build(b.inst.data, b.inst.metric, b.family, params, perm, mode,
                             mix64(seed ^ 0x71ull), Exec::serial);
}

}  // namespace

TEST_CASE("singleton dataset always returns its point; empty neighborhood returns bottom") {
    Dataset data(64);
    data.add(std::vector<float>(64, 0.0f));
    const Metric m = Metric::distance_based(MetricKind::hamming, 2, 5);
    const auto fam = LshFamily::bit_sampling(64);
    const auto params = compute_params(fam, m, 1);
    Rng prng(1);
    const auto s = NnsSampler::build(data, m, fam, params, RankPermutation::random(1, prng),
                                     NnsSampler::Mode::static_ranks);
    const auto hit = s.query(data[0]);
    REQUIRE(hit.id.has_value());
    CHECK(*hit.id == 0);

    std::vector<float> far(64, 1.0f);
    CHECK(!s.query(far).id.has_value());
}

TEST_CASE("every returned point is near, across many planted builds") {
    const auto b = make_instance(250, 4, 20, 51);
    for (int t = 0; t < 50; ++t) {
        const auto s = build_sampler(b, 100 + t, NnsSampler::Mode::static_ranks);
        const auto res = s.query(b.inst.query);
        if (res.id)
            CHECK(classify(b.inst.metric, b.inst.data[*res.id], b.inst.query) == Zone::near);
    }
}

TEST_CASE("two colliding near points are sampled uniformly across builds") {
    const auto b = make_instance(160, 2, 10, 7);
    uint64_t counts[2] = {0, 0};
    const int builds = 40000;
    int bottoms = 0;
    for (int t = 0; t < builds; ++t) {
        const auto s = build_sampler(b, 10000 + t, NnsSampler::Mode::static_ranks);
        const auto res = s.query(b.inst.query);
        if (!res.id) {
            ++bottoms;
            continue;
        }
        REQUIRE(*res.id < 2);
        ++counts[*res.id];
    }
    CHECK(bottoms < builds / 100);
    for (uint64_t c : counts) CHECK(std::abs(c / double(builds) - 0.5) < 0.02);
}

TEST_CASE("static uniformity holds for a 20-point neighborhood") {
    const auto b = make_instance(300, 20, 30, 29);
    std::vector<uint64_t> counts(20, 0);
    const int builds = 5000;
    uint64_t bottoms = 0;
    for (int t = 0; t < builds; ++t) {
        const auto s = build_sampler(b, 70000 + t, NnsSampler::Mode::static_ranks);
        const auto res = s.query(b.inst.query);
        if (!res.id) {
            ++bottoms;
            continue;
        }
        REQUIRE(*res.id < 20);
        ++counts[*res.id];
    }
    const auto rep = compare_distributions(counts, bottoms, std::vector<double>(20, 0.05));
    CHECK(rep.tvd < 0.05);
}

TEST_CASE("k without replacement: definition, saturation and output order") {
    const auto b = make_instance(300, 4, 12, 91);
    const auto s = build_sampler(b, 17, NnsSampler::Mode::static_ranks);

    // k = 1 matches the single-sample query
    const auto one = s.query_k_without_replacement(b.inst.query, 1);
    const auto single = s.query(b.inst.query);
    REQUIRE(single.id.has_value());
    REQUIRE(one.size() == 1);
    CHECK(one[0] == *single.id);

    // k at least the neighborhood size returns exactly the colliding near set
    const auto all = s.query_k_without_replacement(b.inst.query, 100);
    std::set<PointId> got(all.begin(), all.end());
    std::set<PointId> expect;
    for (const auto& span : s.index().query_buckets(b.inst.query))
        for (PointId id : span)
            if (classify(b.inst.metric, b.inst.data[id], b.inst.query) == Zone::near)
                expect.insert(id);
    CHECK(got == expect);

    // ranks strictly increasing in the output
    for (size_t i = 1; i < all.size(); ++i)
        CHECK(s.perm().rank_of(all[i - 1]) < s.perm().rank_of(all[i]));

    CHECK_THROWS_AS((void)s.query_k_without_replacement(b.inst.query, 0), std::invalid_argument);
}

TEST_CASE("pairs from k=2 of 4 near points are uniform over the 6 pairs") {
    const auto b = make_instance(64, 4, 6, 23);
    std::map<std::pair<PointId, PointId>, uint64_t> counts;
    const int builds = 60000;
    int usable = 0;
    for (int t = 0; t < builds; ++t) {
        const auto s = build_sampler(b, 40000 + t, NnsSampler::Mode::static_ranks);
        const auto two = s.query_k_without_replacement(b.inst.query, 2);
        if (two.size() < 2) continue;
        ++usable;
        auto key = std::minmax(two[0], two[1]);
        ++counts[{key.first, key.second}];
    }
    CHECK(usable > builds * 99 / 100);
    CHECK(counts.size() == 6);
    for (const auto& [pair, c] : counts)
        CHECK(std::abs(c / double(usable) - 1.0 / 6.0) < 0.02);
}

TEST_CASE("rank-swap: repeated identical query is uniform and independent") {
    const auto b = make_instance(300, 5, 15, 33);
    auto s = build_sampler(b, 77, NnsSampler::Mode::rank_swap);
    const int repeats = 30000;
    std::vector<uint64_t> counts(5, 0);
    std::vector<int> seq;
    seq.reserve(repeats);
    for (int i = 0; i < repeats; ++i) {
        const auto res = s.query_rank_swap(b.inst.query);
        REQUIRE(res.id.has_value());
        REQUIRE(*res.id < 5);
        ++counts[*res.id];
        seq.push_back(static_cast<int>(*res.id));
    }
    const auto rep = compare_distributions(counts, 0, std::vector<double>(5, 0.2));
    CHECK(rep.tvd < 0.03);
    CHECK(rep.chi2_pvalue > 0.001);
    for (uint64_t c : counts) CHECK(std::abs(c / double(repeats) - 0.2) < 0.02);

    // non-overlapping consecutive pairs pass a chi-square independence test
    std::vector<uint64_t> table(25, 0);
    for (int i = 0; i + 1 < repeats; i += 2) ++table[seq[i] * 5 + seq[i + 1]];
    const auto ind = chi2_independence(table, 5);
    CHECK(ind.valid);
    CHECK(ind.chi2_pvalue > 0.001);

    // buckets stay consistent with the permutation throughout
    CHECK(s.buckets_rank_consistent());
}

TEST_CASE("rank-swap on a singleton: the only draw is the identity swap") {
    Dataset data(64);
    data.add(std::vector<float>(64, 0.0f));
    const Metric m = Metric::distance_based(MetricKind::hamming, 2, 5);
    const auto fam = LshFamily::bit_sampling(64);
    const auto params = compute_params(fam, m, 1);
    Rng prng(2);
    auto s = NnsSampler::build(data, m, fam, params, RankPermutation::random(1, prng),
                               NnsSampler::Mode::rank_swap, 5);
    const uint64_t before = s.state_hash();
    const auto res = s.query_rank_swap(data[0]);
    REQUIRE(res.id.has_value());
    CHECK(s.state_hash() == before);  // rank 0 is also the top rank, swap is identity
}

TEST_CASE("k with replacement") {
    const auto b = make_instance(200, 3, 10, 63);
    auto s = build_sampler(b, 5, NnsSampler::Mode::rank_swap);

    std::vector<float> nowhere(64, 1.0f);
    const auto empty = s.query_k_with_replacement(nowhere, 4);
    REQUIRE(empty.size() == 4);
    for (const auto& o : empty) CHECK(!o.has_value());

    std::vector<uint64_t> counts(3, 0);
    const int k = 10000;
    const auto draws = s.query_k_with_replacement(b.inst.query, k);
    for (const auto& o : draws) {
        REQUIRE(o.has_value());
        REQUIRE(*o < 3);
        ++counts[*o];
    }
    for (uint64_t c : counts) CHECK(std::abs(c / double(k) - 1.0 / 3.0) < 0.02);
    CHECK(s.buckets_rank_consistent());
}

TEST_CASE("rank-swap serves one repeated query only: a second query point is biased") {
    // B(q) = {a, b}, B(q') = {b, c}; hammering q drives the ranks of a and b
    // up, so q' then sees c far more often than b.
    const uint32_t d = 32;
    std::vector<float> q(d, 0.0f), qp(d, 0.0f);
    qp[0] = qp[1] = 1.0f;
    auto flip = [&](std::initializer_list<int> coords) {
        std::vector<float> p(d, 0.0f);
        for (int i : coords) p[i] = 1.0f;
        return p;
    };
    const Metric m = Metric::distance_based(MetricKind::hamming, 1, 3);
    const auto fam = LshFamily::bit_sampling(d);

    uint64_t c_wins = 0, total = 0;
    for (int trial = 0; trial < 400; ++trial) {
        Dataset data(d);
        data.add(flip({2}));     // a: near q only
        data.add(flip({0}));     // b: near q and q'
        data.add(flip({0, 1, 2}));  // c: near q' only
        Rng bg(900 + trial);
        for (int i = 0; i < 61; ++i) {  // background far from both
            std::vector<float> p(d, 0.0f);
            int ones = 0;
            while (ones < 16) {
                const auto j = 3 + static_cast<uint32_t>(bg.below(d - 3));
                if (p[j] == 0.0f) {
                    p[j] = 1.0f;
                    ++ones;
                }
            }
            data.add(p);
        }
        const auto params = compute_params(fam, m, data.size(), 3.0, 3000 + trial);
        Rng prng(5000 + trial);
        auto s = NnsSampler::build(data, m, fam, params,
                                   RankPermutation::random(static_cast<uint32_t>(data.size()), prng),
                                   NnsSampler::Mode::rank_swap, 7000 + trial);
        const NeighborhoodOracle oracle(data, m);
        REQUIRE(oracle.exact_ball(q) == std::vector<PointId>{0, 1});
        REQUIRE(oracle.exact_ball(qp) == std::vector<PointId>{1, 2});
        for (int i = 0; i < 100; ++i) (void)s.query_rank_swap(q);
        const auto res = s.query_rank_swap(qp);
        if (res.id) {
            ++total;
            c_wins += (*res.id == 2);
        }
    }
    // uniform would put c at 1/2; the drift makes it much likelier
    CHECK(total >= 390);
    CHECK(static_cast<double>(c_wins) / total > 0.6);
}
