// Acceptance suite: runs every claimed end-to-end property at its stated
// tolerance and prints one PASS/FAIL line per criterion. Exits nonzero if any
// criterion fails. Seeds are fixed, so a passing run is reproducible.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "fann/fair_sampler.hpp"
#include "fann/filter.hpp"
#include "fann/gen.hpp"
#include "fann/nnis.hpp"
#include "fann/oracle.hpp"
#include "fann/runners.hpp"
#include "fann/sketch.hpp"

using namespace fann;

namespace {

struct Line {
    int num;
    std::string name;
    bool pass;
    std::string detail;
    double seconds;
};

std::vector<Line> lines;
uint64_t total_invalid = 0;  // accumulated contract violations across runs
uint64_t total_checked = 0;

template <typename F>
void criterion(int num, const std::string& name, F&& body) {
    const auto t0 = std::chrono::steady_clock::now();
    std::ostringstream detail;
    bool pass = true;
    try {
        pass = body(detail);
    } catch (const std::exception& e) {
        pass = false;
        detail << " exception: " << e.what();
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    lines.push_back({num, name, pass, detail.str(), secs});
}

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

PlantedInstance ip_instance(uint32_t n, uint32_t near, uint32_t cnear, uint64_t seed,
                            double lo, double hi) {
    Rng rng(seed);
    PlantedSpec spec;
    spec.metric = MetricKind::inner_product;
    spec.n = n;
    spec.dim = 32;
    spec.alpha = 0.7;
    spec.beta = 0.3;
    spec.near_count = near;
    spec.cnear_count = cnear;
    spec.near_sim_lo = lo;
    spec.near_sim_hi = hi;
    return generate_planted(spec, rng);
}

bool check_uniform(std::ostringstream& d, const FairnessReport& rep, double tol,
                   double min_gof_p) {
    bool ok = true;
    d << "max_dev=" << rep.marginal.max_abs_dev << " (tol " << tol << ")";
    if (rep.marginal.max_abs_dev > tol) ok = false;
    d << " gof_p=" << rep.marginal.chi2_pvalue;
    if (rep.marginal.chi2_pvalue <= min_gof_p) ok = false;
    return ok;
}

}  // namespace

int main() {
    const Exec exec = Exec::parallel;

    // Shared instances.
    const auto inst_a = hamming_instance(1000, 5, 20, 101);   // |B| = 5
    const auto inst_b = hamming_instance(1024, 10, 30, 202);  // |B| = 10

    // ---- 1. uniform sampling across independent builds -------------------
    FairnessReport rep1;
    criterion(1, "min-rank sampling uniform across 40000 builds", [&](std::ostringstream& d) {
        Config cfg;
        cfg.sampler = SamplerKind::nns;
        cfg.trials = 40000;
        cfg.seed = 1001;
        rep1 = run_fairness_test(cfg, inst_a, exec);
        total_invalid += rep1.invalid;
        total_checked += cfg.trials;
        return check_uniform(d, rep1, 0.02, 0.001);
    });

    // ---- 3. all-near recall (computed before 2 so 2 can cover all runs) --
    criterion(3, "all planted near points collide in >= 95% of builds",
              [&](std::ostringstream& d) {
                  const auto fam = LshFamily::bit_sampling(64);
                  int good = 0;
                  const int builds = 1000;
                  std::vector<int> hits(builds, 0);
                  parallel_for(builds, exec, [&](size_t b) {
                      const auto params = compute_params(fam, inst_a.metric, inst_a.data.size(),
                                                         3.0, 50000 + b);
                      Rng prng(60000 + b);
                      const auto perm = RankPermutation::random(
                          static_cast<uint32_t>(inst_a.data.size()), prng);
                      const auto idx = LshIndex::build(inst_a.data, inst_a.metric, fam, params,
                                                       perm, Exec::serial);
                      std::set<PointId> found;
                      for (const auto& span : idx.query_buckets(inst_a.query))
                          for (PointId id : span)
                              if (classify(inst_a.metric, inst_a.data[id], inst_a.query) ==
                                  Zone::near)
                                  found.insert(id);
                      hits[b] = found.size() == inst_a.near_ids.size();
                  });
                  for (int h : hits) good += h;
                  d << "recall_builds=" << good << "/" << builds;
                  return good >= 950;
              });

    // ---- 4. rank-swap repeated query --------------------------------------
    FairnessReport rep4;
    criterion(4, "rank-swap repeat: marginal tvd < 0.03, pairs independent",
              [&](std::ostringstream& d) {
                  Config cfg;
                  cfg.sampler = SamplerKind::nns_rank_swap;
                  cfg.trials = 30000;
                  cfg.seed = 1004;
                  rep4 = run_fairness_test(cfg, inst_a, exec);
                  total_invalid += rep4.invalid;
                  total_checked += cfg.trials;
                  bool ok = true;
                  d << "tvd=" << rep4.marginal.tvd;
                  if (rep4.marginal.tvd >= 0.03) ok = false;
                  d << " pairs_p=" << rep4.pairs.chi2_pvalue;
                  if (!rep4.pairs_available || !rep4.pairs.valid ||
                      rep4.pairs.chi2_pvalue <= 0.001)
                      ok = false;
                  return ok;
              });

    // ---- 5. sketch accuracy and mergeability ------------------------------
    criterion(5, "sketch coverage >= 0.99 and merge == whole", [&](std::ostringstream& d) {
        bool ok = true;
        for (uint64_t f0 : {100ull, 1000ull}) {
            std::vector<int> hit(1000, 0);
            parallel_for(1000, exec, [&](size_t trial) {
                auto cfg = std::make_shared<SketchConfig>(1 << 15, 0.5, 0.01,
                                                          70000 + trial);
                DistinctSketch s(cfg);
                for (uint64_t id = 0; id < f0; ++id) s.insert(id);
                const uint64_t est = s.estimate();
                hit[trial] = est >= f0 / 2 && est <= f0 + f0 / 2;
            });
            int hits = 0;
            for (int h : hit) hits += h;
            d << "F0=" << f0 << ":" << hits << "/1000 ";
            if (hits < 990) ok = false;
        }
        int merge_ok = 0;
        for (int trial = 0; trial < 500; ++trial) {
            auto cfg = std::make_shared<SketchConfig>(1 << 15, 0.5, 0.01, 90000 + trial);
            Rng rng(91000 + trial);
            const auto k = 2 + rng.below(7);
            DistinctSketch whole(cfg);
            std::vector<DistinctSketch> parts(k, DistinctSketch(cfg));
            for (int i = 0; i < 800; ++i) {
                const uint64_t x = rng.below(1 << 15);
                whole.insert(x);
                parts[rng.below(k)].insert(x);
            }
            DistinctSketch merged(cfg);
            for (const auto& p : parts) merged.merge_in_place(p);
            merge_ok += merged.state_hash() == whole.state_hash();
        }
        d << "merge=" << merge_ok << "/500";
        if (merge_ok != 500) ok = false;
        return ok;
    });

    // ---- 6. independent sampling (segment sampler) -------------------------
    FairnessReport rep6;
    criterion(6, "segment sampler: uniform, independent, read-only", [&](std::ostringstream& d) {
        Config cfg;
        cfg.sampler = SamplerKind::nnis;
        cfg.trials = 20000;
        cfg.seed = 1006;
        rep6 = run_fairness_test(cfg, inst_b, exec);
        total_invalid += rep6.invalid;
        total_checked += cfg.trials;
        bool ok = check_uniform(d, rep6, 0.015, 0.001);
        d << " pairs_p=" << rep6.pairs.chi2_pvalue;
        if (!rep6.pairs_available || !rep6.pairs.valid || rep6.pairs.chi2_pvalue <= 0.001)
            ok = false;
        d << " bot_rate=" << rep6.bot_rate();
        if (rep6.bot_rate() >= 0.01) ok = false;
        d << " state_ok=" << rep6.state_hash_ok;
        if (!rep6.state_hash_ok) ok = false;

        // Interleaved second query point with an overlapping neighborhood.
        const auto fam = LshFamily::bit_sampling(64);
        const auto params =
            compute_params(fam, inst_b.metric, inst_b.data.size(), 3.0, mix64(1006 ^ 0x6c736831ull));
        Rng perm_rng = Rng(1006).derive(0x7065726dull);
        const auto perm =
            RankPermutation::random(static_cast<uint32_t>(inst_b.data.size()), perm_rng);
        const auto sampler = SegmentSampler::build(inst_b.data, inst_b.metric, fam, params, perm,
                                                   mix64(1006 ^ 0x736b6574ull), {}, exec);
        const NeighborhoodOracle oracle(inst_b.data, inst_b.metric);
        std::vector<float> q2(inst_b.query);
        std::vector<PointId> ball2, overlap;
        for (uint32_t flip = 0; flip < 64; ++flip) {
            q2 = inst_b.query;
            q2[flip] = q2[flip] == 0.0f ? 1.0f : 0.0f;
            ball2 = oracle.exact_ball(q2);
            overlap.clear();
            for (PointId id : ball2)
                if (std::binary_search(inst_b.near_ids.begin(), inst_b.near_ids.end(), id))
                    overlap.push_back(id);
            if (ball2.size() >= 5 && !overlap.empty()) break;
        }
        d << " |ball2|=" << ball2.size() << " overlap=" << overlap.size();
        if (ball2.size() < 5 || overlap.empty()) return false;

        const auto ball1 = inst_b.near_ids;
        std::vector<uint64_t> c1(ball1.size(), 0), c2(ball2.size(), 0);
        uint64_t bot1 = 0, bot2 = 0;
        const uint64_t pre_hash = sampler.state_hash();
        const int rounds = 10000;
        for (int i = 0; i < rounds; ++i) {
            Rng ra = Rng(1006).derive(0xabc000000ull + 2 * i);
            Rng rb = Rng(1006).derive(0xabc000000ull + 2 * i + 1);
            const auto a = sampler.query(inst_b.query, ra);
            const auto b = sampler.query(q2, rb);
            ++total_checked;
            ++total_checked;
            if (a.id) {
                if (classify(inst_b.metric, inst_b.data[*a.id], inst_b.query) != Zone::near)
                    ++total_invalid;
                for (size_t j = 0; j < ball1.size(); ++j)
                    if (ball1[j] == *a.id) ++c1[j];
            } else {
                ++bot1;
            }
            if (b.id) {
                if (classify(inst_b.metric, inst_b.data[*b.id], q2) != Zone::near)
                    ++total_invalid;
                for (size_t j = 0; j < ball2.size(); ++j)
                    if (ball2[j] == *b.id) ++c2[j];
            } else {
                ++bot2;
            }
        }
        if (sampler.state_hash() != pre_hash) {
            d << " interleave_state=changed";
            return false;
        }
        const auto m1 =
            compare_distributions(c1, bot1, std::vector<double>(ball1.size(), 1.0 / ball1.size()));
        const auto m2 =
            compare_distributions(c2, bot2, std::vector<double>(ball2.size(), 1.0 / ball2.size()));
        d << " interleave_dev=" << m1.max_abs_dev << "/" << m2.max_abs_dev;
        if (m1.max_abs_dev > 0.015 || m2.max_abs_dev > 0.015) ok = false;
        if (m1.chi2_pvalue <= 0.001 || m2.chi2_pvalue <= 0.001) ok = false;
        if (bot1 + bot2 >= static_cast<uint64_t>(rounds) / 50) ok = false;
        return ok;
    });

    // ---- 7. filter search with calibrated repetitions ----------------------
    criterion(7, "filter search succeeds >= 95% on a threshold pair", [&](std::ostringstream& d) {
        const auto inst = ip_instance(2000, 1, 0, 707, 0.7, 0.7);
        Config cfg;
        cfg.sampler = SamplerKind::filter;
        cfg.trials = 1000;
        cfg.seed = 1007;
        cfg.filter_eps = 0.1;
        const auto rep = run_fairness_test(cfg, inst, exec);
        total_invalid += rep.invalid;
        total_checked += cfg.trials;
        d << "success=" << rep.success_rate() << " invalid=" << rep.invalid;
        return rep.success_rate() >= 0.95 && rep.invalid == 0;
    });

    // ---- 8. filter independent sampling ------------------------------------
    criterion(8, "filter sampling: uniform over 8 near points, exact restore",
              [&](std::ostringstream& d) {
                  const auto inst = ip_instance(2000, 8, 30, 808, 0.7, 0.85);
                  auto idx = NnisFilterIndex::build(inst.data, 0.7, 0.3, 0.1, 1008, 3.0, exec);
                  std::vector<uint64_t> counts(8, 0);
                  uint64_t bot = 0;
                  double worst_evicted = -2.0;
                  bool hashes_ok = true;
                  const int queries = 20000;
                  const Rng base(1008);
                  for (int i = 0; i < queries; ++i) {
                      const uint64_t pre = idx.state_hash();
                      Rng rng = base.derive(0xfee1ull + i);
                      const auto res = idx.query(inst.query, rng);
                      if (idx.state_hash() != pre) hashes_ok = false;
                      ++total_checked;
                      if (!res.id) {
                          ++bot;
                          continue;
                      }
                      if (classify(inst.metric, inst.data[*res.id], inst.query) != Zone::near)
                          ++total_invalid;
                      for (size_t j = 0; j < inst.near_ids.size(); ++j)
                          if (inst.near_ids[j] == *res.id) ++counts[j];
                      worst_evicted = std::max(worst_evicted, res.max_evicted_sim);
                  }
                  const auto rep = compare_distributions(
                      counts, bot, std::vector<double>(8, 0.125));
                  bool ok = true;
                  d << "max_dev=" << rep.max_abs_dev;
                  if (rep.max_abs_dev > 0.02) ok = false;
                  d << " gof_p=" << rep.chi2_pvalue;
                  if (rep.chi2_pvalue <= 0.001) ok = false;
                  d << " state=" << (hashes_ok ? "ok" : "CHANGED");
                  if (!hashes_ok) ok = false;
                  d << " worst_evicted_sim=" << worst_evicted << " (beta 0.3)";
                  if (worst_evicted >= 0.3) ok = false;
                  if (bot > 0) ok = false;
                  return ok;
              });

    // ---- 9. scaling sanity --------------------------------------------------
    criterion(9, "cost counters scale in the right direction", [&](std::ostringstream& d) {
        // (a) inspected grows with b(q, cr) / b(q, r) in {1, 4, 16}
        std::vector<double> inspected;
        for (uint32_t cnear : {0u, 24u, 120u}) {
            const auto inst = hamming_instance(1024, 8, cnear, 909 + cnear);
            Config cfg;
            cfg.sampler = SamplerKind::nns;
            cfg.trials = 500;
            cfg.seed = 1009;
            const auto rep = run_fairness_test(cfg, inst, exec);
            inspected.push_back(rep.mean_inspected);
        }
        d << "inspected(ratio 1,4,16)=" << inspected[0] << "," << inspected[1] << ","
          << inspected[2];
        bool ok = inspected[0] < inspected[1] && inspected[1] < inspected[2];

        // (b) mean |I_i| log-log slope below 1 across per-part budgets
        Dataset anchor(32);
        std::vector<float> u(32, 0.0f);
        u[0] = 1.0f;
        anchor.add(u);
        std::vector<double> lm, li;
        double prev = 0.0;
        bool monotone = true;
        for (uint32_t m_prime : {64u, 128u, 256u, 512u, 1024u, 2048u, 4096u}) {
            FilterParams p;
            p.alpha = 0.7;
            p.beta = 0.3;
            p.eps = 0.1;
            p.t = 1;
            p.m_prime = m_prime;
            p.seed = 1010;
            const auto idx = FilterIndex::build(anchor, p, exec);
            Rng qrng(1011);
            double mean = 0.0;
            const int queries = 200;
            for (int i = 0; i < queries; ++i) {
                std::vector<double> g(32);
                double norm = 0.0;
                for (auto& x : g) {
                    x = qrng.normal();
                    norm += x * x;
                }
                norm = std::sqrt(norm);
                std::vector<float> q(32);
                for (int j = 0; j < 32; ++j) q[j] = static_cast<float>(g[j] / norm);
                mean += static_cast<double>(idx.threshold_set(0, 0, q).size());
            }
            mean /= queries;
            monotone = monotone && mean > prev;
            prev = mean;
            lm.push_back(std::log(static_cast<double>(m_prime)));
            li.push_back(std::log(mean));
        }
        double sx = 0, sy = 0, sxx = 0, sxy = 0;
        const double n = static_cast<double>(lm.size());
        for (size_t i = 0; i < lm.size(); ++i) {
            sx += lm[i];
            sy += li[i];
            sxx += lm[i] * lm[i];
            sxy += lm[i] * li[i];
        }
        const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
        d << " |I| slope=" << slope;
        ok = ok && monotone && slope < 1.0;
        return ok;
    });

    // ---- 10. oracle self-consistency ---------------------------------------
    criterion(10, "oracle agrees with an independent implementation", [&](std::ostringstream& d) {
        int agree = 0;
        const int instances = 1000;
        std::vector<int> oks(instances, 0);
        parallel_for(instances, exec, [&](size_t t) {
            Rng rng(40000 + t);
            const uint32_t n = 50 + rng.below(100);
            const uint32_t dim = 4 + rng.below(12);
            Dataset data(dim);
            for (uint32_t i = 0; i < n; ++i) {
                std::vector<float> p(dim);
                for (auto& x : p) x = static_cast<float>(rng.normal());
                data.add(p);
            }
            std::vector<float> q(dim);
            for (auto& x : q) x = static_cast<float>(rng.normal());
            const double r = 0.5 + rng.real() * 2.0;
            const Metric m = Metric::distance_based(MetricKind::euclidean, r, 1.5 + rng.real());
            const NeighborhoodOracle oracle(data, m);
            const auto ball = oracle.exact_ball(q);

            // independent route: sort ids by distance, take the prefix within r
            std::vector<std::pair<double, PointId>> byd;
            for (PointId id = 0; id < n; ++id) byd.emplace_back(distance(m, data[id], q), id);
            std::sort(byd.begin(), byd.end());
            std::vector<PointId> prefix;
            for (const auto& [dist, id] : byd)
                if (dist <= r) prefix.push_back(id);
            std::sort(prefix.begin(), prefix.end());
            oks[t] = (prefix == ball);
        });
        for (int o : oks) agree += o;
        d << "ball_agreement=" << agree << "/" << instances;
        bool ok = agree == instances;

        // closed forms against frozen high-precision references (1e-12 relative)
        struct Ref {
            double got, want;
        };
        const Ref refs[] = {
            {f_threshold(0.5, 0.1), 1.858461094424919223476203380652},
            {f_threshold(0.7, 0.1), 1.532526278682987738377912183834},
            {f_threshold(0.3, 0.25), 1.588412961807539810998370585494},
            {rho_exponent(0.8, 0.2), 0.489795918367346938775510204082},
            {rho_exponent(0.7, 0.3), 0.743630828392885755487902579715},
            {rho_exponent(0.5, 0.1), 0.822714681440443213296398891967},
        };
        double worst = 0.0;
        for (const auto& r : refs)
            worst = std::max(worst, std::abs(r.got - r.want) / std::abs(r.want));
        const bool ints_ok = choose_m(10000, 0.8, 0.2) == 276807 &&
                             choose_m(2000, 0.7, 0.3) == 65048 &&
                             choose_m(500, 0.6, 0.2) == 2218 && choose_m(1, 0.8, 0.2) == 1;
        d << " closed_form_rel_err=" << worst << " choose_m=" << (ints_ok ? "ok" : "BAD");
        ok = ok && worst < 1e-12 && ints_ok;
        return ok;
    });

    // ---- 2. correctness: every non-bottom output is near --------------------
    // (evaluated last so it covers every sampling run above)
    lines.push_back({2, "every returned point is a true near neighbor",
                     total_invalid == 0,
                     "violations=" + std::to_string(total_invalid) + " over " +
                         std::to_string(total_checked) + " outputs",
                     0.0});

    std::sort(lines.begin(), lines.end(), [](const Line& a, const Line& b) { return a.num < b.num; });
    bool all_pass = true;
    for (const auto& l : lines) {
        all_pass &= l.pass;
        std::printf("[%s] criterion %2d: %s  (%s; %.1fs)\n", l.pass ? "PASS" : "FAIL", l.num,
                    l.name.c_str(), l.detail.c_str(), l.seconds);
    }
    std::printf("%s\n", all_pass ? "ACCEPTANCE: ALL CRITERIA PASS" : "ACCEPTANCE: FAILURES PRESENT");
    return all_pass ? 0 : 1;
}
