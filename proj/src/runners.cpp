#include "fann/runners.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <sstream>

#include "fann/fair_sampler.hpp"
#include "fann/filter.hpp"
#include "fann/nnis.hpp"
#include "fann/oracle.hpp"

namespace fann {

namespace {

constexpr uint64_t kPermTag = 0x7065726dull;
constexpr uint64_t kLshTag = 0x6c736831ull;
constexpr uint64_t kSketchTag = 0x736b6574ull;
constexpr uint64_t kQueryTag = 0x71727973ull;

struct LshPieces {
    LshFamily family;
    LshParams params;
    RankPermutation perm;
};

LshPieces lsh_pieces(const Config& cfg, const PlantedInstance& inst, uint64_t master) {
    const Rng base(master);
    LshPieces p{LshFamily::default_for(inst.metric, static_cast<uint32_t>(inst.data.dim())),
                {},
                [&] {
                    Rng r = base.derive(kPermTag);
                    return RankPermutation::random(static_cast<uint32_t>(inst.data.size()), r);
                }()};
    p.params = compute_params(p.family, inst.metric, inst.data.size(), cfg.consts.c_l,
                              mix64(master ^ kLshTag));
    return p;
}

// Outcome slot per trial: >= 0 ball position, -1 bottom, -2 contract violation.
struct Tally {
    std::vector<int64_t> outcome;
    std::vector<uint64_t> inspected;
    std::vector<uint64_t> clamps;
};

bool outcome_valid(const PlantedInstance& inst, SamplerKind kind, PointId id,
                   std::span<const float> q) {
    const Zone z = classify(inst.metric, inst.data[id], q);
    return kind == SamplerKind::filter ? z != Zone::far : z == Zone::near;
}

}  // namespace

FairnessReport run_fairness_test(const Config& cfg, const PlantedInstance& inst, Exec exec) {
    FairnessReport rep;
    rep.sampler = cfg.sampler;
    rep.trials = cfg.trials;
    const NeighborhoodOracle oracle(inst.data, inst.metric);
    rep.ball = oracle.exact_ball(inst.query);
    rep.counts.assign(rep.ball.size(), 0);

    std::vector<int64_t> pos_of(inst.data.size(), -1);
    for (size_t i = 0; i < rep.ball.size(); ++i) pos_of[rep.ball[i]] = static_cast<int64_t>(i);

    const uint32_t trials = cfg.trials;
    Tally tally;
    tally.outcome.assign(trials, -1);
    tally.inspected.assign(trials, 0);
    tally.clamps.assign(trials, 0);
    const Rng base(cfg.seed);
    const std::span<const float> q(inst.query);

    // Outcomes: >= 0 ball position, -1 bottom, -2 contract violation,
    // -3 valid return outside the near ball (possible for filter only).
    auto record = [&](uint32_t t, const std::optional<PointId>& id, uint64_t inspected) {
        tally.inspected[t] = inspected;
        if (!id) {
            tally.outcome[t] = -1;
        } else if (!outcome_valid(inst, cfg.sampler, *id, q)) {
            tally.outcome[t] = -2;
        } else {
            const int64_t p = pos_of[*id];
            tally.outcome[t] = p >= 0 ? p : -3;
        }
    };

    switch (cfg.sampler) {
        case SamplerKind::oracle: {
            parallel_for(trials, exec, [&](size_t t) {
                Rng rng = base.derive(kQueryTag + t);
                const auto id = oracle.exact_uniform_sample(q, rng);
                record(static_cast<uint32_t>(t), id, inst.data.size());
            });
            break;
        }
        case SamplerKind::nns: {
            parallel_for(trials, exec, [&](size_t t) {
                const auto pieces = lsh_pieces(cfg, inst, mix64(cfg.seed ^ (t + 1)));
                const auto s = NnsSampler::build(inst.data, inst.metric, pieces.family,
                                                 pieces.params, pieces.perm,
                                                 NnsSampler::Mode::static_ranks, 0, Exec::serial);
                const auto res = s.query(q);
                record(static_cast<uint32_t>(t), res.id, res.inspected);
            });
            break;
        }
        case SamplerKind::nns_rank_swap: {
            const auto pieces = lsh_pieces(cfg, inst, cfg.seed);
            auto s = NnsSampler::build(inst.data, inst.metric, pieces.family, pieces.params,
                                       pieces.perm, NnsSampler::Mode::rank_swap,
                                       mix64(cfg.seed ^ kQueryTag), exec);
            for (uint32_t t = 0; t < trials; ++t) {
                const auto res = s.query_rank_swap(q);
                record(t, res.id, res.inspected);
            }
            break;
        }
        case SamplerKind::nnis: {
            const auto pieces = lsh_pieces(cfg, inst, cfg.seed);
            NnisConstants consts;
            consts.c_lambda = cfg.consts.c_lambda;
            consts.c_sigma = cfg.consts.c_sigma;
            consts.c_delta = cfg.consts.c_delta;
            consts.c_t = cfg.consts.c_t;
            consts.sketch_eps = cfg.sketch_eps;
            const auto s = SegmentSampler::build(inst.data, inst.metric, pieces.family,
                                                 pieces.params, pieces.perm,
                                                 mix64(cfg.seed ^ kSketchTag), consts, exec);
            const uint64_t pre = s.state_hash();
            parallel_for(trials, exec, [&](size_t t) {
                Rng rng = base.derive(kQueryTag + t);
                const auto res = s.query(q, rng);
                record(static_cast<uint32_t>(t), res.id, res.inspected);
                tally.clamps[t] = res.clamp_events;
            });
            rep.state_hash_ok = (s.state_hash() == pre);
            break;
        }
        case SamplerKind::filter: {
            parallel_for(trials, exec, [&](size_t t) {
                const auto params =
                    FilterParams::create(inst.data.size(), inst.metric.alpha, inst.metric.beta,
                                         cfg.filter_eps, mix64(cfg.seed ^ (t + 1)), cfg.repetitions);
                const auto idx = FilterIndex::build(inst.data, params, Exec::serial);
                const auto res = idx.query(q);
                record(static_cast<uint32_t>(t), res.id, res.inspected);
            });
            break;
        }
        case SamplerKind::filter_nnis: {
            auto idx = NnisFilterIndex::build(inst.data, inst.metric.alpha, inst.metric.beta,
                                              cfg.filter_eps, cfg.seed, cfg.consts.c_f, exec);
            for (uint32_t t = 0; t < trials; ++t) {
                const uint64_t pre = idx.state_hash();
                Rng rng = base.derive(kQueryTag + t);
                const auto res = idx.query(q, rng);
                if (idx.state_hash() != pre) rep.state_hash_ok = false;
                record(t, res.id, res.inspected);
            }
            break;
        }
    }

    // Aggregate.
    uint64_t clamp_total = 0, inspected_total = 0;
    for (uint32_t t = 0; t < trials; ++t) {
        const int64_t o = tally.outcome[t];
        if (o >= 0)
            ++rep.counts[static_cast<size_t>(o)];
        else if (o == -1)
            ++rep.bot;
        else if (o == -2)
            ++rep.invalid;
        clamp_total += tally.clamps[t];
        inspected_total += tally.inspected[t];
    }
    rep.clamp_rate = trials ? static_cast<double>(clamp_total) / trials : 0.0;
    rep.mean_inspected = trials ? static_cast<double>(inspected_total) / trials : 0.0;

    const bool uniform_subject = cfg.sampler != SamplerKind::filter;
    if (uniform_subject && !rep.ball.empty() && trials > 0) {
        const std::vector<double> probs(rep.ball.size(), 1.0 / static_cast<double>(rep.ball.size()));
        rep.marginal = compare_distributions(rep.counts, rep.bot + rep.invalid, probs);
        rep.marginal_available = true;
    }

    const bool sequential = cfg.sampler == SamplerKind::nns_rank_swap ||
                            cfg.sampler == SamplerKind::nnis ||
                            cfg.sampler == SamplerKind::filter_nnis;
    const auto k = static_cast<uint32_t>(rep.ball.size());
    if (sequential && k >= 2 && trials >= 4) {
        std::vector<uint64_t> table(static_cast<size_t>(k) * k, 0);
        uint64_t pairs = 0;
        for (uint32_t t = 0; t + 1 < trials; t += 2) {
            const int64_t a = tally.outcome[t], b = tally.outcome[t + 1];
            if (a >= 0 && b >= 0) {
                ++table[static_cast<size_t>(a) * k + static_cast<size_t>(b)];
                ++pairs;
            }
        }
        if (pairs > 0) {
            rep.pairs = chi2_independence(table, k);
            rep.pairs_available = true;
        }
    }
    return rep;
}

std::string FairnessReport::to_kv() const {
    std::ostringstream os;
    os << "sampler=" << sampler_name(sampler) << "\n";
    os << "trials=" << trials << "\n";
    os << "ball=" << ball.size() << "\n";
    os << "bot=" << bot << "\n";
    os << "bot_rate=" << bot_rate() << "\n";
    os << "invalid=" << invalid << "\n";
    os << "mean_inspected=" << mean_inspected << "\n";
    os << "clamp_rate=" << clamp_rate << "\n";
    os << "state_hash_ok=" << (state_hash_ok ? 1 : 0) << "\n";
    if (marginal_available) {
        os << "tvd=" << marginal.tvd << "\n";
        os << "max_abs_dev=" << marginal.max_abs_dev << "\n";
        os << "chi2_stat=" << marginal.chi2_stat << "\n";
        os << "chi2_dof=" << marginal.dof << "\n";
        os << "chi2_pvalue=" << marginal.chi2_pvalue << "\n";
    }
    if (pairs_available) {
        os << "pairs_chi2_stat=" << pairs.chi2_stat << "\n";
        os << "pairs_chi2_dof=" << pairs.dof << "\n";
        os << "pairs_chi2_pvalue=" << pairs.chi2_pvalue << "\n";
        os << "pairs_valid=" << (pairs.valid ? 1 : 0) << "\n";
    }
    return os.str();
}

std::string FairnessReport::to_table() const {
    std::ostringstream os;
    os << "fairness: sampler=" << sampler_name(sampler) << " trials=" << trials
       << " |ball|=" << ball.size() << "\n";
    const uint64_t hits = trials - bot - invalid;
    os << "  id        count   freq (expected " << (ball.empty() ? 0.0 : 1.0 / ball.size())
       << ")\n";
    for (size_t i = 0; i < ball.size(); ++i) {
        os << "  " << ball[i] << "\t" << counts[i] << "\t"
           << (trials ? static_cast<double>(counts[i]) / trials : 0.0) << "\n";
    }
    os << "  bottom: " << bot << ", invalid: " << invalid << ", successes: " << hits << "\n";
    if (marginal_available)
        os << "  tvd=" << marginal.tvd << " chi2_p=" << marginal.chi2_pvalue << "\n";
    if (pairs_available) os << "  pair_independence_p=" << pairs.chi2_pvalue << "\n";
    return os.str();
}

BenchReport run_bench(const Config& cfg, const PlantedInstance& inst, uint32_t queries, Exec exec) {
    using clock = std::chrono::steady_clock;
    BenchReport rep;
    rep.sampler = cfg.sampler;
    rep.queries = queries;
    const std::span<const float> q(inst.query);
    const Rng base(cfg.seed);

    std::vector<double> us(queries, 0.0);
    uint64_t inspected_total = 0;

    auto timed = [&](uint32_t i, auto&& fn) {
        const auto t0 = clock::now();
        const SampleResult r = fn();
        const auto t1 = clock::now();
        us[i] = std::chrono::duration<double, std::micro>(t1 - t0).count();
        inspected_total += r.inspected;
        if (!r.id) ++rep.bot;
    };

    const auto build_start = clock::now();
    switch (cfg.sampler) {
        case SamplerKind::oracle: {
            const NeighborhoodOracle oracle(inst.data, inst.metric);
            rep.build_seconds = 0.0;
            for (uint32_t i = 0; i < queries; ++i)
                timed(i, [&] {
                    Rng rng = base.derive(kQueryTag + i);
                    return SampleResult{oracle.exact_uniform_sample(q, rng), inst.data.size()};
                });
            rep.memory_bytes = inst.data.raw().size() * sizeof(float);
            break;
        }
        case SamplerKind::nns: {
            const auto pieces = lsh_pieces(cfg, inst, cfg.seed);
            const auto s =
                NnsSampler::build(inst.data, inst.metric, pieces.family, pieces.params, pieces.perm,
                                  NnsSampler::Mode::static_ranks, 0, exec);
            rep.build_seconds = std::chrono::duration<double>(clock::now() - build_start).count();
            for (uint32_t i = 0; i < queries; ++i) timed(i, [&] { return s.query(q); });
            rep.memory_bytes = s.index().memory_bytes();
            break;
        }
        case SamplerKind::nns_rank_swap: {
            const auto pieces = lsh_pieces(cfg, inst, cfg.seed);
            auto s = NnsSampler::build(inst.data, inst.metric, pieces.family, pieces.params,
                                       pieces.perm, NnsSampler::Mode::rank_swap,
                                       mix64(cfg.seed ^ kQueryTag), exec);
            rep.build_seconds = std::chrono::duration<double>(clock::now() - build_start).count();
            for (uint32_t i = 0; i < queries; ++i) timed(i, [&] { return s.query_rank_swap(q); });
            break;
        }
        case SamplerKind::nnis: {
            const auto pieces = lsh_pieces(cfg, inst, cfg.seed);
            NnisConstants consts;
            consts.c_lambda = cfg.consts.c_lambda;
            consts.c_sigma = cfg.consts.c_sigma;
            consts.c_delta = cfg.consts.c_delta;
            consts.c_t = cfg.consts.c_t;
            consts.sketch_eps = cfg.sketch_eps;
            const auto s = SegmentSampler::build(inst.data, inst.metric, pieces.family,
                                                 pieces.params, pieces.perm,
                                                 mix64(cfg.seed ^ kSketchTag), consts, exec);
            rep.build_seconds = std::chrono::duration<double>(clock::now() - build_start).count();
            for (uint32_t i = 0; i < queries; ++i)
                timed(i, [&] {
                    Rng rng = base.derive(kQueryTag + i);
                    const auto r = s.query(q, rng);
                    return SampleResult{r.id, r.inspected};
                });
            rep.memory_bytes = s.memory_bytes();
            break;
        }
        case SamplerKind::filter: {
            const auto params = FilterParams::create(inst.data.size(), inst.metric.alpha,
                                                     inst.metric.beta, cfg.filter_eps, cfg.seed,
                                                     cfg.repetitions);
            const auto idx = FilterIndex::build(inst.data, params, exec);
            rep.build_seconds = std::chrono::duration<double>(clock::now() - build_start).count();
            for (uint32_t i = 0; i < queries; ++i) timed(i, [&] { return idx.query(q); });
            rep.memory_bytes = idx.memory_bytes();
            break;
        }
        case SamplerKind::filter_nnis: {
            auto idx = NnisFilterIndex::build(inst.data, inst.metric.alpha, inst.metric.beta,
                                              cfg.filter_eps, cfg.seed, cfg.consts.c_f, exec);
            rep.build_seconds = std::chrono::duration<double>(clock::now() - build_start).count();
            for (uint32_t i = 0; i < queries; ++i)
                timed(i, [&] {
                    Rng rng = base.derive(kQueryTag + i);
                    const auto r = idx.query(q, rng);
                    return SampleResult{r.id, r.inspected};
                });
            rep.memory_bytes = idx.memory_bytes();
            break;
        }
    }

    if (queries > 0) {
        rep.mean_inspected = static_cast<double>(inspected_total) / queries;
        double sum = 0.0;
        for (double v : us) sum += v;
        rep.query_mean_us = sum / queries;
        std::vector<double> sorted = us;
        std::nth_element(sorted.begin(), sorted.begin() + queries / 2, sorted.end());
        rep.query_p50_us = sorted[queries / 2];
    }
    return rep;
}

std::string BenchReport::to_kv() const {
    std::ostringstream os;
    os << "sampler=" << sampler_name(sampler) << "\n";
    os << "build_seconds=" << build_seconds << "\n";
    os << "queries=" << queries << "\n";
    os << "query_mean_us=" << query_mean_us << "\n";
    os << "query_p50_us=" << query_p50_us << "\n";
    os << "mean_inspected=" << mean_inspected << "\n";
    os << "bot=" << bot << "\n";
    os << "memory_bytes=" << memory_bytes << "\n";
    return os.str();
}

}  // namespace fann
