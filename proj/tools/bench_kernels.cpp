// Compares the serial reference path of each data-parallel kernel against the
// OpenMP path on a mid-sized synthetic workload, and checks that both produce
// identical structures.

#include <chrono>
#include <cstdio>

#include "fann/fair_sampler.hpp"
#include "fann/filter.hpp"
#include "fann/gen.hpp"
#include "fann/nnis.hpp"
#include "fann/runners.hpp"

using namespace fann;

namespace {

template <typename F>
double seconds(F&& f) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

void row(const char* name, double serial_s, double parallel_s, bool identical) {
    std::printf("%-28s %10.3fs %10.3fs %8.2fx   %s\n", name, serial_s, parallel_s,
                serial_s / parallel_s, identical ? "identical" : "MISMATCH");
}

}  // namespace

int main() {
    std::printf("%-28s %11s %11s %9s   %s\n", "kernel", "serial", "openmp", "speedup", "check");

    Rng rng(7);
    PlantedSpec spec;
    spec.metric = MetricKind::hamming;
    spec.n = 20000;
    spec.dim = 64;
    spec.r = 2;
    spec.c = 15;
    spec.near_count = 10;
    spec.cnear_count = 50;
    const auto inst = generate_planted(spec, rng);
    const auto family = LshFamily::default_for(inst.metric, static_cast<uint32_t>(inst.data.dim()));
    const auto params = compute_params(family, inst.metric, inst.data.size(), 3.0, 21);
    Rng prng(9);
    const auto perm = RankPermutation::random(static_cast<uint32_t>(inst.data.size()), prng);

    {
        LshIndex a, b;
        const double ts = seconds([&] {
            a = LshIndex::build(inst.data, inst.metric, family, params, perm, Exec::serial);
        });
        const double tp = seconds([&] {
            b = LshIndex::build(inst.data, inst.metric, family, params, perm, Exec::parallel);
        });
        row("lsh_build", ts, tp, a.state_hash() == b.state_hash());
    }

    {
        SegmentSampler a, b;
        const double ts = seconds([&] {
            a = SegmentSampler::build(inst.data, inst.metric, family, params, perm, 5, {},
                                      Exec::serial);
        });
        const double tp = seconds([&] {
            b = SegmentSampler::build(inst.data, inst.metric, family, params, perm, 5, {},
                                      Exec::parallel);
        });
        row("segment_sampler_build", ts, tp, a.state_hash() == b.state_hash());
    }

    {
        PlantedSpec fs;
        fs.metric = MetricKind::inner_product;
        fs.n = 4000;
        fs.dim = 32;
        fs.alpha = 0.7;
        fs.beta = 0.3;
        fs.near_count = 8;
        fs.cnear_count = 20;
        Rng frng(11);
        const auto finst = generate_planted(fs, frng);
        const auto fparams = FilterParams::create(finst.data.size(), 0.7, 0.3, 0.1, 3, 2);
        FilterIndex a, b;
        const double ts =
            seconds([&] { a = FilterIndex::build(finst.data, fparams, Exec::serial); });
        const double tp =
            seconds([&] { b = FilterIndex::build(finst.data, fparams, Exec::parallel); });
        row("filter_build", ts, tp, a.state_hash() == b.state_hash());
    }

    {
        Config cfg;
        cfg.sampler = SamplerKind::nns;
        cfg.seed = 33;
        cfg.trials = 400;
        PlantedSpec ss = spec;
        ss.n = 2000;
        Rng srng(13);
        const auto sinst = generate_planted(ss, srng);
        FairnessReport a, b;
        const double ts = seconds([&] { a = run_fairness_test(cfg, sinst, Exec::serial); });
        const double tp = seconds([&] { b = run_fairness_test(cfg, sinst, Exec::parallel); });
        row("fairness_trials(nns)", ts, tp, a.counts == b.counts && a.bot == b.bot);
    }

    return 0;
}
