#include <CLI11.hpp>
#include <fstream>
#include <iostream>

#include "fann/fair_sampler.hpp"
#include "fann/filter.hpp"
#include "fann/gen.hpp"
#include "fann/io.hpp"
#include "fann/nnis.hpp"
#include "fann/runners.hpp"

namespace {

struct CommonOpts {
    std::string input;
    std::string sampler = "nns";
    std::optional<uint64_t> seed;
    std::vector<std::string> consts;
    double filter_eps = 0.1;
    double sketch_eps = 0.5;
    uint32_t repetitions = 0;
    bool serial = false;
};

void add_common(CLI::App* cmd, CommonOpts& o, bool with_input = true) {
    if (with_input)
        cmd->add_option("--input", o.input, "instance prefix written by `gen`")->required();
    cmd->add_option("--sampler", o.sampler,
                    "nns | nns_rank_swap | nnis | filter | filter_nnis | oracle");
    cmd->add_option("--seed", o.seed, "seed (falls back to FANN_SEED, then 1)");
    cmd->add_option("--const", o.consts, "override a hidden constant, NAME=VALUE (repeatable)");
    cmd->add_option("--eps", o.filter_eps, "filter query threshold slack parameter");
    cmd->add_option("--sketch-eps", o.sketch_eps, "distinct-count sketch accuracy");
    cmd->add_option("--repetitions", o.repetitions, "filter copies (0 = calibrated default)");
    cmd->add_flag("--serial", o.serial, "run kernels single-threaded");
}

fann::Config make_config(const CommonOpts& o, uint32_t trials) {
    fann::Config cfg;
    cfg.sampler = fann::parse_sampler(o.sampler);
    cfg.seed = fann::resolve_seed(o.seed);
    cfg.trials = trials;
    cfg.filter_eps = o.filter_eps;
    cfg.sketch_eps = o.sketch_eps;
    cfg.repetitions = o.repetitions;
    for (const auto& kv : o.consts) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos) throw std::invalid_argument("--const expects NAME=VALUE");
        cfg.consts.set(kv.substr(0, eq), std::stod(kv.substr(eq + 1)));
    }
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
    } else {
        std::ofstream out(out_path);
        if (!out) throw std::runtime_error("cannot write " + out_path);
        out << text;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"fair near-neighbor sampling toolkit"};
    app.require_subcommand(1);

    // gen
    auto* gen = app.add_subcommand("gen", "generate a planted instance");
    fann::PlantedSpec spec;
    std::string gen_metric = "hamming", gen_out, gen_format = "binary";
    std::optional<uint64_t> gen_seed;
    gen->add_option("--metric", gen_metric, "hamming | euclidean | inner_product");
    gen->add_option("--n", spec.n, "dataset size")->required();
    gen->add_option("--d", spec.dim, "dimension")->required();
    gen->add_option("--r", spec.r, "near radius (distance metrics)");
    gen->add_option("--c", spec.c, "approximation factor (distance metrics)");
    gen->add_option("--alpha", spec.alpha, "near similarity (inner_product)");
    gen->add_option("--beta", spec.beta, "far similarity bound (inner_product)");
    gen->add_option("--near", spec.near_count, "planted near count");
    gen->add_option("--cnear", spec.cnear_count, "planted cnear count");
    gen->add_option("--near-sim-lo", spec.near_sim_lo, "near similarity band low (inner_product)");
    gen->add_option("--near-sim-hi", spec.near_sim_hi, "near similarity band high (inner_product)");
    gen->add_option("--seed", gen_seed, "seed");
    gen->add_option("--format", gen_format, "text | binary");
    gen->add_option("--out", gen_out, "output prefix")->required();

    // build
    auto* build = app.add_subcommand("build", "build a structure and report its parameters");
    CommonOpts build_opts;
    add_common(build, build_opts);

    // query
    auto* query = app.add_subcommand("query", "run sampling queries and print outcomes");
    CommonOpts query_opts;
    uint32_t query_count = 10;
    std::string query_out;
    add_common(query, query_opts);
    query->add_option("--queries", query_count, "number of queries");
    query->add_option("--out", query_out, "write results to a file instead of stdout");

    // fairness
    auto* fair = app.add_subcommand("fairness", "tally a sampler against the uniform oracle");
    CommonOpts fair_opts;
    uint32_t fair_trials = 1000;
    std::string fair_out;
    add_common(fair, fair_opts);
    fair->add_option("--trials", fair_trials, "trial count");
    fair->add_option("--out", fair_out, "write the key=value report to a file");

    // bench
    auto* bench = app.add_subcommand("bench", "measure build/query cost");
    CommonOpts bench_opts;
    uint32_t bench_queries = 100;
    std::string bench_out;
    add_common(bench, bench_opts);
    bench->add_option("--queries", bench_queries, "query count");
    bench->add_option("--out", bench_out, "write the key=value report to a file");

    try {
        app.parse(argc, argv);

        if (gen->parsed()) {
            if (gen_metric == "hamming")
                spec.metric = fann::MetricKind::hamming;
            else if (gen_metric == "euclidean")
                spec.metric = fann::MetricKind::euclidean;
            else if (gen_metric == "inner_product")
                spec.metric = fann::MetricKind::inner_product;
            else
                throw std::invalid_argument("unknown metric '" + gen_metric + "'");
            fann::Rng rng(fann::resolve_seed(gen_seed));
            const auto inst = fann::generate_planted(spec, rng);
            fann::save_instance(inst, gen_out, fann::parse_format(gen_format));
            std::cout << "wrote " << gen_out << ".data/.query/.meta  n=" << inst.data.size()
                      << " d=" << inst.data.dim() << " near=" << inst.near_ids.size()
                      << " cnear=" << inst.cnear_ids.size() << "\n";
            return 0;
        }

        const CommonOpts& o = build->parsed() ? build_opts
                              : query->parsed() ? query_opts
                              : fair->parsed()  ? fair_opts
                                                : bench_opts;
        const fann::Exec exec = o.serial ? fann::Exec::serial : fann::Exec::parallel;
        const auto inst = fann::load_instance(o.input);

        if (build->parsed() || query->parsed()) {
            const auto cfg = make_config(o, 0);
            fann::BenchReport rep =
                fann::run_bench(cfg, inst, build->parsed() ? 0 : query_count, exec);
            if (build->parsed()) {
                std::cout << rep.to_kv();
                return 0;
            }
            // outcome listing via the fairness tally at small trial count
            std::ostringstream os;
            fann::Config qcfg = cfg;
            qcfg.trials = query_count;
            const auto frep = fann::run_fairness_test(qcfg, inst, exec);
            os << frep.to_table();
            os << "mean_query_us=" << rep.query_mean_us << "\n";
            emit(os.str(), query_out);
            return 0;
        }

        if (fair->parsed()) {
            const auto cfg = make_config(o, fair_trials);
            const auto rep = fann::run_fairness_test(cfg, inst, exec);
            std::cout << rep.to_table();
            emit(rep.to_kv(), fair_out);
            return 0;
        }

        if (bench->parsed()) {
            const auto cfg = make_config(o, 0);
            const auto rep = fann::run_bench(cfg, inst, bench_queries, exec);
            emit(rep.to_kv(), bench_out);
            return 0;
        }
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
