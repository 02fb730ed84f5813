#include "fann/gen.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

#include "fann/io.hpp"

namespace fann {

namespace {

Metric metric_from_spec(const PlantedSpec& s) {
    if (s.metric == MetricKind::inner_product) return Metric::inner(s.alpha, s.beta);
    return Metric::distance_based(s.metric, s.r, s.c);
}

std::vector<float> random_bits(uint32_t dim, Rng& rng) {
    std::vector<float> v(dim);
    for (auto& x : v) x = (rng.next() & 1) ? 1.0f : 0.0f;
    return v;
}

// Flip `dist` distinct coordinates of q.
std::vector<float> flip_coords(const std::vector<float>& q, uint32_t dist, Rng& rng) {
    std::vector<float> p = q;
    std::vector<uint32_t> picks;
    while (picks.size() < dist) {
        const auto i = static_cast<uint32_t>(rng.below(q.size()));
        if (std::find(picks.begin(), picks.end(), i) == picks.end()) picks.push_back(i);
    }
    for (uint32_t i : picks) p[i] = (p[i] == 0.0f) ? 1.0f : 0.0f;
    return p;
}

std::vector<float> random_unit(uint32_t dim, Rng& rng) {
    std::vector<double> g(dim);
    double norm = 0.0;
    for (auto& x : g) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> v(dim);
    for (uint32_t i = 0; i < dim; ++i) v[i] = static_cast<float>(g[i] / norm);
    return v;
}

// Unit vector with inner product `sim` against unit q.
std::vector<float> unit_at_similarity(const std::vector<float>& q, double sim, Rng& rng) {
    const uint32_t dim = static_cast<uint32_t>(q.size());
    std::vector<double> g(dim);
    for (auto& x : g) x = rng.normal();
    double dot = 0.0;
    for (uint32_t i = 0; i < dim; ++i) dot += g[i] * q[i];
    double norm = 0.0;
    for (uint32_t i = 0; i < dim; ++i) {
        g[i] -= dot * q[i];
        norm += g[i] * g[i];
    }
    norm = std::sqrt(norm);
    if (norm < 1e-12) return unit_at_similarity(q, sim, rng);  // degenerate draw
    const double ortho = std::sqrt(std::max(0.0, 1.0 - sim * sim));
    std::vector<float> p(dim);
    for (uint32_t i = 0; i < dim; ++i)
        p[i] = static_cast<float>(sim * q[i] + ortho * g[i] / norm);
    return p;
}

std::vector<float> euclidean_at(const std::vector<float>& q, double dist, Rng& rng) {
    const uint32_t dim = static_cast<uint32_t>(q.size());
    std::vector<double> dir(dim);
    double norm = 0.0;
    for (auto& x : dir) {
        x = rng.normal();
        norm += x * x;
    }
    norm = std::sqrt(norm);
    std::vector<float> p(dim);
    for (uint32_t i = 0; i < dim; ++i)
        p[i] = static_cast<float>(q[i] + dist * dir[i] / norm);
    return p;
}

PlantedInstance try_generate(const PlantedSpec& spec, Rng& rng) {
    if (spec.n == 0 || spec.dim == 0) throw std::invalid_argument("generate_planted: empty spec");
    if (spec.near_count + spec.cnear_count > spec.n)
        throw std::invalid_argument("generate_planted: near + cnear exceeds n");
    const Metric metric = metric_from_spec(spec);

    PlantedInstance inst{Dataset(spec.dim), {}, metric, {}, {}, 0};

    switch (spec.metric) {
        case MetricKind::hamming: {
            const auto rmax = static_cast<uint32_t>(std::floor(spec.r));
            const auto crmax = static_cast<uint32_t>(std::floor(spec.c * spec.r));
            if (spec.near_count > 0 && rmax < 1)
                throw std::invalid_argument("generate_planted: hamming radius below 1");
            if (spec.cnear_count > 0 && crmax < rmax + 1)
                throw std::invalid_argument("generate_planted: no integral cnear shell");
            if (crmax >= spec.dim)
                throw std::invalid_argument("generate_planted: cr must be below the dimension");
            inst.query = random_bits(spec.dim, rng);
            for (uint32_t i = 0; i < spec.near_count; ++i)
                inst.data.add(flip_coords(inst.query, 1 + static_cast<uint32_t>(rng.below(rmax)), rng));
            for (uint32_t i = 0; i < spec.cnear_count; ++i)
                inst.data.add(flip_coords(
                    inst.query, rmax + 1 + static_cast<uint32_t>(rng.below(crmax - rmax)), rng));
            for (uint32_t i = spec.near_count + spec.cnear_count; i < spec.n; ++i) {
                auto p = random_bits(spec.dim, rng);
                // March away from q until strictly outside the cnear shell.
                while (distance(metric, p, inst.query) <= spec.c * spec.r) {
                    const auto j = static_cast<uint32_t>(rng.below(spec.dim));
                    if (p[j] == inst.query[j]) p[j] = (p[j] == 0.0f) ? 1.0f : 0.0f;
                }
                inst.data.add(p);
            }
            break;
        }
        case MetricKind::euclidean: {
            inst.query.resize(spec.dim);
            for (auto& x : inst.query) x = static_cast<float>(rng.normal());
            const double r = spec.r, cr = spec.c * spec.r;
            for (uint32_t i = 0; i < spec.near_count; ++i)
                inst.data.add(euclidean_at(inst.query, (0.05 + 0.9 * rng.real()) * r, rng));
            for (uint32_t i = 0; i < spec.cnear_count; ++i)
                inst.data.add(euclidean_at(
                    inst.query, r + (0.05 + 0.9 * rng.real()) * (cr - r), rng));
            for (uint32_t i = spec.near_count + spec.cnear_count; i < spec.n; ++i)
                inst.data.add(euclidean_at(inst.query, cr * (1.05 + 2.0 * rng.real()), rng));
            break;
        }
        case MetricKind::inner_product: {
            inst.query = random_unit(spec.dim, rng);
            double lo = spec.near_sim_lo, hi = spec.near_sim_hi;
            if (lo == 0.0 && hi == 0.0) {
                lo = spec.alpha;
                hi = 0.5 * (1.0 + spec.alpha);
            }
            if (!(lo >= spec.alpha && hi >= lo && hi < 1.0))
                throw std::invalid_argument("generate_planted: bad near similarity band");
            for (uint32_t i = 0; i < spec.near_count; ++i)
                inst.data.add(unit_at_similarity(inst.query, lo + (hi - lo) * rng.real(), rng));
            const double band = spec.alpha - spec.beta;
            for (uint32_t i = 0; i < spec.cnear_count; ++i)
                inst.data.add(unit_at_similarity(
                    inst.query, spec.beta + (0.05 + 0.9 * rng.real()) * band, rng));
            for (uint32_t i = spec.near_count + spec.cnear_count; i < spec.n; ++i) {
                for (int tries = 0;; ++tries) {
                    auto p = random_unit(spec.dim, rng);
                    if (distance(metric, p, inst.query) <= spec.beta - 1e-3) {
                        inst.data.add(p);
                        break;
                    }
                    if (tries > 200)
                        throw std::invalid_argument(
                            "generate_planted: cannot place background below beta");
                }
            }
            break;
        }
    }

    for (PointId id = 0; id < spec.near_count; ++id) inst.near_ids.push_back(id);
    for (PointId id = spec.near_count; id < spec.near_count + spec.cnear_count; ++id)
        inst.cnear_ids.push_back(id);
    return inst;
}

}  // namespace

PlantedInstance generate_planted(const PlantedSpec& spec, Rng& rng) {
    for (int attempt = 0; attempt < 100; ++attempt) {
        PlantedInstance inst = try_generate(spec, rng);
        const NeighborhoodOracle oracle(inst.data, inst.metric);
        const auto near = oracle.exact_ball(inst.query);
        const auto wide = oracle.exact_ball(inst.query, /*include_cnear=*/true);
        if (near == inst.near_ids && wide.size() == inst.near_ids.size() + inst.cnear_ids.size()) {
            inst.seed = rng.seed();
            return inst;
        }
    }
    throw std::runtime_error("generate_planted: validation kept failing after 100 attempts");
}

void save_instance(const PlantedInstance& inst, const std::string& prefix, FileFormat format) {
    save_dataset(inst.data, prefix + ".data", format);
    Dataset q(inst.query.size(), std::vector<float>(inst.query.begin(), inst.query.end()));
    save_dataset(q, prefix + ".query", format);
    std::ofstream meta(prefix + ".meta");
    if (!meta) throw IoError(IoError::Kind::io_failure, "cannot write " + prefix + ".meta");
    const char* kind = inst.metric.kind == MetricKind::hamming      ? "hamming"
                       : inst.metric.kind == MetricKind::euclidean  ? "euclidean"
                                                                    : "inner_product";
    meta << "format=" << (format == FileFormat::text ? "text" : "binary") << "\n";
    meta << "metric=" << kind << "\n";
    meta << "r=" << inst.metric.r << "\n";
    meta << "c=" << inst.metric.c << "\n";
    meta << "alpha=" << inst.metric.alpha << "\n";
    meta << "beta=" << inst.metric.beta << "\n";
    meta << "near=" << inst.near_ids.size() << "\n";
    meta << "cnear=" << inst.cnear_ids.size() << "\n";
    meta << "seed=" << inst.seed << "\n";
}

PlantedInstance load_instance(const std::string& prefix) {
    std::ifstream metaf(prefix + ".meta");
    if (!metaf) throw IoError(IoError::Kind::io_failure, "cannot open " + prefix + ".meta");
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(metaf, line)) {
        const auto eq = line.find('=');
        if (eq != std::string::npos) kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    const FileFormat format =
        kv.count("format") ? parse_format(kv.at("format")) : FileFormat::binary;
    Dataset data = load_dataset(prefix + ".data", format);
    Dataset qset = load_dataset(prefix + ".query", format);
    if (qset.size() != 1 || qset.dim() != data.dim())
        throw IoError(IoError::Kind::dimension_mismatch, "query file must hold one point of matching dimension");

    const std::string kind = kv.at("metric");
    Metric metric;
    if (kind == "inner_product")
        metric = Metric::inner(std::stod(kv.at("alpha")), std::stod(kv.at("beta")));
    else
        metric = Metric::distance_based(kind == "hamming" ? MetricKind::hamming : MetricKind::euclidean,
                                        std::stod(kv.at("r")), std::stod(kv.at("c")));

    PlantedInstance inst{std::move(data), {}, metric, {}, {}, std::stoull(kv.at("seed"))};
    const auto q = qset[0];
    inst.query.assign(q.begin(), q.end());
    const NeighborhoodOracle oracle(inst.data, metric);
    inst.near_ids = oracle.exact_ball(inst.query);
    const auto wide = oracle.exact_ball(inst.query, true);
    for (PointId id : wide)
        if (!std::binary_search(inst.near_ids.begin(), inst.near_ids.end(), id))
            inst.cnear_ids.push_back(id);
    if (inst.near_ids.size() != std::stoull(kv.at("near")) ||
        inst.cnear_ids.size() != std::stoull(kv.at("cnear")))
        throw std::runtime_error("load_instance: planted counts in meta do not match the data");
    return inst;
}

}  // namespace fann
