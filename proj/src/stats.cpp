#include "fann/stats.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <boost/math/special_functions/gamma.hpp>

namespace fann {

double chi2_upper_pvalue(double x, double dof) {
    if (x < 0.0 || dof <= 0.0) throw std::invalid_argument("chi2_upper_pvalue: bad arguments");
    if (x == 0.0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

DistReport compare_distributions(const std::vector<uint64_t>& observed, uint64_t bot_count,
                                 const std::vector<double>& expected) {
    if (expected.empty()) throw std::invalid_argument("compare_distributions: empty expected support");
    if (observed.size() != expected.size())
        throw std::invalid_argument("compare_distributions: observed/expected size mismatch");
    const double psum = std::accumulate(expected.begin(), expected.end(), 0.0);
    if (std::abs(psum - 1.0) > 1e-9)
        throw std::invalid_argument("compare_distributions: expected probabilities must sum to 1");

    DistReport rep;
    const uint64_t hits = std::accumulate(observed.begin(), observed.end(), uint64_t{0});
    rep.n_samples = hits + bot_count;
    if (rep.n_samples == 0) return rep;

    const double total = static_cast<double>(rep.n_samples);
    double tvd = static_cast<double>(bot_count) / total;  // expected bottom mass is zero
    for (size_t i = 0; i < observed.size(); ++i) {
        const double dev = std::abs(static_cast<double>(observed[i]) / total - expected[i]);
        tvd += dev;
        rep.max_abs_dev = std::max(rep.max_abs_dev, dev);
    }
    rep.tvd = 0.5 * tvd;

    // Chi-square over successes, merging cells until each expects >= 5.
    if (hits == 0) {
        rep.chi2_pvalue = 0.0;
        return rep;
    }
    std::vector<size_t> order(expected.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](size_t a, size_t b) { return expected[a] < expected[b]; });
    const double nh = static_cast<double>(hits);
    std::vector<std::pair<double, double>> cells;  // (observed, expected counts)
    double acc_obs = 0.0, acc_exp = 0.0;
    for (size_t idx : order) {
        acc_obs += static_cast<double>(observed[idx]);
        acc_exp += expected[idx] * nh;
        if (acc_exp >= 5.0) {
            cells.emplace_back(acc_obs, acc_exp);
            acc_obs = acc_exp = 0.0;
        }
    }
    if (acc_exp > 0.0) {
        if (!cells.empty()) {
            cells.back().first += acc_obs;
            cells.back().second += acc_exp;
        } else {
            cells.emplace_back(acc_obs, acc_exp);
        }
    }
    if (cells.size() < 2) {
        // Degenerate support: nothing to test.
        rep.dof = 0;
        rep.chi2_pvalue = 1.0;
        return rep;
    }
    double stat = 0.0;
    for (const auto& [obs, exp] : cells) {
        const double d = obs - exp;
        stat += d * d / exp;
    }
    rep.chi2_stat = stat;
    rep.dof = static_cast<uint32_t>(cells.size() - 1);
    rep.chi2_pvalue = chi2_upper_pvalue(stat, rep.dof);
    return rep;
}

IndependenceReport chi2_independence(const std::vector<uint64_t>& table, uint32_t k) {
    if (k < 2 || table.size() != static_cast<size_t>(k) * k)
        throw std::invalid_argument("chi2_independence: table must be k x k with k >= 2");
    IndependenceReport rep;
    std::vector<double> row(k, 0.0), col(k, 0.0);
    double total = 0.0;
    for (uint32_t i = 0; i < k; ++i)
        for (uint32_t j = 0; j < k; ++j) {
            const double v = static_cast<double>(table[static_cast<size_t>(i) * k + j]);
            row[i] += v;
            col[j] += v;
            total += v;
        }
    if (total == 0.0) throw std::invalid_argument("chi2_independence: empty table");
    double stat = 0.0;
    for (uint32_t i = 0; i < k; ++i)
        for (uint32_t j = 0; j < k; ++j) {
            const double exp = row[i] * col[j] / total;
            if (exp < 5.0) rep.valid = false;
            if (exp > 0.0) {
                const double d = static_cast<double>(table[static_cast<size_t>(i) * k + j]) - exp;
                stat += d * d / exp;
            }
        }
    rep.chi2_stat = stat;
    rep.dof = (k - 1) * (k - 1);
    rep.chi2_pvalue = chi2_upper_pvalue(stat, rep.dof);
    return rep;
}

}  // namespace fann
