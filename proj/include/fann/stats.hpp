#pragma once

#include <cstdint>
#include <vector>

namespace fann {

/// Comparison of an observed outcome tally against an expected distribution.
/// tvd includes the mass of failed (bottom) outcomes; the chi-square statistic
/// is computed over successful outcomes only, with low-expectation cells
/// merged until every cell expects at least 5 counts.
struct DistReport {
    double tvd = 0.0;
    double chi2_stat = 0.0;
    double chi2_pvalue = 0.0;
    uint64_t n_samples = 0;
    uint32_t dof = 0;
    double max_abs_dev = 0.0;  // max |freq_i - p_i| over the expected support
};

/// observed[i] tallies outcome i; expected[i] is its probability (sums to 1).
/// bot_count tallies queries that returned no point.
DistReport compare_distributions(const std::vector<uint64_t>& observed, uint64_t bot_count,
                                 const std::vector<double>& expected);

/// Pearson chi-square test of independence on a k x k contingency table of
/// outcome pairs (row-major). dof = (k-1)^2. valid is false when any expected
/// cell count falls below 5.
struct IndependenceReport {
    double chi2_stat = 0.0;
    double chi2_pvalue = 0.0;
    uint32_t dof = 0;
    bool valid = true;
};

IndependenceReport chi2_independence(const std::vector<uint64_t>& table, uint32_t k);

/// Upper tail of the chi-square distribution: P(X >= x) with `dof` degrees of
/// freedom, via the regularized upper incomplete gamma function.
double chi2_upper_pvalue(double x, double dof);

}  // namespace fann
