#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include <boost/math/distributions/binomial.hpp>
#include <boost/math/distributions/chi_squared.hpp>

#include "vrw/common.hpp"

namespace vrw {

/// Wilson 95% score interval for a binomial proportion; valid at small counts.
struct Interval {
    double lo = 0.0, hi = 1.0;
};

inline Interval wilson_interval(std::uint64_t successes, std::uint64_t trials,
                                double z = 1.959963984540054) {
    if (trials == 0) return {0.0, 1.0};
    double n = static_cast<double>(trials);
    double p = static_cast<double>(successes) / n;
    double z2 = z * z;
    double denom = 1.0 + z2 / n;
    double center = (p + z2 / (2 * n)) / denom;
    double half = z / denom * std::sqrt(p * (1 - p) / n + z2 / (4 * n * n));
    return {std::max(0.0, center - half), std::min(1.0, center + half)};
}

struct SignTestResult {
    std::uint64_t positives = 0;
    std::uint64_t negatives = 0;
    double p_value = 1.0;
    bool pass = false;  // at the configured level
};

/// Two-sided exact sign test of P(sample > 0) = 1/2; zeros are dropped.
inline SignTestResult sign_symmetry_test(const std::vector<double>& samples,
                                         double level = 1.0e-3) {
    SignTestResult r;
    for (double s : samples) {
        if (s > 0) ++r.positives;
        else if (s < 0) ++r.negatives;
    }
    std::uint64_t n = r.positives + r.negatives;
    if (n < 100) throw ConfigError("sign_symmetry_test: need at least 100 nonzero samples");
    boost::math::binomial_distribution<double> bin(static_cast<double>(n), 0.5);
    std::uint64_t k = std::min(r.positives, r.negatives);
    double tail = boost::math::cdf(bin, static_cast<double>(k));
    r.p_value = std::min(1.0, 2.0 * tail);
    r.pass = r.p_value > level;
    return r;
}

struct ChiSquareResult {
    double statistic = 0.0;
    std::uint64_t dof = 0;
    double p_value = 1.0;
    std::size_t merged_cells = 0;
};

/// Goodness-of-fit of observed counts against oracle probabilities. Cells
/// with expected count < 5 are merged into one pooled cell (standard
/// small-expectation handling), with the dof bookkeeping adjusted.
inline ChiSquareResult path_law_chisq(const std::vector<std::uint64_t>& observed,
                                      const std::vector<double>& expected_probs) {
    if (observed.size() != expected_probs.size() || observed.empty())
        throw ConfigError("path_law_chisq: size mismatch");
    double total = 0.0;
    for (auto c : observed) total += static_cast<double>(c);
    double psum = 0.0;
    for (double p : expected_probs) {
        if (p < 0) throw ConfigError("path_law_chisq: negative probability");
        psum += p;
    }
    if (std::abs(psum - 1.0) > 1.0e-9)
        throw ConfigError("path_law_chisq: oracle probabilities must sum to 1");

    ChiSquareResult r;
    double merged_obs = 0.0, merged_exp = 0.0;
    std::size_t kept = 0;
    double stat = 0.0;
    for (std::size_t i = 0; i < observed.size(); ++i) {
        double e = expected_probs[i] * total;
        if (e < 5.0) {
            merged_obs += static_cast<double>(observed[i]);
            merged_exp += e;
            ++r.merged_cells;
        } else {
            double d = static_cast<double>(observed[i]) - e;
            stat += d * d / e;
            ++kept;
        }
    }
    if (merged_exp > 0.0) {
        if (merged_exp < 5.0 && kept == 0)
            throw ConfigError("path_law_chisq: all cells degenerate");
        double d = merged_obs - merged_exp;
        stat += d * d / merged_exp;
        ++kept;
    }
    if (kept < 2) throw ConfigError("path_law_chisq: fewer than two usable cells");
    r.statistic = stat;
    r.dof = kept - 1;
    boost::math::chi_squared_distribution<double> chi(static_cast<double>(r.dof));
    r.p_value = 1.0 - boost::math::cdf(chi, stat);
    return r;
}

inline double median(std::vector<double> v) {
    if (v.empty()) throw ConfigError("median: empty input");
    std::size_t mid = v.size() / 2;
    std::nth_element(v.begin(), v.begin() + mid, v.end());
    double hi = v[mid];
    if (v.size() % 2 == 1) return hi;
    std::nth_element(v.begin(), v.begin() + mid - 1, v.begin() + mid);
    return 0.5 * (v[mid - 1] + hi);
}

}  // namespace vrw
