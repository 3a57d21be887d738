#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <utility>
#include <vector>

#include <boost/math/distributions/students_t.hpp>

#include "ptlab/common.hpp"

namespace ptlab {

inline Real mean_of(const std::vector<Real>& v) {
    return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<Real>(v.size());
}

struct TTestResult {
    Real p_value = 1.0;
    Real t_stat = 0.0;
    Index dof = 0;
    bool degenerate = false;  // zero variance of the paired differences
};

/// Two-sided paired t-test. Inputs must be paired run-for-run (same split
/// and init seeds). Zero-variance differences are flagged and reported as
/// p = 0 (consistent nonzero difference) or p = 1 (all differences zero).
inline TTestResult paired_t_test(const std::vector<Real>& a, const std::vector<Real>& b) {
    if (a.size() != b.size()) throw std::invalid_argument("paired_t_test: unequal lengths");
    const std::size_t n = a.size();
    if (n < 2) throw std::invalid_argument("paired_t_test: need at least 2 paired runs");

    std::vector<Real> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = a[i] - b[i];
    const Real md = mean_of(d);
    Real ss = 0.0;
    for (Real x : d) ss += (x - md) * (x - md);
    const Real sd = std::sqrt(ss / static_cast<Real>(n - 1));

    TTestResult r;
    r.dof = static_cast<Index>(n - 1);
    if (sd == 0.0) {
        r.degenerate = true;
        r.p_value = (md == 0.0) ? 1.0 : 0.0;
        r.t_stat = (md == 0.0) ? 0.0 : std::copysign(std::numeric_limits<Real>::infinity(), md);
        return r;
    }
    r.t_stat = md / (sd / std::sqrt(static_cast<Real>(n)));
    boost::math::students_t_distribution<Real> dist(static_cast<Real>(r.dof));
    r.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::abs(r.t_stat)));
    return r;
}

/// Percentile-bootstrap 95% confidence interval for the mean. Deterministic
/// per seed; a single value yields the degenerate interval at that value.
inline std::pair<Real, Real> bootstrap_ci(const std::vector<Real>& values, Index resamples,
                                          std::uint64_t seed) {
    if (values.empty()) throw std::invalid_argument("bootstrap_ci: need at least one value");
    if (values.size() == 1) return {values[0], values[0]};
    if (resamples < 1) throw std::invalid_argument("bootstrap_ci: need at least one resample");

    Rng rng(mix_seed(seed, 0xb007));
    std::uniform_int_distribution<std::size_t> pick(0, values.size() - 1);
    std::vector<Real> means(resamples);
    for (Index r = 0; r < resamples; ++r) {
        Real s = 0.0;
        for (std::size_t i = 0; i < values.size(); ++i) s += values[pick(rng)];
        means[r] = s / static_cast<Real>(values.size());
    }
    std::sort(means.begin(), means.end());
    auto quantile = [&means](Real q) {
        const Real pos = q * static_cast<Real>(means.size() - 1);
        const std::size_t lo = static_cast<std::size_t>(pos);
        if (lo + 1 >= means.size()) return means.back();
        const Real frac = pos - static_cast<Real>(lo);
        return means[lo] + frac * (means[lo + 1] - means[lo]);
    };
    return {quantile(0.025), quantile(0.975)};
}

} // namespace ptlab
