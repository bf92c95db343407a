#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <span>
#include <utility>
#include <vector>

// Shared test utilities: adjusted Rand index, Kolmogorov-Smirnov statistics,
// and small numeric helpers.

namespace testutil {

inline double adjusted_rand_index(std::span<const int> a, std::span<const int> b) {
    const std::size_t n = a.size();
    std::map<int, int> ra, rb;
    for (int x : a) ra.emplace(x, static_cast<int>(ra.size()));
    for (int x : b) rb.emplace(x, static_cast<int>(rb.size()));
    std::vector<long long> rows(ra.size(), 0), cols(rb.size(), 0);
    std::map<std::pair<int, int>, long long> cont;
    for (std::size_t i = 0; i < n; ++i) {
        const int ia = ra[a[i]], ib = rb[b[i]];
        ++rows[ia];
        ++cols[ib];
        ++cont[{ia, ib}];
    }
    auto c2 = [](long long m) { return 0.5 * m * (m - 1); };
    double sum_ij = 0, sum_a = 0, sum_b = 0;
    for (auto& [k, v] : cont) sum_ij += c2(v);
    for (long long v : rows) sum_a += c2(v);
    for (long long v : cols) sum_b += c2(v);
    const double total = c2(static_cast<long long>(n));
    const double expected = sum_a * sum_b / total;
    const double maxi = 0.5 * (sum_a + sum_b);
    if (maxi == expected) return 1.0;
    return (sum_ij - expected) / (maxi - expected);
}

// One-sample KS statistic against a CDF.
template <class Cdf>
double ks_statistic(std::vector<double> x, Cdf cdf) {
    std::sort(x.begin(), x.end());
    const double n = static_cast<double>(x.size());
    double d = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double f = cdf(x[i]);
        d = std::max(d, std::abs(f - (i + 1) / n));
        d = std::max(d, std::abs(f - i / n));
    }
    return d;
}

// Two-sample KS statistic.
inline double ks_two_sample(std::vector<double> x, std::vector<double> y) {
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    double d = 0.0;
    std::size_t i = 0, j = 0;
    while (i < x.size() && j < y.size()) {
        if (x[i] <= y[j])
            ++i;
        else
            ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() -
                                 static_cast<double>(j) / y.size()));
    }
    return d;
}

// Asymptotic KS p-value (Marsaglia series, a few terms suffice here).
inline double ks_pvalue(double d, double n_eff) {
    const double t = (std::sqrt(n_eff) + 0.12 + 0.11 / std::sqrt(n_eff)) * d;
    double p = 0.0;
    for (int k = 1; k <= 100; ++k) {
        const double term = 2.0 * (k % 2 ? 1.0 : -1.0) * std::exp(-2.0 * k * k * t * t);
        p += term;
        if (std::abs(term) < 1e-12) break;
    }
    return std::clamp(p, 0.0, 1.0);
}

inline double ks_pvalue_two_sample(double d, std::size_t n, std::size_t m) {
    const double ne = static_cast<double>(n) * m / (n + m);
    return ks_pvalue(d, ne);
}

inline double normal_cdf(double x, double mean = 0.0, double sd = 1.0) {
    return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

inline double mean_of(std::span<const double> v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

inline double var_of(std::span<const double> v) {
    const double m = mean_of(v);
    double s = 0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

}  // namespace testutil
