#pragma once

#include <cmath>
#include <stdexcept>

namespace nestmix {

// Digamma via upward recurrence into the asymptotic region.
// Accurate to ~1e-12 for x in [1e-6, 1e8].
inline double digamma(double x) {
    if (!(x > 0.0)) throw std::domain_error("digamma: x must be > 0");
    double result = 0.0;
    while (x < 6.0) {
        result -= 1.0 / x;
        x += 1.0;
    }
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    // log(x) - 1/(2x) - sum of Bernoulli terms
    result += std::log(x) - 0.5 * inv
        - inv2 * (1.0 / 12.0 - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))));
    return result;
}

inline double log_beta(double a, double b) {
    return std::lgamma(a) + std::lgamma(b) - std::lgamma(a + b);
}

// E[log V] for V ~ Beta(a, b)
inline double beta_elog(double a, double b) { return digamma(a) - digamma(a + b); }

// E[log(1-V)] for V ~ Beta(a, b)
inline double beta_elog1m(double a, double b) { return digamma(b) - digamma(a + b); }

// x*log(x) with the 0*log(0) = 0 convention
inline double xlogx(double x) { return x > 0.0 ? x * std::log(x) : 0.0; }

}  // namespace nestmix
