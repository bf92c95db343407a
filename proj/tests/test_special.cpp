#include <cmath>

#include "doctest.h"
#include "nestmix/special.hpp"

using namespace nestmix;

namespace {
constexpr double kEulerGamma = 0.57721566490153286060651209;
}

TEST_CASE("digamma matches closed-form values") {
    CHECK(digamma(1.0) == doctest::Approx(-kEulerGamma).epsilon(1e-10));
    CHECK(digamma(0.5) == doctest::Approx(-kEulerGamma - 2.0 * std::log(2.0)).epsilon(1e-10));
    // psi(n) = H_{n-1} - gamma
    double h = 0.0;
    for (int n = 1; n <= 20; ++n) {
        CHECK(digamma(n) == doctest::Approx(h - kEulerGamma).epsilon(1e-10));
        h += 1.0 / n;
    }
    // recurrence psi(x+1) = psi(x) + 1/x on scattered points
    for (double x : {0.013, 0.7, 2.31, 17.9, 431.0}) {
        CHECK(digamma(x + 1.0) == doctest::Approx(digamma(x) + 1.0 / x).epsilon(1e-11));
    }
    CHECK_THROWS_AS(digamma(0.0), std::domain_error);
    CHECK_THROWS_AS(digamma(-1.5), std::domain_error);
}

TEST_CASE("digamma agrees with a central difference of lgamma") {
    for (double x : {0.2, 1.0, 3.7, 12.0, 250.0}) {
        const double h = 1e-5 * std::max(1.0, x);
        const double num = (std::lgamma(x + h) - std::lgamma(x - h)) / (2.0 * h);
        CHECK(digamma(x) == doctest::Approx(num).epsilon(1e-6));
    }
}

TEST_CASE("log_beta and Beta expectations") {
    CHECK(log_beta(1.0, 1.0) == doctest::Approx(0.0));
    CHECK(log_beta(2.0, 3.0) == doctest::Approx(std::log(1.0 / 12.0)).epsilon(1e-12));
    CHECK(log_beta(5.0, 7.0) == doctest::Approx(log_beta(7.0, 5.0)).epsilon(1e-14));
    // E[log V] + E[log(1-V)] symmetry for Beta(a,b) vs Beta(b,a)
    CHECK(beta_elog(2.5, 4.0) == doctest::Approx(beta_elog1m(4.0, 2.5)).epsilon(1e-13));
    // Beta(1,1): E[log V] = -1
    CHECK(beta_elog(1.0, 1.0) == doctest::Approx(-1.0).epsilon(1e-12));
}

TEST_CASE("xlogx convention") {
    CHECK(xlogx(0.0) == 0.0);
    CHECK(xlogx(1.0) == 0.0);
    CHECK(xlogx(2.0) == doctest::Approx(2.0 * std::log(2.0)));
}
