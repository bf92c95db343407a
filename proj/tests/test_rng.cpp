#include <cmath>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "nestmix/rng.hpp"

using namespace nestmix;
using namespace testutil;

namespace {
// KS critical value at alpha ~ 1e-3 for large n.
double ks_crit(std::size_t n) { return 1.949 / std::sqrt(static_cast<double>(n)); }
}  // namespace

TEST_CASE("identical seeds give identical sequences") {
    RngStream a(42), b(42);
    for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
    RngStream c(43);
    bool any_diff = false;
    RngStream a2(42);
    for (int i = 0; i < 10; ++i) any_diff |= (a2.next_u64() != c.next_u64());
    CHECK(any_diff);
}

TEST_CASE("substreams are deterministic and distinct") {
    RngStream root(7);
    RngStream s1 = root.substream(3);
    RngStream s2 = root.substream(3);
    CHECK(s1.next_u64() == s2.next_u64());
    RngStream s3 = root.substream(4);
    RngStream s1b = root.substream(3);
    CHECK(s1b.next_u64() != s3.next_u64());
    // drawing from the parent does not disturb substream derivation
    RngStream root2(7);
    root2.uniform();
    CHECK(root2.substream(3).next_u64() == root.substream(3).next_u64());
}

TEST_CASE("uniform lies in the open unit interval and is KS-consistent") {
    RngStream r(11);
    const std::size_t n = 40000;
    std::vector<double> x(n);
    for (auto& v : x) {
        v = r.uniform();
        REQUIRE(v > 0.0);
        REQUIRE(v < 1.0);
    }
    CHECK(ks_statistic(x, [](double t) { return t; }) < ks_crit(n));
}

TEST_CASE("normal matches the Gaussian CDF") {
    RngStream r(12);
    const std::size_t n = 40000;
    std::vector<double> x(n);
    for (auto& v : x) v = r.normal(1.5, 2.0);
    CHECK(ks_statistic(x, [](double t) { return normal_cdf(t, 1.5, 2.0); }) < ks_crit(n));
}

TEST_CASE("gamma with integer shape matches the Erlang CDF") {
    RngStream r(13);
    const std::size_t n = 30000;
    const double rate = 2.5;
    std::vector<double> x(n);
    for (auto& v : x) v = r.gamma(3.0, rate);
    auto erlang3 = [rate](double t) {
        const double u = rate * t;
        return 1.0 - std::exp(-u) * (1.0 + u + 0.5 * u * u);
    };
    CHECK(ks_statistic(x, erlang3) < ks_crit(n));
}

TEST_CASE("gamma with shape one half matches the chi-square CDF") {
    RngStream r(14);
    const std::size_t n = 30000;
    std::vector<double> x(n);
    for (auto& v : x) v = r.gamma(0.5, 0.5);  // chi-square with 1 dof
    auto chi1 = [](double t) { return std::erf(std::sqrt(0.5 * t)); };
    CHECK(ks_statistic(x, chi1) < ks_crit(n));
    CHECK_THROWS_AS(r.gamma(0.0, 1.0), std::domain_error);
    CHECK_THROWS_AS(r.gamma(1.0, -1.0), std::domain_error);
}

TEST_CASE("beta(1,b) matches its closed-form CDF") {
    RngStream r(15);
    const std::size_t n = 30000;
    const double b = 4.0;
    std::vector<double> x(n);
    for (auto& v : x) v = r.beta(1.0, b);
    auto cdf = [b](double t) { return 1.0 - std::pow(1.0 - t, b); };
    CHECK(ks_statistic(x, cdf) < ks_crit(n));
    CHECK_THROWS_AS(r.beta(-1.0, 1.0), std::domain_error);
}

TEST_CASE("dirichlet draws live on the simplex with Beta marginals") {
    RngStream r(16);
    const std::vector<double> conc{2.0, 1.0, 3.0};
    std::vector<double> out(3);
    const std::size_t n = 20000;
    std::vector<double> first(n);
    for (std::size_t i = 0; i < n; ++i) {
        r.dirichlet(conc, out);
        double s = 0;
        for (double v : out) {
            REQUIRE(v >= 0.0);
            s += v;
        }
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-12));
        first[i] = out[0];
    }
    // first coordinate ~ Beta(2, 4): mean 1/3, var 2*4/(36*7)
    CHECK(mean_of(first) == doctest::Approx(1.0 / 3.0).epsilon(0.02));
    CHECK(var_of(first) == doctest::Approx(8.0 / 252.0).epsilon(0.05));
}

TEST_CASE("categorical_log respects weights and skips -inf entries") {
    RngStream r(17);
    const double ninf = -std::numeric_limits<double>::infinity();
    std::vector<double> logw{std::log(0.2), ninf, std::log(0.5), std::log(0.3)};
    std::vector<int> freq(4, 0);
    const int n = 60000;
    for (int i = 0; i < n; ++i) ++freq[r.categorical_log(logw)];
    CHECK(freq[1] == 0);
    CHECK(freq[0] / static_cast<double>(n) == doctest::Approx(0.2).epsilon(0.05));
    CHECK(freq[2] / static_cast<double>(n) == doctest::Approx(0.5).epsilon(0.03));
    CHECK(freq[3] / static_cast<double>(n) == doctest::Approx(0.3).epsilon(0.04));
    // shifting all log weights by a constant changes nothing
    RngStream a(5), b(5);
    std::vector<double> shifted(logw);
    for (auto& v : shifted)
        if (std::isfinite(v)) v += 123.0;
    for (int i = 0; i < 200; ++i) CHECK(a.categorical_log(logw) == b.categorical_log(shifted));
    std::vector<double> allinf{ninf, ninf};
    CHECK_THROWS_AS(r.categorical_log(allinf), std::domain_error);
}
