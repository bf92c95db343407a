#include <cmath>
#include <vector>

#include "doctest.h"
#include "nestmix/gauss.hpp"
#include "nestmix/rng.hpp"

using namespace nestmix;

TEST_CASE("log_gauss equals the explicit density formula") {
    CHECK(log_gauss(0.0, 0.0, 1.0) == doctest::Approx(-0.5 * std::log(2.0 * M_PI)).epsilon(1e-14));
    CHECK(std::exp(log_gauss(1.3, 0.7, 2.0)) ==
          doctest::Approx(std::exp(-0.36 / 4.0) / std::sqrt(4.0 * M_PI)).epsilon(1e-13));
    CHECK_THROWS_AS(log_gauss(0.0, 0.0, 0.0), std::domain_error);
    CHECK_THROWS_AS(log_gauss(0.0, 0.0, -1.0), std::domain_error);
}

TEST_CASE("nig_posterior frozen two-point example") {
    NigParams prior{0.0, 0.01, 3.0, 2.0};
    std::vector<double> w{1.0, 1.0};
    std::vector<double> y{1.0, 2.0};
    NigParams post = nig_posterior(prior, w, y);
    CHECK(post.m0 == doctest::Approx(1.492537313432836).epsilon(1e-15));
    CHECK(post.tau0 == doctest::Approx(2.01).epsilon(1e-15));
    CHECK(post.lambda0 == doctest::Approx(4.0).epsilon(1e-15));
    CHECK(post.gamma0 == doctest::Approx(2.261194029850746).epsilon(1e-14));
}

TEST_CASE("nig_posterior composes sequentially and handles edge weights") {
    NigParams prior{0.3, 0.5, 2.0, 1.5};
    std::vector<double> y{-1.0, 0.4, 2.2};
    std::vector<double> ones{1.0, 1.0, 1.0};
    NigParams all = nig_posterior(prior, ones, y);

    std::vector<double> w1{1.0}, y1{y[0]};
    NigParams step = nig_posterior(prior, w1, y1);
    std::vector<double> w2{1.0, 1.0}, y2{y[1], y[2]};
    step = nig_posterior(step, w2, y2);
    CHECK(step.m0 == doctest::Approx(all.m0).epsilon(1e-12));
    CHECK(step.tau0 == doctest::Approx(all.tau0).epsilon(1e-12));
    CHECK(step.lambda0 == doctest::Approx(all.lambda0).epsilon(1e-12));
    CHECK(step.gamma0 == doctest::Approx(all.gamma0).epsilon(1e-12));

    // zero weights are a no-op
    std::vector<double> wz{0.0, 0.0, 0.0};
    NigParams nop = nig_posterior(prior, wz, y);
    CHECK(nop.m0 == prior.m0);
    CHECK(nop.tau0 == prior.tau0);
    CHECK(nop.lambda0 == prior.lambda0);
    CHECK(nop.gamma0 == prior.gamma0);

    // weight 2 equals the duplicated observation
    std::vector<double> wd{2.0}, yd{0.4};
    std::vector<double> wr{1.0, 1.0}, yr{0.4, 0.4};
    NigParams a = nig_posterior(prior, wd, yd);
    NigParams b = nig_posterior(prior, wr, yr);
    CHECK(a.m0 == doctest::Approx(b.m0).epsilon(1e-14));
    CHECK(a.gamma0 == doctest::Approx(b.gamma0).epsilon(1e-14));

    std::vector<double> wneg{-0.1, 1.0, 1.0};
    CHECK_THROWS_AS(nig_posterior(prior, wneg, y), std::domain_error);
}

TEST_CASE("nig_posterior matches grid-integrated posterior moments") {
    // Integrates prior x likelihood over (mu, sigma2) numerically and
    // compares E[mu], E[sigma2], E[1/sigma2] against the conjugate answer.
    RngStream rng(99);
    for (int rep = 0; rep < 3; ++rep) {
        NigParams prior{rng.normal(0.0, 1.0), 0.2 + rng.uniform(), 2.5 + rng.uniform(),
                        1.0 + rng.uniform()};
        const int n = 4 + rep;
        std::vector<double> y(n), w(n, 1.0);
        for (auto& v : y) v = rng.normal(0.5, 1.3);
        NigParams post = nig_posterior(prior, w, y);

        const int gm = 301, gs = 301;
        const double msd = std::sqrt(post.gamma0 / (post.lambda0 * post.tau0)) * 12.0;
        double z = 0, emu = 0, es2 = 0, eprec = 0;
        for (int is = 0; is < gs; ++is) {
            // log-uniform grid in sigma2 around the posterior scale
            const double ls = std::log(post.gamma0 / post.lambda0) - 6.0 + 12.0 * is / (gs - 1.0);
            const double s2 = std::exp(ls);
            for (int im = 0; im < gm; ++im) {
                const double mu = post.m0 - msd + 2.0 * msd * im / (gm - 1.0);
                double lp = -(prior.lambda0 + 1.0) * std::log(s2) - prior.gamma0 / s2 -
                            0.5 * prior.tau0 * (mu - prior.m0) * (mu - prior.m0) / s2 -
                            0.5 * std::log(s2);
                for (double v : y) lp += log_gauss(v, mu, s2);
                const double dens = std::exp(lp) * s2;  // jacobian of the log grid
                z += dens;
                emu += dens * mu;
                es2 += dens * s2;
                eprec += dens / s2;
            }
        }
        emu /= z;
        es2 /= z;
        eprec /= z;
        CHECK(emu == doctest::Approx(post.m0).epsilon(1e-5));
        CHECK(es2 == doctest::Approx(post.gamma0 / (post.lambda0 - 1.0)).epsilon(1e-4));
        CHECK(eprec == doctest::Approx(post.lambda0 / post.gamma0).epsilon(1e-4));
    }
}
