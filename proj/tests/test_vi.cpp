#include <cmath>
#include <vector>

#include "doctest.h"
#include "nestmix/gauss.hpp"
#include "nestmix/vi.hpp"

using namespace nestmix;

namespace {

GroupedData two_mode_data(std::uint64_t seed, int J = 4, int nj = 30) {
    RngStream rng(seed);
    std::vector<double> y;
    std::vector<int> g;
    for (int j = 0; j < J; ++j) {
        for (int i = 0; i < nj; ++i) {
            const double c = rng.uniform() < 0.5 ? -3.0 : 3.0;
            y.push_back(c + rng.normal(0.0, 0.8));
            g.push_back(j + 1);
        }
    }
    return validate_dataset(y, g);
}

}  // namespace

TEST_CASE("run_cavi is deterministic for a fixed seed") {
    GroupedData d = two_mode_data(1);
    ModelConfig cfg = default_config(Family::FISAN, 5, 6);
    ViParams p;
    p.maxK = 5;
    p.maxL = 6;
    p.n_runs = 3;
    p.maxSIM = 60;
    p.seed = 9;
    ViFit a = run_cavi(d, cfg, p);
    ViFit b = run_cavi(d, cfg, p);
    REQUIRE(!a.best.elbo_trace.empty());
    CHECK(a.best.elbo_trace.back() == b.best.elbo_trace.back());
    CHECK(a.best.X == b.best.X);
    CHECK(a.best.R == b.best.R);
    CHECK(a.best_run_index == b.best_run_index);
}

TEST_CASE("ELBO trace is nondecreasing within a run") {
    for (Family fam : {Family::CAM, Family::FISAN, Family::FSAN}) {
        CAPTURE(family_name(fam));
        GroupedData d = two_mode_data(7);
        ModelConfig cfg = default_config(fam, 4, 6);
        ViParams p;
        p.maxK = 4;
        p.maxL = 6;
        p.n_runs = 2;
        p.maxSIM = 80;
        p.epsilon = 1e-7;
        p.seed = 3;
        ViFit f = run_cavi(d, cfg, p);
        for (const auto& trace : f.all_traces) {
            for (std::size_t h = 1; h < trace.size(); ++h) {
                REQUIRE(trace[h] >= trace[h - 1] - 1e-8 * std::abs(trace[h - 1]));
            }
        }
        // best run actually has the highest final ELBO
        double mx = -1e300;
        for (const auto& t : f.all_traces) mx = std::max(mx, t.back());
        CHECK(f.best.elbo_trace.back() == doctest::Approx(mx));
    }
}

TEST_CASE("single-component CAVI equals the exact NIG posterior") {
    GroupedData d = two_mode_data(11, 3, 25);
    ModelConfig cfg = default_config(Family::FISAN, 1, 1);
    ViParams p;
    p.maxK = 1;
    p.maxL = 1;
    p.n_runs = 1;
    p.maxSIM = 50;
    p.epsilon = 1e-10;
    ViFit f = run_cavi(d, cfg, p);
    std::vector<double> ones(d.values.size(), 1.0);
    NigParams post = nig_posterior(cfg.nig, ones, d.values);
    REQUIRE(f.best.nig.size() == 1);
    CHECK(f.best.nig[0].m0 == doctest::Approx(post.m0).epsilon(1e-10));
    CHECK(f.best.nig[0].tau0 == doctest::Approx(post.tau0).epsilon(1e-10));
    CHECK(f.best.nig[0].lambda0 == doctest::Approx(post.lambda0).epsilon(1e-10));
    CHECK(f.best.nig[0].gamma0 == doctest::Approx(post.gamma0).epsilon(1e-10));
    for (double x : f.best.X) REQUIRE(x == 1.0);
    for (double r : f.best.R) REQUIRE(r == 1.0);
}

TEST_CASE("maxSIM of one returns a single-entry trace regardless of epsilon") {
    GroupedData d = two_mode_data(13, 2, 10);
    ModelConfig cfg = default_config(Family::FSAN, 3, 4);
    ViParams p;
    p.maxK = 3;
    p.maxL = 4;
    p.n_runs = 1;
    p.maxSIM = 1;
    p.epsilon = 1e6;
    ViFit f = run_cavi(d, cfg, p);
    CHECK(f.best.elbo_trace.size() == 1);
}

TEST_CASE("responsibilities stay normalized and soft counts consistent") {
    GroupedData d = two_mode_data(17);
    ModelConfig cfg = default_config(Family::FSAN, 4, 5);
    ViParams p;
    p.maxK = 4;
    p.maxL = 5;
    p.n_runs = 1;
    p.maxSIM = 30;
    ViFit f = run_cavi(d, cfg, p);
    const int L = p.maxL, K = p.maxK;
    for (int i = 0; i < d.N; ++i) {
        double s = 0;
        for (int l = 0; l < L; ++l) s += f.best.X[static_cast<std::size_t>(i) * L + l];
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-10));
    }
    for (int j = 0; j < d.J; ++j) {
        double s = 0;
        for (int k = 0; k < K; ++k) s += f.best.R[static_cast<std::size_t>(j) * K + k];
        REQUIRE(s == doctest::Approx(1.0).epsilon(1e-10));
        for (int l = 0; l < L; ++l) {
            double nb = 0;
            for (int i = d.offsets[j]; i < d.offsets[j + 1]; ++i)
                nb += f.best.X[static_cast<std::size_t>(i) * L + l];
            REQUIRE(f.best.nbar[static_cast<std::size_t>(j) * L + l] ==
                    doctest::Approx(nb).epsilon(1e-9));
        }
    }
}

TEST_CASE("parameter validation rejects bad settings") {
    ViParams p;
    p.epsilon = 0.0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.epsilon = 0.01;
    p.maxSIM = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
    p.maxSIM = 10;
    p.n_runs = 0;
    CHECK_THROWS_AS(p.validate(), std::invalid_argument);
}
