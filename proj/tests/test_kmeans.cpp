#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "nestmix/kmeans.hpp"
#include "nestmix/rng.hpp"

using namespace nestmix;

TEST_CASE("kmeans recovers well-separated 1d clusters") {
    RngStream rng(3);
    std::vector<double> x;
    std::vector<int> truth;
    for (int c = 0; c < 3; ++c) {
        for (int i = 0; i < 50; ++i) {
            x.push_back(10.0 * c + rng.normal(0.0, 0.3));
            truth.push_back(c);
        }
    }
    KmeansResult r = kmeans(x, 1, 3, 5, 50, RngStream(1));
    CHECK(testutil::adjusted_rand_index(r.assign, truth) == doctest::Approx(1.0));
    CHECK(r.inertia < 150 * 0.3 * 0.3 * 4.0);
}

TEST_CASE("kmeans with one center returns the mean") {
    std::vector<double> x{1.0, 2.0, 3.0, 10.0};
    KmeansResult r = kmeans(x, 1, 1, 1, 20, RngStream(0));
    CHECK(r.centers.size() == 1);
    CHECK(r.centers[0] == doctest::Approx(4.0));
    for (int a : r.assign) CHECK(a == 0);
}

TEST_CASE("kmeans clamps k to the number of rows") {
    std::vector<double> x{1.0, 5.0};
    KmeansResult r = kmeans(x, 1, 6, 2, 10, RngStream(2));
    CHECK(r.centers.size() == 2);
    CHECK(r.inertia == doctest::Approx(0.0));
    CHECK_THROWS_AS(kmeans(x, 0, 2, 1, 1, RngStream(0)), std::invalid_argument);
    std::vector<double> empty;
    CHECK_THROWS_AS(kmeans(empty, 1, 2, 1, 1, RngStream(0)), std::invalid_argument);
}

TEST_CASE("kmeans works on multivariate rows") {
    RngStream rng(4);
    std::vector<double> x;
    std::vector<int> truth;
    for (int c = 0; c < 2; ++c) {
        for (int i = 0; i < 40; ++i) {
            x.push_back(c * 6.0 + rng.normal(0.0, 0.5));
            x.push_back(-c * 6.0 + rng.normal(0.0, 0.5));
            truth.push_back(c);
        }
    }
    KmeansResult r = kmeans(x, 2, 2, 4, 30, RngStream(9));
    CHECK(testutil::adjusted_rand_index(r.assign, truth) == doctest::Approx(1.0));
}
