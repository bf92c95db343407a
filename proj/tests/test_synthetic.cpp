#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"
#include "nestmix/synthetic.hpp"

using namespace nestmix;

TEST_CASE("demo scenario shape and shared-atom truth labels") {
    ScenarioSpec spec = demo_scenario(42);
    CHECK(spec.J == 15);
    REQUIRE(spec.archetypes.size() == 3);
    SyntheticDataset ds = generate(spec);
    CHECK(ds.data.N == 15000);
    CHECK(ds.data.J == 15);
    for (int nj : ds.data.group_sizes) CHECK(nj == 1000);
    CHECK(ds.truth.n_dc == 3);
    CHECK(ds.truth.n_oc == 3);  // three shared atoms across archetypes
    std::set<int> dis(ds.truth.dis_level.begin(), ds.truth.dis_level.end());
    for (int v : dis) {
        CHECK(v >= 1);
        CHECK(v <= 3);
    }
    std::set<int> obs(ds.truth.obs_level.begin(), ds.truth.obs_level.end());
    CHECK(static_cast<int>(obs.size()) == ds.truth.n_oc);
    CHECK(*obs.begin() == 1);
}

TEST_CASE("generation is deterministic in the seed") {
    SyntheticDataset a = generate(demo_scenario(7));
    SyntheticDataset b = generate(demo_scenario(7));
    CHECK(a.data.values == b.data.values);
    CHECK(a.truth.dis_level == b.truth.dis_level);
    SyntheticDataset c = generate(demo_scenario(8));
    CHECK(a.data.values != c.data.values);
}

TEST_CASE("group moments follow the assigned archetype") {
    SyntheticDataset ds = generate(demo_scenario(3));
    ScenarioSpec spec = demo_scenario(3);
    for (int j = 0; j < ds.data.J; ++j) {
        const Archetype& arch = spec.archetypes[ds.truth.dis_level[j] - 1];
        double want = 0;
        for (std::size_t l = 0; l < arch.means.size(); ++l) want += arch.weights[l] * arch.means[l];
        double got = 0;
        for (int i = ds.data.offsets[j]; i < ds.data.offsets[j + 1]; ++i) got += ds.data.values[i];
        got /= ds.data.group_sizes[j];
        // sd of the group mean is about sqrt((1 + spread)/1000) < 0.12
        CHECK(std::abs(got - want) < 0.5);
    }
}

TEST_CASE("custom scenarios validate their inputs") {
    ScenarioSpec s;
    s.J = 2;
    s.n_per_group = {5, 5};
    s.dc_probs = {0.6, 0.4};
    s.archetypes = {Archetype{{0.0}, {1.0}, {1.0}}, Archetype{{3.0}, {1.0}, {1.0}}};
    s.seed = 1;
    SyntheticDataset ok = generate(s);
    CHECK(ok.data.N == 10);
    // truth counts realized atoms
    std::set<int> lab(ok.truth.obs_level.begin(), ok.truth.obs_level.end());
    CHECK(ok.truth.n_oc == static_cast<int>(lab.size()));
    std::set<int> dcs(ok.truth.dis_level.begin(), ok.truth.dis_level.end());
    CHECK(ok.truth.n_dc == static_cast<int>(dcs.size()));

    ScenarioSpec bad = s;
    bad.dc_probs = {0.6, 0.6};
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = s;
    bad.archetypes[0].variances = {-1.0};
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = s;
    bad.archetypes[0].weights = {0.5};
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
    bad = s;
    bad.n_per_group = {5};
    CHECK_THROWS_AS(generate(bad), std::invalid_argument);
}

TEST_CASE("atoms with identical parameters share one truth label") {
    ScenarioSpec s;
    s.J = 4;
    s.n_per_group = {50, 50, 50, 50};
    s.dc_probs = {0.5, 0.5};
    // both archetypes contain the (0,1) atom; distinct atoms are (-4,1), (4,1)
    s.archetypes = {Archetype{{-4.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}},
                    Archetype{{0.0, 4.0}, {1.0, 1.0}, {0.5, 0.5}}};
    s.seed = 5;
    SyntheticDataset ds = generate(s);
    CHECK(ds.truth.n_oc == 3);
}
