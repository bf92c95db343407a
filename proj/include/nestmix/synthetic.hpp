#pragma once

#include <cstdint>
#include <vector>

#include "nestmix/data.hpp"

namespace nestmix {

struct Archetype {
    std::vector<double> means;
    std::vector<double> variances;
    std::vector<double> weights;  // simplex over atoms
};

struct ScenarioSpec {
    int J = 0;
    std::vector<int> n_per_group;
    std::vector<double> dc_probs;  // simplex over archetypes
    std::vector<Archetype> archetypes;
    std::uint64_t seed = 0;
};

struct SyntheticTruth {
    std::vector<int> dis_level;  // J, archetype index from 1
    std::vector<int> obs_level;  // N, shared-atom label from 1
    int n_dc = 0, n_oc = 0;
};

struct SyntheticDataset {
    GroupedData data;
    SyntheticTruth truth;
};

// Per group: draw an archetype from dc_probs, then per observation an atom
// from the archetype weights and a Gaussian value. Atoms sharing the exact
// (mean, variance) pair across archetypes share one truth label.
SyntheticDataset generate(const ScenarioSpec& spec);

// Three bimodal archetypes built from atoms N(-5,1), N(0,1), N(5,1) with
// equal weights, 15 groups of 1000 observations, uniform archetype draw.
ScenarioSpec demo_scenario(std::uint64_t seed);

}  // namespace nestmix
