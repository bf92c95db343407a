#include "nestmix/synthetic.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

#include "nestmix/rng.hpp"

namespace nestmix {

namespace {

void check_simplex(const std::vector<double>& w, const char* what) {
    if (w.empty()) throw std::invalid_argument(std::string(what) + ": empty weight vector");
    double sum = 0.0;
    for (double x : w) {
        if (!(x >= 0.0)) throw std::invalid_argument(std::string(what) + ": negative weight");
        sum += x;
    }
    if (std::abs(sum - 1.0) > 1e-9)
        throw std::invalid_argument(std::string(what) + ": weights must sum to 1");
}

int draw_categorical(RngStream& rng, const std::vector<double>& w) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t k = 0; k < w.size(); ++k) {
        acc += w[k];
        if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(w.size()) - 1;
}

}  // namespace

SyntheticDataset generate(const ScenarioSpec& spec) {
    if (spec.J < 1) throw std::invalid_argument("generate: J must be >= 1");
    if (static_cast<int>(spec.n_per_group.size()) != spec.J)
        throw std::invalid_argument("generate: n_per_group size must equal J");
    for (int n : spec.n_per_group)
        if (n < 1) throw std::invalid_argument("generate: group sizes must be >= 1");
    if (spec.dc_probs.size() != spec.archetypes.size())
        throw std::invalid_argument("generate: dc_probs size must match archetype count");
    check_simplex(spec.dc_probs, "dc_probs");
    for (const auto& a : spec.archetypes) {
        if (a.means.size() != a.variances.size() || a.means.size() != a.weights.size())
            throw std::invalid_argument("generate: archetype field lengths differ");
        check_simplex(a.weights, "archetype weights");
        for (double v : a.variances)
            if (!(v > 0.0)) throw std::invalid_argument("generate: variances must be positive");
    }

    // shared-atom labels by exact (mean, variance) identity, in first-seen order
    std::vector<std::pair<double, double>> atoms;
    std::vector<std::vector<int>> atom_label(spec.archetypes.size());
    for (std::size_t a = 0; a < spec.archetypes.size(); ++a) {
        const auto& arch = spec.archetypes[a];
        for (std::size_t l = 0; l < arch.means.size(); ++l) {
            const std::pair<double, double> key{arch.means[l], arch.variances[l]};
            int lab = -1;
            for (std::size_t q = 0; q < atoms.size(); ++q)
                if (atoms[q] == key) { lab = static_cast<int>(q); break; }
            if (lab < 0) {
                lab = static_cast<int>(atoms.size());
                atoms.push_back(key);
            }
            atom_label[a].push_back(lab + 1);
        }
    }

    SyntheticDataset out;
    RngStream rng(spec.seed);
    std::vector<double> values;
    std::vector<int> groups;
    out.truth.dis_level.resize(spec.J);
    std::vector<bool> oc_seen(atoms.size(), false);
    std::vector<bool> dc_seen(spec.archetypes.size(), false);

    for (int j = 0; j < spec.J; ++j) {
        const int a = draw_categorical(rng, spec.dc_probs);
        out.truth.dis_level[j] = a + 1;
        dc_seen[a] = true;
        const auto& arch = spec.archetypes[a];
        for (int i = 0; i < spec.n_per_group[j]; ++i) {
            const int l = draw_categorical(rng, arch.weights);
            values.push_back(rng.normal(arch.means[l], std::sqrt(arch.variances[l])));
            groups.push_back(j + 1);
            out.truth.obs_level.push_back(atom_label[a][l]);
            oc_seen[atom_label[a][l] - 1] = true;
        }
    }

    out.data = validate_dataset(values, groups);
    for (bool b : oc_seen) out.truth.n_oc += b;
    for (bool b : dc_seen) out.truth.n_dc += b;
    return out;
}

ScenarioSpec demo_scenario(std::uint64_t seed) {
    ScenarioSpec spec;
    spec.J = 15;
    spec.n_per_group.assign(15, 1000);
    spec.dc_probs.assign(3, 1.0 / 3.0);
    spec.archetypes = {
        {{-5.0, 0.0}, {1.0, 1.0}, {0.5, 0.5}},
        {{-5.0, 5.0}, {1.0, 1.0}, {0.5, 0.5}},
        {{0.0, 5.0}, {1.0, 1.0}, {0.5, 0.5}},
    };
    spec.seed = seed;
    return spec;
}

}  // namespace nestmix
