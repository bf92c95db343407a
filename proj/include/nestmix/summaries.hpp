#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "nestmix/data.hpp"
#include "nestmix/mcmc.hpp"
#include "nestmix/vi.hpp"

namespace nestmix {

struct Psm {
    int n = 0;
    std::vector<double> m;  // n x n

    double at(int i, int j) const { return m[static_cast<std::size_t>(i) * n + j]; }
};

// Pairwise co-clustering frequencies over T label draws (row-major T x n).
Psm compute_psm(const std::uint16_t* draws, int T, int n, int threads = 0);
Psm compute_psm(const std::vector<std::vector<int>>& draws, int threads = 0);

struct BinderResult {
    std::vector<int> labels;  // contiguous from 1
    double loss = 0.0;        // expected Binder loss (unit costs)
    int n_clusters = 0;
};

// Greedy minimization of the expected Binder loss: sequential allocation in
// random order (16 restarts, fixed internal seed 0) plus sweep refinement
// until no move improves.
BinderResult binder_search_psm(const Psm& psm, int restarts = 16, std::uint64_t seed = 0);
BinderResult binder_search_draws(const std::uint16_t* draws, int T, int n, int n_labels,
                                 int restarts = 16, std::uint64_t seed = 0);
double binder_loss(const Psm& psm, const std::vector<int>& labels);

enum class FitMethod { MCMC, VI };

struct PartitionEstimate {
    std::vector<int> dis_level;  // per group, labels contiguous from 1
    std::vector<int> obs_oc;     // per observation
    std::vector<int> obs_dc;     // per observation (its group's DC)
    FitMethod method = FitMethod::MCMC;
    double obs_loss = 0.0, dis_loss = 0.0;  // MCMC only
    int n_oc = 0, n_dc = 0;
};

PartitionEstimate estimate_partition(const McmcChains& chains, const GroupedData& data,
                                     int add_burnin = 0);
BinderResult estimate_partition_level(const McmcChains& chains, bool obs_level, int add_burnin = 0);
PartitionEstimate estimate_partition(const ViFit& fit, const GroupedData& data);

struct RandomMeasureEstimate {
    struct Row {
        int dc = 0;          // contiguous DC label (1-based)
        int oc = 0;          // atom index (1-based component slot)
        double post_mean = 0.0;
        double post_var = 0.0;
        double post_weight = 0.0;
        bool var_defined = true;
    };
    std::vector<Row> rows;  // all components kept; display filters on thr
    double thr = 0.01;
};

RandomMeasureEstimate estimate_G(const ViFit& fit, double thr = 0.01);

struct ClusterCountSummary {
    std::vector<int> oc, dc;  // per retained iteration
    double oc_mean = 0, oc_median = 0, oc_var = 0;
    double dc_mean = 0, dc_median = 0, dc_var = 0;
};

ClusterCountSummary number_clusters(const McmcChains& chains);

struct AllocationTable {
    int J = 0, maxK = 0, N = 0, maxL = 0;
    std::vector<double> group_probs;  // J x maxK
    std::vector<double> obs_probs;    // N x maxL
};

AllocationTable allocation_probabilities(const ViFit& fit, const GroupedData& data);

std::string summarize_fit(const McmcChains& chains, const ModelConfig& cfg, const McmcParams& params);
std::string summarize_fit(const ViFit& fit, const ModelConfig& cfg, const ViParams& params,
                          const GroupedData& data);
std::string summarize_partition(const PartitionEstimate& part);

}  // namespace nestmix
