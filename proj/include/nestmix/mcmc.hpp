#pragma once

#include <cstdint>
#include <vector>

#include "nestmix/config.hpp"
#include "nestmix/data.hpp"
#include "nestmix/rng.hpp"

namespace nestmix {

struct McmcParams {
    int nrep = 10000;
    int burn = 5000;
    int maxK = 50;
    int maxL = 50;
    std::uint64_t seed = 123;
    bool warmstart = true;
    int nclus_start = 5;
    bool verbose = false;
    bool store_omega = true;
    int threads = 0;  // 0: auto (NESTMIX_THREADS env, then hardware)

    void validate() const {
        if (burn < 0 || burn >= nrep) throw std::invalid_argument("McmcParams: need 0 <= burn < nrep");
        if (maxK < 1 || maxL < 1) throw std::invalid_argument("McmcParams: bounds must be >= 1");
        if (nclus_start < 1 || nclus_start > maxL)
            throw std::invalid_argument("McmcParams: need 1 <= nclus_start <= maxL");
    }
};

struct McmcState {
    int maxK = 0, maxL = 0;
    std::vector<int> S;        // J, distributional allocations
    std::vector<int> M;        // N, observational allocations
    std::vector<int> counts;   // J x maxL, n_{j,l}; kept consistent with M
    std::vector<double> pi;       // maxK
    std::vector<double> v_dist;   // maxK-1 sticks (GEM distributional level)
    std::vector<double> omega;    // maxK x maxL
    std::vector<double> v_obs;    // maxK x (maxL-1) sticks (CAM)
    std::vector<double> mu, sigma2;  // maxL
    double alpha = 1.0;
    double beta = 1.0;
    std::vector<double> u_obs;   // N slice variables (CAM)
    std::vector<double> u_dist;  // J slice variables (CAM, FISAN)
};

struct McmcChains {
    Family family = Family::FISAN;
    int J = 0, N = 0, maxK = 0, maxL = 0, nkept = 0;
    bool has_alpha = false, has_beta = false, has_omega = true;
    std::vector<std::uint16_t> S;   // nkept x J
    std::vector<std::uint16_t> M;   // nkept x N
    std::vector<double> pi;         // nkept x maxK
    std::vector<double> omega;      // nkept x maxK x maxL (optional)
    std::vector<double> mu, sigma2; // nkept x maxL
    std::vector<double> alpha, beta;
    std::vector<int> n_oc, n_dc;    // occupied-cluster counts per kept iteration
    bool saturation_warning = false;
    double elapsed_seconds = 0.0;
};

McmcChains run_mcmc(const GroupedData& data, const ModelConfig& cfg, const McmcParams& params);

// Individual Gibbs updates (one sweep = the sequence below, then slice
// resampling). Exposed for unit and stationarity tests.
McmcState mcmc_initialize(const GroupedData& data, const ModelConfig& cfg, const McmcParams& params,
                          RngStream& rng);
void update_obs_alloc(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng,
                      int threads = 1);
void update_dist_alloc(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng);
void update_obs_weights(McmcState& st, const ModelConfig& cfg, RngStream& rng);
void update_dist_weights(McmcState& st, const ModelConfig& cfg, RngStream& rng);
void update_atoms(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng);
void update_concentrations(McmcState& st, const ModelConfig& cfg, RngStream& rng);
void resample_slice(McmcState& st, const ModelConfig& cfg, RngStream& rng);
void mcmc_sweep(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng,
                int threads = 1);

// Deterministic decreasing slice levels xi_l = 0.5^(l+1), l = 0..L-1.
std::vector<double> slice_levels(int L);

}  // namespace nestmix
