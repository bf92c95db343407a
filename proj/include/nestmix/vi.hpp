#pragma once

#include <cstdint>
#include <vector>

#include "nestmix/config.hpp"
#include "nestmix/data.hpp"
#include "nestmix/gauss.hpp"
#include "nestmix/rng.hpp"

namespace nestmix {

struct ViParams {
    int maxK = 20;
    int maxL = 25;
    double epsilon = 0.01;  // absolute ELBO-increment stopping rule
    int maxSIM = 5000;
    std::uint64_t seed = 1;
    int n_runs = 10;
    bool warmstart = true;
    bool verbose = false;
    int threads = 0;

    void validate() const {
        if (!(epsilon > 0)) throw std::invalid_argument("ViParams: epsilon must be > 0");
        if (maxSIM < 1) throw std::invalid_argument("ViParams: maxSIM must be >= 1");
        if (n_runs < 1) throw std::invalid_argument("ViParams: n_runs must be >= 1");
        if (maxK < 1 || maxL < 1) throw std::invalid_argument("ViParams: bounds must be >= 1");
    }
};

// Mean-field variational state. nbar caches the per-group soft counts
// sum_{i in j} X[i][l] and is kept consistent with X.
struct ViState {
    int maxK = 0, maxL = 0;
    std::vector<double> R;         // J x K, q(S_j = k)
    std::vector<double> X;         // N x L, q(M_i = l)
    std::vector<double> nbar;      // J x L
    std::vector<double> dir_obs;   // K x L Dirichlet parameters (FISAN, FSAN)
    std::vector<double> sa_obs, sb_obs;    // K x (L-1) stick Betas (CAM)
    std::vector<double> sa_dist, sb_dist;  // K-1 stick Betas (CAM, FISAN)
    std::vector<double> dir_dist;  // K Dirichlet parameters (FSAN)
    std::vector<NigParams> nig;    // L, q(mu_l, sigma2_l)
    double alpha_shape = 1.0, alpha_rate = 1.0;  // q(alpha)
    double beta_shape = 1.0, beta_rate = 1.0;    // q(beta), CAM
    std::vector<double> elbo_trace;
    bool converged = false;
};

struct ViFit {
    ViState best;
    std::vector<std::vector<double>> all_traces;
    int best_run_index = 0;
    std::uint64_t best_seed = 0;   // substream index of the winning run
    double elapsed_seconds = 0.0;
    Family family = Family::FISAN;
};

ViFit run_cavi(const GroupedData& data, const ModelConfig& cfg, const ViParams& params);

ViState vi_initialize(const GroupedData& data, const ModelConfig& cfg, const ViParams& params,
                      RngStream& rng);
// One full coordinate sweep: responsibilities (obs then dist), weights,
// atoms, concentrations.
void cavi_sweep(ViState& st, const GroupedData& data, const ModelConfig& cfg, int threads = 1);
double compute_elbo(const ViState& st, const GroupedData& data, const ModelConfig& cfg);

// Closed-form expected log weights under the current variational factors.
void expected_log_omega(const ViState& st, const ModelConfig& cfg, std::vector<double>& out);  // K x L
void expected_log_pi(const ViState& st, const ModelConfig& cfg, std::vector<double>& out);     // K

}  // namespace nestmix
