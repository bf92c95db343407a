#pragma once

#include <cstdint>

namespace nestmix::kernels {

// Hot data-parallel loops shared by the two engines. Each kernel has a
// plain serial reference implementation and an OpenMP variant; both use the
// same per-observation RNG substreams and per-group accumulation order, so
// their outputs are bit-identical for any thread count.

// MCMC observational-allocation sweep. For each observation i in group j
// with DC k = S[j], draws M[i] proportionally to
//   omega[k][l] * phi(y_i; mu_l, sigma2_l)           (Dirichlet weights)
//   (omega[k][l]/xi_l) * phi(y_i; ...), xi_l > u_i   (slice-restricted GEM)
// Fills per-group component counts (J x L, zeroed first). Observation i uses
// substream i of sweep_key, so the draw sequence is layout-independent.
struct ObsAllocArgs {
    const double* y = nullptr;
    int N = 0, J = 0, L = 0;
    const int* offsets = nullptr;    // J+1
    const int* S = nullptr;          // per group
    const double* log_omega = nullptr;  // K x L, row-major
    const double* mu = nullptr;
    const double* sigma2 = nullptr;
    const double* log_xi = nullptr;  // L slice levels (descending), or null
    const double* xi = nullptr;      // L, or null
    const double* u = nullptr;       // N slice variables, or null
    std::uint64_t sweep_key = 0;
    int* M = nullptr;                // out
    int* counts = nullptr;           // out, J x L
};

void obs_alloc_serial(const ObsAllocArgs& a);
void obs_alloc_parallel(const ObsAllocArgs& a, int threads);

// CAVI responsibility update (observational level). For each observation i
// in group j sets X[i][l] = softmax_l( wlog[j][l] + c[l] - q[l]*(y_i-m[l])^2 )
// and accumulates soft counts nbar[j][l] = sum_{i in j} X[i][l] (zeroed first).
struct RespArgs {
    const double* y = nullptr;
    int N = 0, J = 0, L = 0;
    const int* offsets = nullptr;  // J+1
    const double* wlog = nullptr;  // J x L
    const double* c = nullptr;     // per component constant
    const double* q = nullptr;     // per component quadratic coefficient
    const double* m = nullptr;     // per component location
    double* X = nullptr;           // out, N x L
    double* nbar = nullptr;        // out, J x L
};

void responsibilities_serial(const RespArgs& a);
void responsibilities_parallel(const RespArgs& a, int threads);

// Posterior similarity matrix from T label draws over n items
// (draws row-major T x n). out is n x n.
void psm_serial(const std::uint16_t* draws, int T, int n, double* out);
void psm_parallel(const std::uint16_t* draws, int T, int n, double* out, int threads);

int resolve_threads(int requested);

}  // namespace nestmix::kernels
