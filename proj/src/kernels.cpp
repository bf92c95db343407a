#include "nestmix/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <vector>

#include "nestmix/gauss.hpp"
#include "nestmix/rng.hpp"

#ifdef _OPENMP
#include <omp.h>
#endif

namespace nestmix::kernels {

int resolve_threads(int requested) {
    if (requested > 0) return requested;
    if (const char* env = std::getenv("NESTMIX_THREADS")) {
        const int t = std::atoi(env);
        if (t > 0) return t;
    }
#ifdef _OPENMP
    return omp_get_max_threads();
#else
    return 1;
#endif
}

namespace {

// One group's worth of allocation draws; shared by both variants.
void obs_alloc_group(const ObsAllocArgs& a, int j, const RngStream& base,
                     const double* lognorm, const double* halfprec,
                     double* logw, int* group_counts) {
    const int L = a.L;
    const double* lomega = a.log_omega + static_cast<std::size_t>(a.S[j]) * L;
    std::fill(group_counts, group_counts + L, 0);
    for (int i = a.offsets[j]; i < a.offsets[j + 1]; ++i) {
        int nact = L;
        if (a.u) {
            nact = 0;
            while (nact < L && a.xi[nact] > a.u[i]) ++nact;
            if (nact == 0) nact = L;  // saturation fallback: full set
        }
        const double yi = a.y[i];
        double mx = -1e300;
        for (int l = 0; l < nact; ++l) {
            const double d = yi - a.mu[l];
            double w = lomega[l] + lognorm[l] - halfprec[l] * d * d;
            if (a.log_xi) w -= a.log_xi[l];
            logw[l] = w;
            if (w > mx) mx = w;
        }
        double z = 0.0;
        for (int l = 0; l < nact; ++l) {
            logw[l] = std::exp(logw[l] - mx);
            z += logw[l];
        }
        RngStream s = base.substream(static_cast<std::uint64_t>(i));
        const double target = s.uniform() * z;
        double acc = 0.0;
        int pick = nact - 1;
        for (int l = 0; l < nact; ++l) {
            acc += logw[l];
            if (acc >= target) { pick = l; break; }
        }
        a.M[i] = pick;
        ++group_counts[pick];
    }
}

struct ObsAllocScratch {
    std::vector<double> lognorm, halfprec, logw;
};

void obs_alloc_prepare(const ObsAllocArgs& a, ObsAllocScratch& sc) {
    sc.lognorm.resize(a.L);
    sc.halfprec.resize(a.L);
    sc.logw.resize(a.L);
    for (int l = 0; l < a.L; ++l) {
        sc.lognorm[l] = -0.5 * (kLog2Pi + std::log(a.sigma2[l]));
        sc.halfprec[l] = 0.5 / a.sigma2[l];
    }
}

}  // namespace

void obs_alloc_serial(const ObsAllocArgs& a) {
    ObsAllocScratch sc;
    obs_alloc_prepare(a, sc);
    RngStream base(a.sweep_key);
    for (int j = 0; j < a.J; ++j)
        obs_alloc_group(a, j, base, sc.lognorm.data(), sc.halfprec.data(), sc.logw.data(),
                        a.counts + static_cast<std::size_t>(j) * a.L);
}

void obs_alloc_parallel(const ObsAllocArgs& a, int threads) {
    threads = resolve_threads(threads);
#ifdef _OPENMP
    ObsAllocScratch shared;
    obs_alloc_prepare(a, shared);
    RngStream base(a.sweep_key);
#pragma omp parallel num_threads(threads)
    {
        std::vector<double> logw(a.L);
#pragma omp for schedule(dynamic)
        for (int j = 0; j < a.J; ++j)
            obs_alloc_group(a, j, base, shared.lognorm.data(), shared.halfprec.data(),
                            logw.data(), a.counts + static_cast<std::size_t>(j) * a.L);
    }
#else
    (void)threads;
    obs_alloc_serial(a);
#endif
}

namespace {

void resp_group(const RespArgs& a, int j) {
    const int L = a.L;
    const double* wl = a.wlog + static_cast<std::size_t>(j) * L;
    double* nb = a.nbar + static_cast<std::size_t>(j) * L;
    std::fill(nb, nb + L, 0.0);
    for (int i = a.offsets[j]; i < a.offsets[j + 1]; ++i) {
        double* x = a.X + static_cast<std::size_t>(i) * L;
        const double yi = a.y[i];
        double mx = -1e300;
        for (int l = 0; l < L; ++l) {
            const double d = yi - a.m[l];
            x[l] = wl[l] + a.c[l] - a.q[l] * d * d;
            if (x[l] > mx) mx = x[l];
        }
        double z = 0.0;
        for (int l = 0; l < L; ++l) {
            x[l] = std::exp(x[l] - mx);
            z += x[l];
        }
        const double inv = 1.0 / z;
        for (int l = 0; l < L; ++l) {
            x[l] *= inv;
            nb[l] += x[l];
        }
    }
}

}  // namespace

void responsibilities_serial(const RespArgs& a) {
    for (int j = 0; j < a.J; ++j) resp_group(a, j);
}

void responsibilities_parallel(const RespArgs& a, int threads) {
    threads = resolve_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (int j = 0; j < a.J; ++j) resp_group(a, j);
#else
    (void)threads;
    responsibilities_serial(a);
#endif
}

namespace {

// One row of the PSM; draws transposed to n x T for contiguous access.
void psm_row(const std::uint16_t* drawsT, int T, int n, int i, double* out) {
    const std::uint16_t* di = drawsT + static_cast<std::size_t>(i) * T;
    const double invT = 1.0 / T;
    out[static_cast<std::size_t>(i) * n + i] = 1.0;
    for (int j = i + 1; j < n; ++j) {
        const std::uint16_t* dj = drawsT + static_cast<std::size_t>(j) * T;
        int eq = 0;
        for (int t = 0; t < T; ++t) eq += (di[t] == dj[t]);
        const double v = eq * invT;
        out[static_cast<std::size_t>(i) * n + j] = v;
        out[static_cast<std::size_t>(j) * n + i] = v;
    }
}

std::vector<std::uint16_t> transpose_draws(const std::uint16_t* draws, int T, int n) {
    std::vector<std::uint16_t> dt(static_cast<std::size_t>(n) * T);
    for (int t = 0; t < T; ++t)
        for (int i = 0; i < n; ++i) dt[static_cast<std::size_t>(i) * T + t] = draws[static_cast<std::size_t>(t) * n + i];
    return dt;
}

}  // namespace

void psm_serial(const std::uint16_t* draws, int T, int n, double* out) {
    const auto dt = transpose_draws(draws, T, n);
    for (int i = 0; i < n; ++i) psm_row(dt.data(), T, n, i, out);
}

void psm_parallel(const std::uint16_t* draws, int T, int n, double* out, int threads) {
    threads = resolve_threads(threads);
#ifdef _OPENMP
    const auto dt = transpose_draws(draws, T, n);
#pragma omp parallel for num_threads(threads) schedule(dynamic)
    for (int i = 0; i < n; ++i) psm_row(dt.data(), T, n, i, out);
#else
    (void)threads;
    psm_serial(draws, T, n, out);
#endif
}

}  // namespace nestmix::kernels
