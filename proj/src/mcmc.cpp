#include "nestmix/mcmc.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "nestmix/gauss.hpp"
#include "nestmix/kernels.hpp"
#include "nestmix/kmeans.hpp"

namespace nestmix {

std::vector<double> slice_levels(int L) {
    std::vector<double> xi(L);
    double v = 0.5;
    for (int l = 0; l < L; ++l) {
        xi[l] = v;
        v *= 0.5;
    }
    return xi;
}

namespace {

// Compose stick-breaking weights with the remainder mass on the last slot.
void sticks_to_weights(const double* v, int K, double* w) {
    double rem = 1.0;
    for (int k = 0; k < K - 1; ++k) {
        w[k] = v[k] * rem;
        rem *= 1.0 - v[k];
    }
    w[K - 1] = rem;
}

void uniform_sticks(double* v, int K) {
    for (int k = 0; k < K - 1; ++k) v[k] = 1.0 / static_cast<double>(K - k);
}

int uniform_index(RngStream& rng, int n) {
    const int idx = static_cast<int>(rng.uniform() * n);
    return idx < n ? idx : n - 1;
}

void rebuild_counts(McmcState& st, const GroupedData& data) {
    std::fill(st.counts.begin(), st.counts.end(), 0);
    for (int i = 0; i < data.N; ++i)
        ++st.counts[static_cast<std::size_t>(data.group_of[i]) * st.maxL + st.M[i]];
}

void draw_atom_prior(McmcState& st, int l, const NigParams& nig, RngStream& rng) {
    const double invs = rng.gamma(nig.lambda0, nig.gamma0);
    st.sigma2[l] = 1.0 / invs;
    st.mu[l] = rng.normal(nig.m0, std::sqrt(st.sigma2[l] / nig.tau0));
}

}  // namespace

McmcState mcmc_initialize(const GroupedData& data, const ModelConfig& cfg, const McmcParams& params,
                          RngStream& rng) {
    const int K = params.maxK, L = params.maxL;
    McmcState st;
    st.maxK = K;
    st.maxL = L;
    st.S.assign(data.J, 0);
    st.M.assign(data.N, 0);
    st.counts.assign(static_cast<std::size_t>(data.J) * L, 0);
    st.pi.assign(K, 1.0 / K);
    st.v_dist.assign(std::max(K - 1, 0), 0.0);
    uniform_sticks(st.v_dist.data(), K);
    st.omega.assign(static_cast<std::size_t>(K) * L, 1.0 / L);
    st.v_obs.assign(static_cast<std::size_t>(K) * std::max(L - 1, 0), 0.0);
    for (int k = 0; k < K; ++k) uniform_sticks(st.v_obs.data() + static_cast<std::size_t>(k) * (L - 1), L);
    st.mu.assign(L, cfg.nig.m0);
    st.sigma2.assign(L, 1.0);
    st.alpha = cfg.dist_is_gem() ? cfg.alpha.mean() : 0.0;
    st.beta = cfg.obs_is_gem() ? cfg.beta.mean() : 0.0;

    if (params.warmstart) {
        const int C = std::min(params.nclus_start, L);
        auto km = kmeans({data.values.data(), data.values.size()}, 1, C, 10, 50, rng.substream(11));
        st.M = km.assign;
        std::vector<double> ss(C, 0.0);
        std::vector<int> cnt(C, 0);
        for (int i = 0; i < data.N; ++i) {
            const double d = data.values[i] - km.centers[st.M[i]];
            ss[st.M[i]] += d * d;
            ++cnt[st.M[i]];
        }
        for (int c = 0; c < C; ++c) {
            st.mu[c] = km.centers[c];
            st.sigma2[c] = std::max(cnt[c] > 0 ? ss[c] / cnt[c] : 1.0, 1e-4);
        }
        for (int l = C; l < L; ++l) draw_atom_prior(st, l, cfg.nig, rng);

        // distributional warm start: k-means on per-group component frequencies
        std::vector<double> freq(static_cast<std::size_t>(data.J) * C, 0.0);
        for (int i = 0; i < data.N; ++i) freq[static_cast<std::size_t>(data.group_of[i]) * C + st.M[i]] += 1.0;
        for (int j = 0; j < data.J; ++j)
            for (int c = 0; c < C; ++c) freq[static_cast<std::size_t>(j) * C + c] /= data.group_sizes[j];
        // start from a few DCs so the sampler only has to merge or split by
        // small amounts; all of them reference the shared k-means atoms
        const int D = std::min({params.nclus_start, data.J, K});
        auto km2 = kmeans({freq.data(), freq.size()}, C, D, 10, 50, rng.substream(12));
        st.S = km2.assign;
    } else {
        for (int i = 0; i < data.N; ++i) st.M[i] = uniform_index(rng, L);
        for (int j = 0; j < data.J; ++j) st.S[j] = uniform_index(rng, K);
        for (int l = 0; l < L; ++l) draw_atom_prior(st, l, cfg.nig, rng);
    }

    rebuild_counts(st, data);
    // draw the weights from their conditionals given the starting allocations;
    // uniform weights would let the first allocation sweep scatter each data
    // mode across every nearby atom slot
    update_obs_weights(st, cfg, rng);
    update_dist_weights(st, cfg, rng);
    st.u_obs.assign(data.N, 0.0);
    st.u_dist.assign(data.J, 0.0);
    resample_slice(st, cfg, rng);
    return st;
}

void update_obs_alloc(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng,
                      int threads) {
    const int K = st.maxK, L = st.maxL;
    std::vector<double> log_omega(static_cast<std::size_t>(K) * L);
    for (std::size_t i = 0; i < log_omega.size(); ++i)
        log_omega[i] = st.omega[i] > 0.0 ? std::log(st.omega[i]) : -1e300;

    std::vector<double> xi, log_xi;
    kernels::ObsAllocArgs a;
    a.y = data.values.data();
    a.N = data.N;
    a.J = data.J;
    a.L = L;
    a.offsets = data.offsets.data();
    a.S = st.S.data();
    a.log_omega = log_omega.data();
    a.mu = st.mu.data();
    a.sigma2 = st.sigma2.data();
    if (cfg.obs_is_gem()) {
        xi = slice_levels(L);
        log_xi.resize(L);
        for (int l = 0; l < L; ++l) log_xi[l] = std::log(xi[l]);
        a.xi = xi.data();
        a.log_xi = log_xi.data();
        a.u = st.u_obs.data();
    }
    a.sweep_key = rng.next_u64();
    a.M = st.M.data();
    a.counts = st.counts.data();
    kernels::obs_alloc_parallel(a, threads);
}

void update_dist_alloc(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng) {
    const int K = st.maxK, L = st.maxL;
    std::vector<double> log_omega(static_cast<std::size_t>(K) * L);
    for (std::size_t i = 0; i < log_omega.size(); ++i)
        log_omega[i] = st.omega[i] > 0.0 ? std::log(st.omega[i]) : -1e300;
    std::vector<double> log_pi(K);
    for (int k = 0; k < K; ++k) log_pi[k] = st.pi[k] > 0.0 ? std::log(st.pi[k]) : -1e300;

    const bool slice = cfg.dist_is_gem();
    std::vector<double> xi, log_xi;
    if (slice) {
        xi = slice_levels(K);
        log_xi.resize(K);
        for (int k = 0; k < K; ++k) log_xi[k] = std::log(xi[k]);
    }

    std::vector<double> logw(K);
    for (int j = 0; j < data.J; ++j) {
        int nact = K;
        if (slice) {
            nact = 0;
            while (nact < K && xi[nact] > st.u_dist[j]) ++nact;
            if (nact == 0) nact = K;
        }
        const int* nj = st.counts.data() + static_cast<std::size_t>(j) * L;
        for (int k = 0; k < nact; ++k) {
            double w = log_pi[k];
            if (slice) w -= log_xi[k];
            const double* lo = log_omega.data() + static_cast<std::size_t>(k) * L;
            for (int l = 0; l < L; ++l)
                if (nj[l] > 0) w += nj[l] * lo[l];
            logw[k] = w;
        }
        st.S[j] = rng.categorical_log({logw.data(), static_cast<std::size_t>(nact)});
    }
}

void update_obs_weights(McmcState& st, const ModelConfig& cfg, RngStream& rng) {
    const int K = st.maxK, L = st.maxL;
    const int J = static_cast<int>(st.S.size());
    std::vector<double> pooled(static_cast<std::size_t>(K) * L, 0.0);
    for (int j = 0; j < J; ++j) {
        double* row = pooled.data() + static_cast<std::size_t>(st.S[j]) * L;
        const int* nj = st.counts.data() + static_cast<std::size_t>(j) * L;
        for (int l = 0; l < L; ++l) row[l] += nj[l];
    }

    if (cfg.obs_is_gem()) {
        for (int k = 0; k < K; ++k) {
            const double* c = pooled.data() + static_cast<std::size_t>(k) * L;
            double* v = st.v_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            double tail = 0.0;
            for (int l = 0; l < L; ++l) tail += c[l];
            for (int l = 0; l < L - 1; ++l) {
                tail -= c[l];
                v[l] = rng.beta(1.0 + c[l], st.beta + tail);
            }
            sticks_to_weights(v, L, st.omega.data() + static_cast<std::size_t>(k) * L);
        }
    } else {
        std::vector<double> conc(L);
        for (int k = 0; k < K; ++k) {
            const double* c = pooled.data() + static_cast<std::size_t>(k) * L;
            for (int l = 0; l < L; ++l) conc[l] = cfg.b_dirichlet + c[l];
            rng.dirichlet(conc, {st.omega.data() + static_cast<std::size_t>(k) * L, static_cast<std::size_t>(L)});
        }
    }
}

void update_dist_weights(McmcState& st, const ModelConfig& cfg, RngStream& rng) {
    const int K = st.maxK;
    std::vector<double> m(K, 0.0);
    for (int s : st.S) m[s] += 1.0;

    if (cfg.dist_is_gem()) {
        double tail = 0.0;
        for (int k = 0; k < K; ++k) tail += m[k];
        for (int k = 0; k < K - 1; ++k) {
            tail -= m[k];
            st.v_dist[k] = rng.beta(1.0 + m[k], st.alpha + tail);
        }
        sticks_to_weights(st.v_dist.data(), K, st.pi.data());
    } else {
        std::vector<double> conc(K);
        for (int k = 0; k < K; ++k) conc[k] = cfg.a_dirichlet + m[k];
        rng.dirichlet(conc, {st.pi.data(), static_cast<std::size_t>(K)});
    }
}

void update_atoms(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng) {
    const int L = st.maxL;
    std::vector<double> W(L, 0.0), S1(L, 0.0), S2(L, 0.0);
    for (int i = 0; i < data.N; ++i) {
        const int l = st.M[i];
        const double y = data.values[i];
        W[l] += 1.0;
        S1[l] += y;
        S2[l] += y * y;
    }
    for (int l = 0; l < L; ++l) {
        const NigParams post = nig_posterior_suff(cfg.nig, W[l], S1[l], S2[l]);
        const double invs = rng.gamma(post.lambda0, post.gamma0);
        st.sigma2[l] = 1.0 / invs;
        st.mu[l] = rng.normal(post.m0, std::sqrt(st.sigma2[l] / post.tau0));
    }
}

void update_concentrations(McmcState& st, const ModelConfig& cfg, RngStream& rng) {
    if (cfg.has_random_alpha()) {
        const int K = st.maxK;
        double rate = cfg.alpha.h2;
        for (int k = 0; k < K - 1; ++k) rate -= std::log1p(-st.v_dist[k]);
        st.alpha = rng.gamma(cfg.alpha.h1 + (K - 1), rate);
    }
    if (cfg.has_random_beta()) {
        const int K = st.maxK, L = st.maxL;
        double rate = cfg.beta.h2;
        for (std::size_t i = 0; i < st.v_obs.size(); ++i) rate -= std::log1p(-st.v_obs[i]);
        st.beta = rng.gamma(cfg.beta.h1 + static_cast<double>(K) * (L - 1), rate);
    }
}

void resample_slice(McmcState& st, const ModelConfig& cfg, RngStream& rng) {
    if (cfg.obs_is_gem()) {
        const auto xi = slice_levels(st.maxL);
        for (std::size_t i = 0; i < st.M.size(); ++i) st.u_obs[i] = rng.uniform() * xi[st.M[i]];
    }
    if (cfg.dist_is_gem()) {
        const auto xi = slice_levels(st.maxK);
        for (std::size_t j = 0; j < st.S.size(); ++j) st.u_dist[j] = rng.uniform() * xi[st.S[j]];
    }
}

void mcmc_sweep(McmcState& st, const GroupedData& data, const ModelConfig& cfg, RngStream& rng,
                int threads) {
    update_obs_alloc(st, data, cfg, rng, threads);
    update_dist_alloc(st, data, cfg, rng);
    update_obs_weights(st, cfg, rng);
    update_dist_weights(st, cfg, rng);
    update_atoms(st, data, cfg, rng);
    update_concentrations(st, cfg, rng);
    resample_slice(st, cfg, rng);
}

McmcChains run_mcmc(const GroupedData& data, const ModelConfig& cfg_in, const McmcParams& params) {
    params.validate();
    ModelConfig cfg = cfg_in;
    cfg.maxK = params.maxK;
    cfg.maxL = params.maxL;
    cfg.validate();
    if (params.maxL > 65535 || params.maxK > 65535)
        throw std::invalid_argument("run_mcmc: bounds exceed chain storage width");

    const auto t0 = std::chrono::steady_clock::now();
    RngStream rng(params.seed);
    McmcState st = mcmc_initialize(data, cfg, params, rng);

    McmcChains ch;
    ch.family = cfg.family;
    ch.J = data.J;
    ch.N = data.N;
    ch.maxK = params.maxK;
    ch.maxL = params.maxL;
    ch.nkept = params.nrep - params.burn;
    ch.has_alpha = cfg.has_random_alpha();
    ch.has_beta = cfg.has_random_beta();
    ch.has_omega = params.store_omega;
    const std::size_t T = static_cast<std::size_t>(ch.nkept);
    ch.S.resize(T * data.J);
    ch.M.resize(T * data.N);
    ch.pi.resize(T * params.maxK);
    if (params.store_omega) ch.omega.resize(T * params.maxK * params.maxL);
    ch.mu.resize(T * params.maxL);
    ch.sigma2.resize(T * params.maxL);
    if (ch.has_alpha) ch.alpha.resize(T);
    if (ch.has_beta) ch.beta.resize(T);
    ch.n_oc.resize(T);
    ch.n_dc.resize(T);

    std::vector<char> occ(params.maxL);
    for (int it = 0; it < params.nrep; ++it) {
        mcmc_sweep(st, data, cfg, rng, params.threads);

        // occupied-cluster counts for this sweep
        std::fill(occ.begin(), occ.end(), 0);
        for (int i = 0; i < data.N; ++i) occ[st.M[i]] = 1;
        int oc = 0;
        for (char o : occ) oc += o;
        std::vector<char> occ_k(params.maxK, 0);
        for (int j = 0; j < data.J; ++j) occ_k[st.S[j]] = 1;
        int dc = 0;
        for (char o : occ_k) dc += o;
        if (oc == params.maxL || dc == params.maxK) ch.saturation_warning = true;

        if (it >= params.burn) {
            const std::size_t t = static_cast<std::size_t>(it - params.burn);
            for (int j = 0; j < data.J; ++j) ch.S[t * data.J + j] = static_cast<std::uint16_t>(st.S[j]);
            for (int i = 0; i < data.N; ++i) ch.M[t * data.N + i] = static_cast<std::uint16_t>(st.M[i]);
            std::copy(st.pi.begin(), st.pi.end(), ch.pi.begin() + t * params.maxK);
            if (params.store_omega)
                std::copy(st.omega.begin(), st.omega.end(),
                          ch.omega.begin() + t * params.maxK * params.maxL);
            std::copy(st.mu.begin(), st.mu.end(), ch.mu.begin() + t * params.maxL);
            std::copy(st.sigma2.begin(), st.sigma2.end(), ch.sigma2.begin() + t * params.maxL);
            if (ch.has_alpha) ch.alpha[t] = st.alpha;
            if (ch.has_beta) ch.beta[t] = st.beta;
            ch.n_oc[t] = oc;
            ch.n_dc[t] = dc;
        }
        if (params.verbose && (it + 1) % 1000 == 0)
            std::fprintf(stderr, "mcmc: iteration %d/%d\n", it + 1, params.nrep);
    }
    if (params.verbose && ch.saturation_warning)
        std::fprintf(stderr, "mcmc: warning, a sweep occupied all maxK or maxL components\n");
    ch.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return ch;
}

}  // namespace nestmix
