#include "nestmix/vi.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>

#include "nestmix/kernels.hpp"
#include "nestmix/kmeans.hpp"
#include "nestmix/special.hpp"

namespace nestmix {

namespace {

double expected_alpha(const ViState& st, const ModelConfig& cfg) {
    if (!cfg.dist_is_gem()) return 0.0;
    return cfg.alpha.is_fixed() ? *cfg.alpha.fixed : st.alpha_shape / st.alpha_rate;
}

double expected_beta(const ViState& st, const ModelConfig& cfg) {
    if (!cfg.obs_is_gem()) return 0.0;
    return cfg.beta.is_fixed() ? *cfg.beta.fixed : st.beta_shape / st.beta_rate;
}

void jitter_simplex_rows(std::vector<double>& rows, int n, int dim, RngStream& rng) {
    std::vector<double> conc(dim, 10.0);
    for (int i = 0; i < n; ++i)
        rng.dirichlet(conc, {rows.data() + static_cast<std::size_t>(i) * dim, static_cast<std::size_t>(dim)});
}

void refresh_nbar(ViState& st, const GroupedData& data) {
    const int L = st.maxL;
    std::fill(st.nbar.begin(), st.nbar.end(), 0.0);
    for (int i = 0; i < data.N; ++i) {
        double* nb = st.nbar.data() + static_cast<std::size_t>(data.group_of[i]) * L;
        const double* x = st.X.data() + static_cast<std::size_t>(i) * L;
        for (int l = 0; l < L; ++l) nb[l] += x[l];
    }
}

}  // namespace

void expected_log_omega(const ViState& st, const ModelConfig& cfg, std::vector<double>& out) {
    const int K = st.maxK, L = st.maxL;
    out.resize(static_cast<std::size_t>(K) * L);
    if (cfg.obs_is_gem()) {
        for (int k = 0; k < K; ++k) {
            const double* a = st.sa_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            const double* b = st.sb_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            double* o = out.data() + static_cast<std::size_t>(k) * L;
            double acc = 0.0;
            for (int l = 0; l < L - 1; ++l) {
                o[l] = acc + beta_elog(a[l], b[l]);
                acc += beta_elog1m(a[l], b[l]);
            }
            o[L - 1] = acc;
        }
    } else {
        for (int k = 0; k < K; ++k) {
            const double* d = st.dir_obs.data() + static_cast<std::size_t>(k) * L;
            double* o = out.data() + static_cast<std::size_t>(k) * L;
            double sum = 0.0;
            for (int l = 0; l < L; ++l) sum += d[l];
            const double psum = digamma(sum);
            for (int l = 0; l < L; ++l) o[l] = digamma(d[l]) - psum;
        }
    }
}

void expected_log_pi(const ViState& st, const ModelConfig& cfg, std::vector<double>& out) {
    const int K = st.maxK;
    out.resize(K);
    if (cfg.dist_is_gem()) {
        double acc = 0.0;
        for (int k = 0; k < K - 1; ++k) {
            out[k] = acc + beta_elog(st.sa_dist[k], st.sb_dist[k]);
            acc += beta_elog1m(st.sa_dist[k], st.sb_dist[k]);
        }
        out[K - 1] = acc;
    } else {
        double sum = 0.0;
        for (int k = 0; k < K; ++k) sum += st.dir_dist[k];
        const double psum = digamma(sum);
        for (int k = 0; k < K; ++k) out[k] = digamma(st.dir_dist[k]) - psum;
    }
}

namespace {

// (D1) observational responsibilities
void update_x(ViState& st, const GroupedData& data, const ModelConfig& cfg, int threads) {
    const int K = st.maxK, L = st.maxL;
    std::vector<double> elo;
    expected_log_omega(st, cfg, elo);

    std::vector<double> wlog(static_cast<std::size_t>(data.J) * L, 0.0);
    for (int j = 0; j < data.J; ++j) {
        const double* r = st.R.data() + static_cast<std::size_t>(j) * K;
        double* w = wlog.data() + static_cast<std::size_t>(j) * L;
        for (int k = 0; k < K; ++k) {
            if (r[k] <= 0.0) continue;
            const double* o = elo.data() + static_cast<std::size_t>(k) * L;
            for (int l = 0; l < L; ++l) w[l] += r[k] * o[l];
        }
    }

    std::vector<double> c(L), q(L), m(L);
    for (int l = 0; l < L; ++l) {
        const NigParams& p = st.nig[l];
        c[l] = -0.5 * kLog2Pi + 0.5 * (digamma(p.lambda0) - std::log(p.gamma0)) - 0.5 / p.tau0;
        q[l] = 0.5 * p.lambda0 / p.gamma0;
        m[l] = p.m0;
    }

    kernels::RespArgs a;
    a.y = data.values.data();
    a.N = data.N;
    a.J = data.J;
    a.L = L;
    a.offsets = data.offsets.data();
    a.wlog = wlog.data();
    a.c = c.data();
    a.q = q.data();
    a.m = m.data();
    a.X = st.X.data();
    a.nbar = st.nbar.data();
    kernels::responsibilities_parallel(a, threads);
}

// (D2) distributional responsibilities
void update_r(ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    const int K = st.maxK, L = st.maxL;
    std::vector<double> elo, epi;
    expected_log_omega(st, cfg, elo);
    expected_log_pi(st, cfg, epi);
    for (int j = 0; j < data.J; ++j) {
        const double* nb = st.nbar.data() + static_cast<std::size_t>(j) * L;
        double* r = st.R.data() + static_cast<std::size_t>(j) * K;
        double mx = -1e300;
        for (int k = 0; k < K; ++k) {
            const double* o = elo.data() + static_cast<std::size_t>(k) * L;
            double w = epi[k];
            for (int l = 0; l < L; ++l) w += nb[l] * o[l];
            r[k] = w;
            if (w > mx) mx = w;
        }
        double z = 0.0;
        for (int k = 0; k < K; ++k) {
            r[k] = std::exp(r[k] - mx);
            z += r[k];
        }
        for (int k = 0; k < K; ++k) r[k] /= z;
    }
}

// (D3) observational weight factors
void update_obs_weight_factors(ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    const int K = st.maxK, L = st.maxL;
    // soft pooled counts s_{k,l} = sum_j R_{j,k} * nbar_{j,l}
    std::vector<double> s(static_cast<std::size_t>(K) * L, 0.0);
    for (int j = 0; j < data.J; ++j) {
        const double* r = st.R.data() + static_cast<std::size_t>(j) * K;
        const double* nb = st.nbar.data() + static_cast<std::size_t>(j) * L;
        for (int k = 0; k < K; ++k) {
            if (r[k] <= 0.0) continue;
            double* sk = s.data() + static_cast<std::size_t>(k) * L;
            for (int l = 0; l < L; ++l) sk[l] += r[k] * nb[l];
        }
    }
    if (cfg.obs_is_gem()) {
        const double eb = expected_beta(st, cfg);
        for (int k = 0; k < K; ++k) {
            const double* sk = s.data() + static_cast<std::size_t>(k) * L;
            double* a = st.sa_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            double* b = st.sb_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            double tail = 0.0;
            for (int l = 0; l < L; ++l) tail += sk[l];
            for (int l = 0; l < L - 1; ++l) {
                tail -= sk[l];
                a[l] = 1.0 + sk[l];
                b[l] = eb + tail;
            }
        }
    } else {
        for (std::size_t i = 0; i < s.size(); ++i) st.dir_obs[i] = cfg.b_dirichlet + s[i];
    }
}

// (D4) distributional weight factors
void update_dist_weight_factors(ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    const int K = st.maxK;
    std::vector<double> r(K, 0.0);
    for (int j = 0; j < data.J; ++j)
        for (int k = 0; k < K; ++k) r[k] += st.R[static_cast<std::size_t>(j) * K + k];
    if (cfg.dist_is_gem()) {
        const double ea = expected_alpha(st, cfg);
        double tail = 0.0;
        for (int k = 0; k < K; ++k) tail += r[k];
        for (int k = 0; k < K - 1; ++k) {
            tail -= r[k];
            st.sa_dist[k] = 1.0 + r[k];
            st.sb_dist[k] = ea + tail;
        }
    } else {
        for (int k = 0; k < K; ++k) st.dir_dist[k] = cfg.a_dirichlet + r[k];
    }
}

// (D5) atom factors: weighted NIG with the responsibility columns
void update_atom_factors(ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    const int L = st.maxL;
    std::vector<double> W(L, 0.0), S1(L, 0.0), S2(L, 0.0);
    for (int i = 0; i < data.N; ++i) {
        const double* x = st.X.data() + static_cast<std::size_t>(i) * L;
        const double y = data.values[i];
        const double y2 = y * y;
        for (int l = 0; l < L; ++l) {
            W[l] += x[l];
            S1[l] += x[l] * y;
            S2[l] += x[l] * y2;
        }
    }
    for (int l = 0; l < L; ++l) st.nig[l] = nig_posterior_suff(cfg.nig, W[l], S1[l], S2[l]);
}

// (D6) concentration factors
void update_concentration_factors(ViState& st, const ModelConfig& cfg) {
    if (cfg.has_random_alpha()) {
        const int K = st.maxK;
        double rate = cfg.alpha.h2;
        for (int k = 0; k < K - 1; ++k) rate -= beta_elog1m(st.sa_dist[k], st.sb_dist[k]);
        st.alpha_shape = cfg.alpha.h1 + (K - 1);
        st.alpha_rate = rate;
    }
    if (cfg.has_random_beta()) {
        const int K = st.maxK, L = st.maxL;
        double rate = cfg.beta.h2;
        for (std::size_t i = 0; i < st.sa_obs.size(); ++i)
            rate -= beta_elog1m(st.sa_obs[i], st.sb_obs[i]);
        st.beta_shape = cfg.beta.h1 + static_cast<double>(K) * (L - 1);
        st.beta_rate = rate;
    }
}

void update_parameter_factors(ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    update_obs_weight_factors(st, data, cfg);
    update_dist_weight_factors(st, data, cfg);
    update_atom_factors(st, data, cfg);
    update_concentration_factors(st, cfg);
}

}  // namespace

void cavi_sweep(ViState& st, const GroupedData& data, const ModelConfig& cfg, int threads) {
    update_x(st, data, cfg, threads);
    update_r(st, data, cfg);
    update_parameter_factors(st, data, cfg);
}

double compute_elbo(const ViState& st, const GroupedData& data, const ModelConfig& cfg) {
    const int K = st.maxK, L = st.maxL;
    std::vector<double> elo, epi;
    expected_log_omega(st, cfg, elo);
    expected_log_pi(st, cfg, epi);

    double elbo = 0.0;

    // E[log phi] terms and q(M) entropy; the -N/2 log(2pi) constant is
    // dropped so reported values match the conventional ELBO scale used
    // for these models (it does not affect the coordinate ascent)
    std::vector<double> c(L), q(L), m(L);
    for (int l = 0; l < L; ++l) {
        const NigParams& p = st.nig[l];
        c[l] = 0.5 * (digamma(p.lambda0) - std::log(p.gamma0)) - 0.5 / p.tau0;
        q[l] = 0.5 * p.lambda0 / p.gamma0;
        m[l] = p.m0;
    }
    for (int i = 0; i < data.N; ++i) {
        const double* x = st.X.data() + static_cast<std::size_t>(i) * L;
        const double y = data.values[i];
        for (int l = 0; l < L; ++l) {
            if (x[l] <= 0.0) continue;
            const double d = y - m[l];
            elbo += x[l] * (c[l] - q[l] * d * d - std::log(x[l]));
        }
    }

    // mixture-weight likelihood terms and q(S) entropy
    for (int j = 0; j < data.J; ++j) {
        const double* r = st.R.data() + static_cast<std::size_t>(j) * K;
        const double* nb = st.nbar.data() + static_cast<std::size_t>(j) * L;
        for (int k = 0; k < K; ++k) {
            if (r[k] <= 0.0) continue;
            const double* o = elo.data() + static_cast<std::size_t>(k) * L;
            double w = epi[k];
            for (int l = 0; l < L; ++l) w += nb[l] * o[l];
            elbo += r[k] * (w - std::log(r[k]));
        }
    }

    // observational weight prior minus variational factor
    if (cfg.obs_is_gem()) {
        const double eb = expected_beta(st, cfg);
        const double elogb = (cfg.beta.is_fixed() || !cfg.has_random_beta())
                                 ? std::log(eb)
                                 : digamma(st.beta_shape) - std::log(st.beta_rate);
        for (std::size_t i = 0; i < st.sa_obs.size(); ++i) {
            const double a = st.sa_obs[i], b = st.sb_obs[i];
            const double ev = beta_elog(a, b), e1m = beta_elog1m(a, b);
            elbo += elogb + (eb - 1.0) * e1m;
            elbo -= (a - 1.0) * ev + (b - 1.0) * e1m - log_beta(a, b);
        }
    } else {
        const double b0 = cfg.b_dirichlet;
        for (int k = 0; k < K; ++k) {
            const double* d = st.dir_obs.data() + static_cast<std::size_t>(k) * L;
            const double* o = elo.data() + static_cast<std::size_t>(k) * L;
            double dsum = 0.0;
            for (int l = 0; l < L; ++l) dsum += d[l];
            elbo += std::lgamma(L * b0) - L * std::lgamma(b0);
            elbo -= std::lgamma(dsum);
            for (int l = 0; l < L; ++l)
                elbo += (b0 - d[l]) * o[l] + std::lgamma(d[l]);
        }
    }

    // distributional weight prior minus variational factor
    if (cfg.dist_is_gem()) {
        const double ea = expected_alpha(st, cfg);
        const double eloga = cfg.has_random_alpha()
                                 ? digamma(st.alpha_shape) - std::log(st.alpha_rate)
                                 : std::log(ea);
        for (int k = 0; k < K - 1; ++k) {
            const double a = st.sa_dist[k], b = st.sb_dist[k];
            const double ev = beta_elog(a, b), e1m = beta_elog1m(a, b);
            elbo += eloga + (ea - 1.0) * e1m;
            elbo -= (a - 1.0) * ev + (b - 1.0) * e1m - log_beta(a, b);
        }
    } else {
        const double a0 = cfg.a_dirichlet;
        double dsum = 0.0;
        for (int k = 0; k < K; ++k) dsum += st.dir_dist[k];
        elbo += std::lgamma(K * a0) - K * std::lgamma(a0) - std::lgamma(dsum);
        for (int k = 0; k < K; ++k)
            elbo += (a0 - st.dir_dist[k]) * epi[k] + std::lgamma(st.dir_dist[k]);
    }

    // NIG prior minus variational factor
    for (int l = 0; l < L; ++l) {
        const NigParams& p = st.nig[l];
        const NigParams& p0 = cfg.nig;
        const double elogs2 = std::log(p.gamma0) - digamma(p.lambda0);
        const double einv = p.lambda0 / p.gamma0;
        const double dm = p.m0 - p0.m0;
        const double elogp = 0.5 * (std::log(p0.tau0) - kLog2Pi) - 0.5 * elogs2
            - 0.5 * p0.tau0 * (1.0 / p.tau0 + dm * dm * einv)
            + p0.lambda0 * std::log(p0.gamma0) - std::lgamma(p0.lambda0)
            - (p0.lambda0 + 1.0) * elogs2 - p0.gamma0 * einv;
        const double elogq = 0.5 * (std::log(p.tau0) - kLog2Pi) - 0.5 * elogs2 - 0.5
            + p.lambda0 * std::log(p.gamma0) - std::lgamma(p.lambda0)
            - (p.lambda0 + 1.0) * elogs2 - p.lambda0;
        elbo += elogp - elogq;
    }

    // concentration Gamma factors
    if (cfg.has_random_alpha()) {
        const double s = st.alpha_shape, r = st.alpha_rate;
        const double el = digamma(s) - std::log(r);
        elbo += cfg.alpha.h1 * std::log(cfg.alpha.h2) - std::lgamma(cfg.alpha.h1)
            + (cfg.alpha.h1 - 1.0) * el - cfg.alpha.h2 * s / r;
        elbo -= s * std::log(r) - std::lgamma(s) + (s - 1.0) * el - s;
    }
    if (cfg.has_random_beta()) {
        const double s = st.beta_shape, r = st.beta_rate;
        const double el = digamma(s) - std::log(r);
        elbo += cfg.beta.h1 * std::log(cfg.beta.h2) - std::lgamma(cfg.beta.h1)
            + (cfg.beta.h1 - 1.0) * el - cfg.beta.h2 * s / r;
        elbo -= s * std::log(r) - std::lgamma(s) + (s - 1.0) * el - s;
    }

    return elbo;
}

ViState vi_initialize(const GroupedData& data, const ModelConfig& cfg, const ViParams& params,
                      RngStream& rng) {
    const int K = params.maxK, L = params.maxL;
    ViState st;
    st.maxK = K;
    st.maxL = L;
    st.R.assign(static_cast<std::size_t>(data.J) * K, 1.0 / K);
    st.X.assign(static_cast<std::size_t>(data.N) * L, 1.0 / L);
    st.nbar.assign(static_cast<std::size_t>(data.J) * L, 0.0);
    st.nig.assign(L, cfg.nig);
    if (cfg.obs_is_gem()) {
        st.sa_obs.assign(static_cast<std::size_t>(K) * (L - 1), 1.0);
        st.sb_obs.assign(static_cast<std::size_t>(K) * (L - 1), cfg.beta.mean());
    } else {
        st.dir_obs.assign(static_cast<std::size_t>(K) * L, cfg.b_dirichlet);
    }
    if (cfg.dist_is_gem()) {
        st.sa_dist.assign(std::max(K - 1, 0), 1.0);
        st.sb_dist.assign(std::max(K - 1, 0), cfg.alpha.mean());
        st.alpha_shape = cfg.alpha.h1;
        st.alpha_rate = cfg.alpha.h2;
    } else {
        st.dir_dist.assign(K, cfg.a_dirichlet);
    }
    if (cfg.obs_is_gem()) {
        st.beta_shape = cfg.beta.h1;
        st.beta_rate = cfg.beta.h2;
    }

    jitter_simplex_rows(st.R, data.J, K, rng);
    if (params.warmstart) {
        // vary the number of seeding centers across restarts so the runs
        // explore optima with different numbers of active atoms
        const int cmax = std::min(L, 12);
        const int C = cmax <= 2 ? cmax : 2 + static_cast<int>(rng.uniform() * (cmax - 1));
        auto km = kmeans({data.values.data(), data.values.size()}, 1, C, 10, 50, rng.substream(21));
        for (int l = 0; l < C; ++l) st.nig[l].m0 = km.centers[l];
        for (int i = 0; i < data.N; ++i) {
            double* x = st.X.data() + static_cast<std::size_t>(i) * L;
            double z = 0.0;
            for (int l = 0; l < L; ++l) {
                if (l < C) {
                    const double d = data.values[i] - km.centers[l];
                    x[l] = std::exp(-0.5 * d * d);
                } else {
                    x[l] = 0.0;
                }
                z += x[l];
            }
            if (z <= 0.0) {
                for (int l = 0; l < C; ++l) x[l] = 1.0 / C;
            } else {
                for (int l = 0; l < L; ++l) x[l] /= z;
            }
        }
    } else {
        jitter_simplex_rows(st.X, data.N, L, rng);
    }
    refresh_nbar(st, data);
    return st;
}

ViFit run_cavi(const GroupedData& data, const ModelConfig& cfg_in, const ViParams& params) {
    params.validate();
    ModelConfig cfg = cfg_in;
    cfg.maxK = params.maxK;
    cfg.maxL = params.maxL;
    cfg.validate();

    const auto t0 = std::chrono::steady_clock::now();
    RngStream master(params.seed);

    struct RunResult {
        ViState state;
        bool failed = false;
        double final_elbo = -std::numeric_limits<double>::infinity();
    };
    std::vector<RunResult> results(params.n_runs);

    const int threads = kernels::resolve_threads(params.threads);
    const int inner_threads = params.n_runs > 1 ? 1 : threads;

#ifdef _OPENMP
#pragma omp parallel for num_threads(threads) schedule(dynamic) if (params.n_runs > 1)
#endif
    for (int run = 0; run < params.n_runs; ++run) {
        RngStream rng = master.substream(static_cast<std::uint64_t>(run));
        ViState st = vi_initialize(data, cfg, params, rng);
        update_parameter_factors(st, data, cfg);
        bool failed = false;
        for (int h = 0; h < params.maxSIM; ++h) {
            cavi_sweep(st, data, cfg, inner_threads);
            const double e = compute_elbo(st, data, cfg);
            if (!std::isfinite(e)) {
                failed = true;
                if (params.verbose) std::fprintf(stderr, "vi: run %d aborted, non-finite ELBO\n", run);
                break;
            }
            st.elbo_trace.push_back(e);
            if (st.elbo_trace.size() >= 2) {
                const double inc = e - st.elbo_trace[st.elbo_trace.size() - 2];
                if (inc < params.epsilon) {
                    st.converged = true;
                    break;
                }
            }
        }
        results[run].failed = failed || st.elbo_trace.empty();
        if (!results[run].failed) results[run].final_elbo = st.elbo_trace.back();
        results[run].state = std::move(st);
        if (params.verbose && !results[run].failed)
            std::fprintf(stderr, "vi: run %d, %zu iterations, ELBO %.4f%s\n", run,
                         results[run].state.elbo_trace.size(), results[run].final_elbo,
                         results[run].state.converged ? "" : " (not converged)");
    }

    int best = -1;
    for (int run = 0; run < params.n_runs; ++run) {
        if (results[run].failed) continue;
        if (best < 0 || results[run].final_elbo > results[best].final_elbo) best = run;
    }
    if (best < 0) throw std::runtime_error("run_cavi: all runs failed with non-finite ELBO");

    ViFit fit;
    fit.family = cfg.family;
    fit.all_traces.reserve(params.n_runs);
    for (auto& r : results) fit.all_traces.push_back(r.state.elbo_trace);
    fit.best = std::move(results[best].state);
    fit.best_run_index = best;
    fit.best_seed = static_cast<std::uint64_t>(best);
    fit.elapsed_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return fit;
}

}  // namespace nestmix
