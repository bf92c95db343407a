#include "nestmix/summaries.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <sstream>

#include "nestmix/kernels.hpp"
#include "nestmix/rng.hpp"

namespace nestmix {

Psm compute_psm(const std::uint16_t* draws, int T, int n, int threads) {
    if (T < 1 || n < 1) throw std::invalid_argument("compute_psm: empty draws");
    Psm p;
    p.n = n;
    p.m.assign(static_cast<std::size_t>(n) * n, 0.0);
    kernels::psm_parallel(draws, T, n, p.m.data(), threads);
    return p;
}

Psm compute_psm(const std::vector<std::vector<int>>& draws, int threads) {
    if (draws.empty() || draws[0].empty()) throw std::invalid_argument("compute_psm: empty draws");
    const int T = static_cast<int>(draws.size());
    const int n = static_cast<int>(draws[0].size());
    std::vector<std::uint16_t> flat(static_cast<std::size_t>(T) * n);
    for (int t = 0; t < T; ++t) {
        if (static_cast<int>(draws[t].size()) != n)
            throw std::invalid_argument("compute_psm: ragged draws");
        for (int i = 0; i < n; ++i) flat[static_cast<std::size_t>(t) * n + i] = static_cast<std::uint16_t>(draws[t][i]);
    }
    return compute_psm(flat.data(), T, n, threads);
}

namespace {

// Affinity backends for the greedy Binder search. score(item, c) returns
// sum_{i' in cluster c} (PSM(item, i') - 1/2) for an item not in c.

class PsmBackend {
public:
    explicit PsmBackend(const Psm& psm) : psm_(psm) {}

    int n_items() const { return psm_.n; }
    int n_clusters() const { return static_cast<int>(members_.size()); }
    int cluster_size(int c) const { return static_cast<int>(members_[c].size()); }

    void reset() { members_.clear(); }

    void add(int item, int c) {
        if (c == n_clusters()) members_.emplace_back();
        members_[c].push_back(item);
    }

    void remove(int item, int c) {
        auto& v = members_[c];
        v.erase(std::find(v.begin(), v.end(), item));
    }

    void drop_empty(int c, std::vector<int>& labels) {
        const int last = n_clusters() - 1;
        if (c != last) {
            members_[c] = std::move(members_[last]);
            for (int i : members_[c]) labels[i] = c;
        }
        members_.pop_back();
    }

    double score(int item, int c) const {
        double s = 0.0;
        const double* row = psm_.m.data() + static_cast<std::size_t>(item) * psm_.n;
        for (int i : members_[c]) s += row[i] - 0.5;
        return s;
    }

    double loss(const std::vector<int>& labels) const {
        double total = 0.0;
        for (int i = 0; i < psm_.n; ++i)
            for (int j = i + 1; j < psm_.n; ++j) {
                const double p = psm_.at(i, j);
                total += labels[i] == labels[j] ? 1.0 - p : p;
            }
        return total;
    }

private:
    const Psm& psm_;
    std::vector<std::vector<int>> members_;
};

// Draws backend: per cluster, co-assignment counts indexed by (draw, label),
// so scoring is O(T) without materializing the n x n PSM.
class DrawsBackend {
public:
    DrawsBackend(const std::uint16_t* draws, int T, int n, int n_labels)
        : T_(T), n_(n), nl_(n_labels) {
        drawsT_.resize(static_cast<std::size_t>(n) * T);
        for (int t = 0; t < T; ++t)
            for (int i = 0; i < n; ++i)
                drawsT_[static_cast<std::size_t>(i) * T + t] = draws[static_cast<std::size_t>(t) * n + i];
        // sum over t of pairs within each draw's clusters (constant loss part)
        std::vector<long long> cnt(nl_, 0);
        double pair_sum = 0.0;
        for (int t = 0; t < T; ++t) {
            std::fill(cnt.begin(), cnt.end(), 0);
            for (int i = 0; i < n; ++i) ++cnt[draws[static_cast<std::size_t>(t) * n + i]];
            for (long long c : cnt) pair_sum += 0.5 * static_cast<double>(c) * (c - 1);
        }
        total_psm_pairs_ = pair_sum / T;
    }

    int n_items() const { return n_; }
    int n_clusters() const { return static_cast<int>(sizes_.size()); }
    int cluster_size(int c) const { return sizes_[c]; }

    void reset() {
        counts_.clear();
        sizes_.clear();
    }

    void add(int item, int c) {
        if (c == n_clusters()) {
            counts_.emplace_back(static_cast<std::size_t>(T_) * nl_, 0);
            sizes_.push_back(0);
        }
        const std::uint16_t* d = drawsT_.data() + static_cast<std::size_t>(item) * T_;
        std::int32_t* cc = counts_[c].data();
        for (int t = 0; t < T_; ++t) ++cc[static_cast<std::size_t>(t) * nl_ + d[t]];
        ++sizes_[c];
    }

    void remove(int item, int c) {
        const std::uint16_t* d = drawsT_.data() + static_cast<std::size_t>(item) * T_;
        std::int32_t* cc = counts_[c].data();
        for (int t = 0; t < T_; ++t) --cc[static_cast<std::size_t>(t) * nl_ + d[t]];
        --sizes_[c];
    }

    void drop_empty(int c, std::vector<int>& labels) {
        const int last = n_clusters() - 1;
        if (c != last) {
            counts_[c] = std::move(counts_[last]);
            sizes_[c] = sizes_[last];
            for (int i = 0; i < n_; ++i)
                if (labels[i] == last) labels[i] = c;
        }
        counts_.pop_back();
        sizes_.pop_back();
    }

    double score(int item, int c) const {
        const std::uint16_t* d = drawsT_.data() + static_cast<std::size_t>(item) * T_;
        const std::int32_t* cc = counts_[c].data();
        long long s = 0;
        for (int t = 0; t < T_; ++t) s += cc[static_cast<std::size_t>(t) * nl_ + d[t]];
        return static_cast<double>(s) / T_ - 0.5 * sizes_[c];
    }

    // expected Binder loss of the currently held clustering
    double loss(const std::vector<int>& labels) const {
        double within_psm = 0.0;
        double same_pairs = 0.0;
        for (int c = 0; c < n_clusters(); ++c)
            same_pairs += 0.5 * static_cast<double>(sizes_[c]) * (sizes_[c] - 1);
        for (int i = 0; i < n_; ++i) {
            const int c = labels[i];
            const std::uint16_t* d = drawsT_.data() + static_cast<std::size_t>(i) * T_;
            const std::int32_t* cc = counts_[c].data();
            long long s = 0;
            for (int t = 0; t < T_; ++t) s += cc[static_cast<std::size_t>(t) * nl_ + d[t]];
            within_psm += static_cast<double>(s) / T_ - 1.0;  // exclude the unit self term
        }
        within_psm *= 0.5;
        return total_psm_pairs_ + same_pairs - 2.0 * within_psm;
    }

private:
    int T_, n_, nl_;
    std::vector<std::uint16_t> drawsT_;
    std::vector<std::vector<std::int32_t>> counts_;
    std::vector<int> sizes_;
    double total_psm_pairs_ = 0.0;
};

template <class Backend>
BinderResult greedy_binder(Backend& backend, int restarts, std::uint64_t seed) {
    const int n = backend.n_items();
    RngStream master(seed);

    BinderResult best;
    best.loss = std::numeric_limits<double>::infinity();

    std::vector<int> order(n), labels(n);
    for (int r = 0; r < restarts; ++r) {
        RngStream rng = master.substream(static_cast<std::uint64_t>(r));
        std::iota(order.begin(), order.end(), 0);
        for (int i = n - 1; i > 0; --i) {
            const int j = std::min(static_cast<int>(rng.uniform() * (i + 1)), i);
            std::swap(order[i], order[j]);
        }

        backend.reset();
        std::fill(labels.begin(), labels.end(), -1);
        for (int item : order) {
            int bestc = backend.n_clusters();  // new cluster
            double bests = 0.0;
            for (int c = 0; c < backend.n_clusters(); ++c) {
                const double s = backend.score(item, c);
                if (s > bests) { bests = s; bestc = c; }
            }
            backend.add(item, bestc);
            labels[item] = bestc;
        }

        // sweep refinement until no move improves
        bool improved = true;
        int guard = 0;
        while (improved && guard++ < 1000) {
            improved = false;
            for (int item = 0; item < n; ++item) {
                const int c_old = labels[item];
                backend.remove(item, c_old);
                int bestc = c_old;
                double bests = backend.score(item, c_old);
                for (int c = 0; c < backend.n_clusters(); ++c) {
                    if (c == c_old) continue;
                    const double s = backend.score(item, c);
                    if (s > bests + 1e-12) { bests = s; bestc = c; }
                }
                if (bests < -1e-12 && backend.cluster_size(c_old) > 0) {
                    bestc = backend.n_clusters();  // better off alone
                    bests = 0.0;
                }
                backend.add(item, bestc);
                labels[item] = bestc;
                if (bestc != c_old) {
                    improved = true;
                    if (backend.cluster_size(c_old) == 0) backend.drop_empty(c_old, labels);
                }
            }
        }

        const double loss = backend.loss(labels);
        if (loss < best.loss - 1e-12) {
            best.loss = loss;
            best.labels = labels;
        }
    }

    // compact labels to 1..k in order of first appearance
    std::vector<int> remap;
    for (int& l : best.labels) {
        auto it = std::find(remap.begin(), remap.end(), l);
        if (it == remap.end()) {
            remap.push_back(l);
            l = static_cast<int>(remap.size());
        } else {
            l = static_cast<int>(it - remap.begin()) + 1;
        }
    }
    best.n_clusters = static_cast<int>(remap.size());
    return best;
}

}  // namespace

BinderResult binder_search_psm(const Psm& psm, int restarts, std::uint64_t seed) {
    PsmBackend backend(psm);
    return greedy_binder(backend, restarts, seed);
}

BinderResult binder_search_draws(const std::uint16_t* draws, int T, int n, int n_labels,
                                 int restarts, std::uint64_t seed) {
    DrawsBackend backend(draws, T, n, n_labels);
    return greedy_binder(backend, restarts, seed);
}

double binder_loss(const Psm& psm, const std::vector<int>& labels) {
    double total = 0.0;
    for (int i = 0; i < psm.n; ++i)
        for (int j = i + 1; j < psm.n; ++j) {
            const double p = psm.at(i, j);
            total += labels[i] == labels[j] ? 1.0 - p : p;
        }
    return total;
}

BinderResult estimate_partition_level(const McmcChains& chains, bool obs_level, int add_burnin) {
    if (add_burnin < 0 || add_burnin >= chains.nkept)
        throw std::invalid_argument("estimate_partition: add_burnin leaves no draws");
    const int n = obs_level ? chains.N : chains.J;
    const int T = chains.nkept - add_burnin;
    const std::uint16_t* draws =
        (obs_level ? chains.M.data() : chains.S.data()) + static_cast<std::size_t>(add_burnin) * n;
    const int n_labels = obs_level ? chains.maxL : chains.maxK;

    // scoring in the greedy search is O(number of draws); thin long chains
    // to a deterministic evenly spaced subsample of the retained draws
    const int cap = 500;
    if (T <= cap) return binder_search_draws(draws, T, n, n_labels);
    std::vector<std::uint16_t> thinned(static_cast<std::size_t>(cap) * n);
    for (int t = 0; t < cap; ++t) {
        const int src = static_cast<int>((static_cast<long long>(t) * T) / cap);
        std::copy(draws + static_cast<std::size_t>(src) * n,
                  draws + static_cast<std::size_t>(src + 1) * n,
                  thinned.begin() + static_cast<std::size_t>(t) * n);
    }
    return binder_search_draws(thinned.data(), cap, n, n_labels);
}

PartitionEstimate estimate_partition(const McmcChains& chains, const GroupedData& data,
                                     int add_burnin) {
    auto obs = estimate_partition_level(chains, true, add_burnin);
    auto dis = estimate_partition_level(chains, false, add_burnin);
    PartitionEstimate part;
    part.method = FitMethod::MCMC;
    part.dis_level = dis.labels;
    part.obs_oc = obs.labels;
    part.obs_dc.resize(data.N);
    for (int i = 0; i < data.N; ++i) part.obs_dc[i] = dis.labels[data.group_of[i]];
    part.obs_loss = obs.loss;
    part.dis_loss = dis.loss;
    part.n_oc = obs.n_clusters;
    part.n_dc = dis.n_clusters;
    return part;
}

namespace {

// argmax with lowest-index tie break, then compact labels from 1 in order of
// first appearance
std::vector<int> hard_labels(const std::vector<double>& probs, int n, int dim) {
    std::vector<int> raw(n);
    for (int i = 0; i < n; ++i) {
        const double* row = probs.data() + static_cast<std::size_t>(i) * dim;
        int arg = 0;
        for (int d = 1; d < dim; ++d)
            if (row[d] > row[arg]) arg = d;
        raw[i] = arg;
    }
    return raw;
}

std::vector<int> compact_labels(std::vector<int> raw, int* n_clusters) {
    std::vector<int> remap;
    for (int& l : raw) {
        auto it = std::find(remap.begin(), remap.end(), l);
        if (it == remap.end()) {
            remap.push_back(l);
            l = static_cast<int>(remap.size());
        } else {
            l = static_cast<int>(it - remap.begin()) + 1;
        }
    }
    if (n_clusters) *n_clusters = static_cast<int>(remap.size());
    return raw;
}

}  // namespace

PartitionEstimate estimate_partition(const ViFit& fit, const GroupedData& data) {
    PartitionEstimate part;
    part.method = FitMethod::VI;
    part.dis_level = compact_labels(hard_labels(fit.best.R, data.J, fit.best.maxK), &part.n_dc);
    part.obs_oc = compact_labels(hard_labels(fit.best.X, data.N, fit.best.maxL), &part.n_oc);
    part.obs_dc.resize(data.N);
    for (int i = 0; i < data.N; ++i) part.obs_dc[i] = part.dis_level[data.group_of[i]];
    return part;
}

RandomMeasureEstimate estimate_G(const ViFit& fit, double thr) {
    if (thr < 0.0 || thr >= 1.0) throw std::invalid_argument("estimate_G: thr must be in [0,1)");
    const ViState& st = fit.best;
    const int K = st.maxK, L = st.maxL;

    // occupied DCs in argmax order of first appearance (matches partition labels)
    std::vector<int> raw = hard_labels(st.R, static_cast<int>(st.R.size()) / K, K);
    std::vector<int> dcs;
    for (int r : raw)
        if (std::find(dcs.begin(), dcs.end(), r) == dcs.end()) dcs.push_back(r);

    RandomMeasureEstimate est;
    est.thr = thr;
    const bool cam = !st.sa_obs.empty();
    for (std::size_t d = 0; d < dcs.size(); ++d) {
        const int k = dcs[d];
        std::vector<double> w(L, 0.0);
        if (cam) {
            const double* a = st.sa_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            const double* b = st.sb_obs.data() + static_cast<std::size_t>(k) * (L - 1);
            double rem = 1.0;
            for (int l = 0; l < L - 1; ++l) {
                const double v = a[l] / (a[l] + b[l]);
                w[l] = v * rem;
                rem *= 1.0 - v;
            }
            w[L - 1] = rem;
        } else {
            const double* dd = st.dir_obs.data() + static_cast<std::size_t>(k) * L;
            double sum = 0.0;
            for (int l = 0; l < L; ++l) sum += dd[l];
            for (int l = 0; l < L; ++l) w[l] = dd[l] / sum;
        }
        for (int l = 0; l < L; ++l) {
            RandomMeasureEstimate::Row row;
            row.dc = static_cast<int>(d) + 1;
            row.oc = l + 1;
            row.post_mean = st.nig[l].m0;
            row.var_defined = st.nig[l].lambda0 > 1.0;
            row.post_var = row.var_defined ? st.nig[l].gamma0 / (st.nig[l].lambda0 - 1.0)
                                           : std::numeric_limits<double>::quiet_NaN();
            row.post_weight = w[l];
            est.rows.push_back(row);
        }
    }
    return est;
}

namespace {

double median_of(std::vector<int> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

void mean_var(const std::vector<int>& v, double* mean, double* var) {
    double m = 0.0;
    for (int x : v) m += x;
    m /= static_cast<double>(v.size());
    double s = 0.0;
    for (int x : v) s += (x - m) * (x - m);
    *mean = m;
    *var = v.size() > 1 ? s / static_cast<double>(v.size() - 1) : 0.0;
}

std::string fmt(double x, int prec = 6) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", prec, x);
    return buf;
}

}  // namespace

ClusterCountSummary number_clusters(const McmcChains& chains) {
    ClusterCountSummary s;
    s.oc = chains.n_oc;
    s.dc = chains.n_dc;
    mean_var(s.oc, &s.oc_mean, &s.oc_var);
    mean_var(s.dc, &s.dc_mean, &s.dc_var);
    s.oc_median = median_of(s.oc);
    s.dc_median = median_of(s.dc);
    return s;
}

AllocationTable allocation_probabilities(const ViFit& fit, const GroupedData& data) {
    AllocationTable t;
    t.J = data.J;
    t.maxK = fit.best.maxK;
    t.N = data.N;
    t.maxL = fit.best.maxL;
    t.group_probs = fit.best.R;
    t.obs_probs = fit.best.X;
    return t;
}

std::string summarize_fit(const McmcChains& chains, const ModelConfig& cfg, const McmcParams& params) {
    const auto cc = number_clusters(chains);
    std::ostringstream os;
    os << "MCMC results for " << family_name(chains.family) << "\n"
       << "-----------------------------------------------\n"
       << "Model estimated on " << chains.N << " total observations and " << chains.J << " groups\n"
       << "maxL: " << chains.maxL << " - maxK: " << chains.maxK << "\n"
       << "Prior parameters (m0, tau0, lambda0, gamma0): ( " << fmt(cfg.nig.m0) << ", "
       << fmt(cfg.nig.tau0) << ", " << fmt(cfg.nig.lambda0) << ", " << fmt(cfg.nig.gamma0) << " )\n\n"
       << "Size of the MCMC sample (after burn-in): " << chains.nkept << "\n"
       << "Total MCMC iterations performed: " << params.nrep << "\n"
       << "Elapsed time: " << fmt(chains.elapsed_seconds, 4) << " secs\n\n"
       << "Number of observational and distributional clusters:\n"
       << "         OC        DC\n"
       << "Mean     " << fmt(cc.oc_mean) << "  " << fmt(cc.dc_mean) << "\n"
       << "Median   " << fmt(cc.oc_median) << "  " << fmt(cc.dc_median) << "\n"
       << "Variance " << fmt(cc.oc_var) << "  " << fmt(cc.dc_var) << "\n";
    if (chains.saturation_warning)
        os << "\nWarning: some iterations occupied every available component (maxK/maxL reached)\n";
    return os.str();
}

std::string summarize_fit(const ViFit& fit, const ModelConfig& cfg, const ViParams& params,
                          const GroupedData& data) {
    const PartitionEstimate part = estimate_partition(fit, data);
    std::ostringstream os;
    os << "Variational inference results for " << family_name(fit.family) << "\n"
       << "-----------------------------------------------\n"
       << "Model estimated on " << data.N << " total observations and " << data.J << " groups\n"
       << "maxL: " << fit.best.maxL << " - maxK: " << fit.best.maxK << "\n"
       << "Prior parameters (m0, tau0, lambda0, gamma0): ( " << fmt(cfg.nig.m0) << ", "
       << fmt(cfg.nig.tau0) << ", " << fmt(cfg.nig.lambda0) << ", " << fmt(cfg.nig.gamma0) << " )\n\n"
       << "Threshold: " << fmt(params.epsilon) << "\n"
       << "ELBO value: " << fmt(fit.best.elbo_trace.back(), 10) << "\n"
       << "Best run out of " << params.n_runs << " (run index " << fit.best_run_index << ")\n"
       << (fit.best.converged ? "Convergence reached in " : "Iteration cap hit at ")
       << fit.best.elbo_trace.size() << " iterations\n"
       << "Elapsed time: " << fmt(fit.elapsed_seconds, 4) << " secs\n\n"
       << "Number of observational and distributional clusters:\n"
       << "         OC  DC\n"
       << "Estimate " << part.n_oc << "  " << part.n_dc << "\n";
    return os.str();
}

std::string summarize_partition(const PartitionEstimate& part) {
    std::ostringstream os;
    os << "Summary of the posterior observ. and distrib. partitions estimated via "
       << (part.method == FitMethod::MCMC ? "MCMC" : "VI") << "\n"
       << "----------------------------------\n"
       << "Number of estimated OCs: " << part.n_oc << "\n"
       << "Number of estimated DCs: " << part.n_dc << "\n"
       << "----------------------------------\n";
    return os.str();
}

}  // namespace nestmix
