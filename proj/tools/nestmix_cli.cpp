#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "nestmix/archive.hpp"
#include "nestmix/csv.hpp"
#include "nestmix/data.hpp"
#include "nestmix/mcmc.hpp"
#include "nestmix/summaries.hpp"
#include "nestmix/synthetic.hpp"
#include "nestmix/vi.hpp"

namespace {

using namespace nestmix;

constexpr int kExitOk = 0;
constexpr int kExitData = 1;
constexpr int kExitUsage = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

ScenarioSpec scenario_from_file(const std::string& path, std::uint64_t seed) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open scenario file " + path);
    nlohmann::json j = nlohmann::json::parse(in);
    ScenarioSpec spec;
    spec.J = j.at("J");
    spec.n_per_group = j.at("n_per_group").get<std::vector<int>>();
    spec.dc_probs = j.at("dc_probs").get<std::vector<double>>();
    for (const auto& a : j.at("archetypes")) {
        Archetype arch;
        arch.means = a.at("means").get<std::vector<double>>();
        arch.variances = a.at("variances").get<std::vector<double>>();
        arch.weights = a.at("weights").get<std::vector<double>>();
        spec.archetypes.push_back(std::move(arch));
    }
    spec.seed = seed;
    return spec;
}

int cmd_simulate(const std::string& scenario, std::uint64_t seed, const std::string& out) {
    const ScenarioSpec spec =
        scenario == "demo" ? demo_scenario(seed) : scenario_from_file(scenario, seed);
    const SyntheticDataset ds = generate(spec);

    std::vector<std::vector<std::string>> rows;
    for (int i = 0; i < ds.data.N; ++i)
        rows.push_back({format_double(ds.data.values[i]), ds.data.group_labels[ds.data.group_of[i]]});
    write_csv(out + "_data.csv", {"y", "group"}, rows);

    rows.clear();
    for (int i = 0; i < ds.data.N; ++i)
        rows.push_back({std::to_string(i + 1), std::to_string(ds.truth.obs_level[i])});
    write_csv(out + "_truth_obs.csv", {"row", "oc"}, rows);

    rows.clear();
    for (int j = 0; j < ds.data.J; ++j)
        rows.push_back({ds.data.group_labels[j], std::to_string(ds.truth.dis_level[j])});
    write_csv(out + "_truth_dis.csv", {"group", "dc"}, rows);

    std::cout << "wrote " << ds.data.N << " observations in " << ds.data.J << " groups ("
              << ds.truth.n_oc << " OCs, " << ds.truth.n_dc << " DCs) to " << out << "_*.csv\n";
    return kExitOk;
}

struct FitFlags {
    std::string data_path, y_col = "y", group_col = "group";
    std::string model = "fisan", method = "mcmc", out;
    // prior flags
    double m0 = 0.0, tau0 = 0.01, lambda0 = 3.0, gamma0 = 2.0;
    double hyp_alpha1 = 1.0, hyp_alpha2 = 1.0, hyp_beta1 = 1.0, hyp_beta2 = 1.0;
    double alpha_fixed = 0.0, beta_fixed = 0.0;
    double a_dirichlet = 0.0, b_dirichlet = 0.0;
    // engine flags
    int nrep = 10000, burn = 5000, maxL = 0, maxK = 0, nclus_start = 5;
    std::uint64_t seed = 0;
    bool have_seed = false;
    double epsilon = 0.01;
    int maxSIM = 5000, n_runs = 10, threads = 0;
    bool warmstart = true, verbose = false;
};

int cmd_fit(CLI::App* sub, FitFlags& f) {
    const Family family = family_from_string(f.model);
    if (f.method != "mcmc" && f.method != "vi")
        throw UsageError("unknown method '" + f.method + "' (expected mcmc or vi)");
    const bool mcmc = f.method == "mcmc";

    // family-specific flag checks
    auto passed = [&](const char* name) { return sub->count(name) > 0; };
    if (family == Family::FSAN) {
        for (const char* n : {"--hyp-alpha1", "--hyp-alpha2", "--alpha"})
            if (passed(n)) throw UsageError(std::string(n) + " does not apply to fSAN");
    }
    if (family != Family::CAM) {
        for (const char* n : {"--hyp-beta1", "--hyp-beta2", "--beta"})
            if (passed(n)) throw UsageError(std::string(n) + " applies only to CAM");
    }
    if (family == Family::CAM && passed("--b-dirichlet"))
        throw UsageError("--b-dirichlet does not apply to CAM");
    if (family != Family::FSAN && passed("--a-dirichlet"))
        throw UsageError("--a-dirichlet applies only to fSAN");
    for (const char* n : {"--nrep", "--burn", "--nclus-start"})
        if (!mcmc && passed(n)) throw UsageError(std::string(n) + " applies only to --method mcmc");
    for (const char* n : {"--epsilon", "--maxSIM", "--n-runs"})
        if (mcmc && passed(n)) throw UsageError(std::string(n) + " applies only to --method vi");

    const int maxK = f.maxK > 0 ? f.maxK : (mcmc ? 50 : 20);
    const int maxL = f.maxL > 0 ? f.maxL : (mcmc ? 50 : 25);

    ModelConfig cfg = default_config(family, maxK, maxL);
    cfg.nig = NigParams{f.m0, f.tau0, f.lambda0, f.gamma0};
    cfg.alpha = GemPrior{f.hyp_alpha1, f.hyp_alpha2, std::nullopt};
    cfg.beta = GemPrior{f.hyp_beta1, f.hyp_beta2, std::nullopt};
    if (passed("--alpha")) cfg.alpha.fixed = f.alpha_fixed;
    if (passed("--beta")) cfg.beta.fixed = f.beta_fixed;
    if (passed("--a-dirichlet")) cfg.a_dirichlet = f.a_dirichlet;
    if (passed("--b-dirichlet")) cfg.b_dirichlet = f.b_dirichlet;
    cfg.validate();

    const GroupedData data = load_dataset(f.data_path, f.y_col, f.group_col);

    FitArchive ar;
    ar.cfg = cfg;
    ar.data = data;
    if (mcmc) {
        ar.method = FitMethod::MCMC;
        McmcParams p;
        p.nrep = f.nrep;
        p.burn = f.burn;
        p.maxK = maxK;
        p.maxL = maxL;
        p.seed = f.have_seed ? f.seed : 123;
        p.warmstart = f.warmstart;
        p.nclus_start = f.nclus_start;
        p.verbose = f.verbose;
        p.threads = f.threads;
        p.validate();
        ar.mcmc_params = p;
        ar.chains = run_mcmc(data, cfg, p);
        std::cout << summarize_fit(*ar.chains, cfg, p);
    } else {
        ar.method = FitMethod::VI;
        ViParams p;
        p.maxK = maxK;
        p.maxL = maxL;
        p.epsilon = f.epsilon;
        p.maxSIM = f.maxSIM;
        p.seed = f.have_seed ? f.seed : 1;
        p.n_runs = f.n_runs;
        p.warmstart = f.warmstart;
        p.verbose = f.verbose;
        p.threads = f.threads;
        p.validate();
        ar.vi_params = p;
        ar.vifit = run_cavi(data, cfg, p);
        std::cout << summarize_fit(*ar.vifit, cfg, p, data);
    }
    save_archive(f.out, ar);
    return kExitOk;
}

int cmd_partition(const std::string& fit_path, int add_burnin, const std::string& out) {
    const FitArchive ar = load_archive(fit_path);
    const PartitionEstimate part = ar.method == FitMethod::MCMC
                                       ? estimate_partition(*ar.chains, ar.data, add_burnin)
                                       : estimate_partition(*ar.vifit, ar.data);

    std::vector<std::vector<std::string>> rows;
    for (int j = 0; j < ar.data.J; ++j)
        rows.push_back({ar.data.group_labels[j], std::to_string(part.dis_level[j])});
    write_csv(out + "_dis_level.csv", {"group", "dc"}, rows);

    rows.clear();
    for (int i = 0; i < ar.data.N; ++i)
        rows.push_back({format_double(ar.data.values[i]),
                        ar.data.group_labels[ar.data.group_of[i]],
                        std::to_string(part.obs_dc[i]), std::to_string(part.obs_oc[i])});
    write_csv(out + "_obs_level.csv", {"value", "group", "dc", "oc"}, rows);

    std::cout << summarize_partition(part);
    return kExitOk;
}

int cmd_measures(const std::string& fit_path, double thr, const std::string& dc_list,
                 const std::string& out) {
    const FitArchive ar = load_archive(fit_path);
    if (ar.method != FitMethod::VI)
        throw UsageError("measures requires a VI archive (random-measure estimates are variational)");
    const RandomMeasureEstimate est = estimate_G(*ar.vifit, thr);

    std::vector<int> keep_dcs;
    if (!dc_list.empty()) {
        std::stringstream ss(dc_list);
        std::string tok;
        while (std::getline(ss, tok, ',')) keep_dcs.push_back(std::stoi(tok));
    }

    std::vector<std::vector<std::string>> rows;
    for (const auto& r : est.rows) {
        if (r.post_weight <= thr) continue;
        if (!keep_dcs.empty() &&
            std::find(keep_dcs.begin(), keep_dcs.end(), r.dc) == keep_dcs.end())
            continue;
        rows.push_back({std::to_string(r.dc), std::to_string(r.oc), format_double(r.post_mean),
                        r.var_defined ? format_double(r.post_var) : "NA",
                        format_double(r.post_weight)});
    }
    write_csv(out, {"dc", "oc", "post_mean", "post_var", "post_weight"}, rows);
    std::cout << "wrote " << rows.size() << " atom rows (weight > " << thr << ") to " << out << "\n";
    return kExitOk;
}

int cmd_psm(const std::string& fit_path, const std::string& level, int add_burnin,
            const std::string& out, int threads) {
    const FitArchive ar = load_archive(fit_path);
    if (ar.method != FitMethod::MCMC)
        throw UsageError("psm requires an MCMC archive (needs posterior label draws)");
    if (level != "obs" && level != "dist")
        throw UsageError("--level must be obs or dist");
    const McmcChains& ch = *ar.chains;
    const bool obs = level == "obs";
    const int n = obs ? ch.N : ch.J;
    if (add_burnin < 0 || add_burnin >= ch.nkept)
        throw std::runtime_error("add_burnin leaves no draws");
    const std::uint16_t* draws =
        (obs ? ch.M.data() : ch.S.data()) + static_cast<std::size_t>(add_burnin) * n;
    const Psm psm = compute_psm(draws, ch.nkept - add_burnin, n, threads);

    std::vector<std::string> header(n);
    for (int i = 0; i < n; ++i) header[i] = "v" + std::to_string(i + 1);
    std::vector<std::vector<std::string>> rows(n, std::vector<std::string>(n));
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) rows[i][j] = format_double(psm.at(i, j));
    write_csv(out, header, rows);
    std::cout << "wrote " << n << "x" << n << " similarity matrix to " << out << "\n";
    return kExitOk;
}

int cmd_plotdata(const std::string& fit_path, const std::string& what, int add_burnin,
                 const std::string& out) {
    const FitArchive ar = load_archive(fit_path);
    std::vector<std::vector<std::string>> rows;

    if (what == "elbo") {
        if (ar.method != FitMethod::VI) throw UsageError("--what elbo requires a VI archive");
        const auto& traces = ar.vifit->all_traces;
        for (std::size_t r = 0; r < traces.size(); ++r)
            for (std::size_t h = 0; h < traces[r].size(); ++h)
                rows.push_back({std::to_string(r + 1), std::to_string(h + 1),
                                format_double(traces[r][h])});
        write_csv(out, {"run", "iteration", "elbo"}, rows);
    } else if (what == "trace:mu" || what == "trace:alpha") {
        if (ar.method != FitMethod::MCMC)
            throw UsageError("--what " + what + " requires an MCMC archive");
        const McmcChains& ch = *ar.chains;
        if (what == "trace:mu") {
            for (int t = 0; t < ch.nkept; ++t)
                for (int l = 0; l < ch.maxL; ++l)
                    rows.push_back({std::to_string(t + 1), std::to_string(l + 1),
                                    format_double(ch.mu[static_cast<std::size_t>(t) * ch.maxL + l])});
            write_csv(out, {"iteration", "component", "value"}, rows);
        } else {
            if (!ch.has_alpha) throw UsageError("this model has no random alpha to trace");
            for (int t = 0; t < ch.nkept; ++t)
                rows.push_back({std::to_string(t + 1), format_double(ch.alpha[t])});
            write_csv(out, {"iteration", "value"}, rows);
        }
    } else if (what == "ecdf") {
        const PartitionEstimate part = ar.method == FitMethod::MCMC
                                           ? estimate_partition(*ar.chains, ar.data, add_burnin)
                                           : estimate_partition(*ar.vifit, ar.data);
        for (int j = 0; j < ar.data.J; ++j) {
            std::vector<double> v(ar.data.values.begin() + ar.data.offsets[j],
                                  ar.data.values.begin() + ar.data.offsets[j + 1]);
            std::sort(v.begin(), v.end());
            for (std::size_t i = 0; i < v.size(); ++i)
                rows.push_back({ar.data.group_labels[j], format_double(v[i]),
                                format_double(static_cast<double>(i + 1) / v.size()),
                                std::to_string(part.dis_level[j])});
        }
        write_csv(out, {"group", "value", "ecdf", "dc_label"}, rows);
    } else if (what == "numclust") {
        if (ar.method != FitMethod::MCMC) throw UsageError("--what numclust requires an MCMC archive");
        const McmcChains& ch = *ar.chains;
        for (int t = 0; t < ch.nkept; ++t)
            rows.push_back({std::to_string(t + 1), std::to_string(ch.n_oc[t]),
                            std::to_string(ch.n_dc[t])});
        write_csv(out, {"iteration", "n_oc", "n_dc"}, rows);
    } else {
        throw UsageError("unknown --what '" + what +
                         "' (expected elbo, trace:mu, trace:alpha, ecdf, numclust)");
    }
    std::cout << "wrote " << rows.size() << " rows to " << out << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"nestmix: Bayesian shared-atom nested mixture models for grouped data"};
    app.require_subcommand(1);

    // simulate
    auto* sim = app.add_subcommand("simulate", "Generate a synthetic grouped dataset with truth labels");
    std::string sim_scenario = "demo", sim_out;
    std::uint64_t sim_seed = 0;
    sim->add_option("--scenario", sim_scenario, "'demo' or a JSON scenario file");
    sim->add_option("--seed", sim_seed, "RNG seed");
    sim->add_option("--out", sim_out, "output file prefix")->required();

    // fit
    auto* fit = app.add_subcommand("fit", "Fit a nested mixture model and write a fit archive");
    FitFlags ff;
    fit->add_option("--data", ff.data_path, "input CSV (header row required)")->required();
    fit->add_option("--y-col", ff.y_col, "numeric response column");
    fit->add_option("--group-col", ff.group_col, "group label column");
    fit->add_option("--model", ff.model, "cam, fisan or fsan");
    fit->add_option("--method", ff.method, "mcmc or vi");
    fit->add_option("--out", ff.out, "output archive path")->required();
    fit->add_option("--m0", ff.m0, "NIG prior mean");
    fit->add_option("--tau0", ff.tau0, "NIG prior precision scale");
    fit->add_option("--lambda0", ff.lambda0, "NIG prior shape");
    fit->add_option("--gamma0", ff.gamma0, "NIG prior rate");
    fit->add_option("--hyp-alpha1", ff.hyp_alpha1, "Gamma shape on alpha");
    fit->add_option("--hyp-alpha2", ff.hyp_alpha2, "Gamma rate on alpha");
    fit->add_option("--hyp-beta1", ff.hyp_beta1, "Gamma shape on beta (CAM)");
    fit->add_option("--hyp-beta2", ff.hyp_beta2, "Gamma rate on beta (CAM)");
    fit->add_option("--alpha", ff.alpha_fixed, "fix alpha at this value");
    fit->add_option("--beta", ff.beta_fixed, "fix beta at this value (CAM)");
    fit->add_option("--a-dirichlet", ff.a_dirichlet, "distributional Dirichlet parameter (fSAN)");
    fit->add_option("--b-dirichlet", ff.b_dirichlet, "observational Dirichlet parameter (fiSAN, fSAN)");
    fit->add_option("--nrep", ff.nrep, "total MCMC iterations");
    fit->add_option("--burn", ff.burn, "discarded MCMC iterations");
    fit->add_option("--maxL", ff.maxL, "observational cluster bound");
    fit->add_option("--maxK", ff.maxK, "distributional cluster bound");
    auto* seed_opt = fit->add_option("--seed", ff.seed, "RNG seed");
    fit->add_option("--nclus-start", ff.nclus_start, "warmstart k-means cluster count (MCMC)");
    fit->add_option("--epsilon", ff.epsilon, "ELBO increment stopping threshold (VI)");
    fit->add_option("--maxSIM", ff.maxSIM, "maximum CAVI iterations (VI)");
    fit->add_option("--n-runs", ff.n_runs, "independent CAVI restarts (VI)");
    fit->add_flag("--warmstart,!--no-warmstart", ff.warmstart, "k-means initialization");
    fit->add_flag("--verbose", ff.verbose, "progress messages");
    fit->add_option("--threads", ff.threads, "worker threads (0: NESTMIX_THREADS env, then hardware)");

    // partition
    auto* part = app.add_subcommand("partition", "Point-estimate partitions from a fit archive");
    std::string part_fit, part_out;
    int part_burn = 0;
    part->add_option("--fit", part_fit, "fit archive")->required();
    part->add_option("--add-burnin", part_burn, "extra retained iterations to drop (MCMC)");
    part->add_option("--out", part_out, "output file prefix")->required();

    // measures
    auto* meas = app.add_subcommand("measures", "Posterior random-measure atoms and weights (VI)");
    std::string meas_fit, meas_dc, meas_out;
    double meas_thr = 0.01;
    meas->add_option("--fit", meas_fit, "VI fit archive")->required();
    meas->add_option("--thr", meas_thr, "hide atoms with posterior weight <= thr");
    meas->add_option("--dc", meas_dc, "comma-separated DC labels to keep");
    meas->add_option("--out", meas_out, "output CSV")->required();

    // psm
    auto* psm = app.add_subcommand("psm", "Posterior similarity matrix from MCMC draws");
    std::string psm_fit, psm_level = "obs", psm_out;
    int psm_burn = 0, psm_threads = 0;
    psm->add_option("--fit", psm_fit, "MCMC fit archive")->required();
    psm->add_option("--level", psm_level, "obs or dist");
    psm->add_option("--add-burnin", psm_burn, "extra retained iterations to drop");
    psm->add_option("--out", psm_out, "output CSV")->required();
    psm->add_option("--threads", psm_threads, "worker threads");

    // plotdata
    auto* plot = app.add_subcommand("plotdata", "Tidy CSVs for external plotting");
    std::string plot_fit, plot_what, plot_out;
    int plot_burn = 0;
    plot->add_option("--fit", plot_fit, "fit archive")->required();
    plot->add_option("--what", plot_what, "elbo, trace:mu, trace:alpha, ecdf or numclust")->required();
    plot->add_option("--add-burnin", plot_burn, "extra retained iterations to drop (ecdf on MCMC)");
    plot->add_option("--out", plot_out, "output CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        ff.have_seed = seed_opt->count() > 0;
        if (sim->parsed()) return cmd_simulate(sim_scenario, sim_seed, sim_out);
        if (fit->parsed()) return cmd_fit(fit, ff);
        if (part->parsed()) return cmd_partition(part_fit, part_burn, part_out);
        if (meas->parsed()) return cmd_measures(meas_fit, meas_thr, meas_dc, meas_out);
        if (psm->parsed()) return cmd_psm(psm_fit, psm_level, psm_burn, psm_out, psm_threads);
        if (plot->parsed()) return cmd_plotdata(plot_fit, plot_what, plot_burn, plot_out);
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::invalid_argument& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}
