#include "nestmix/archive.hpp"

#include <bit>
#include <cstring>
#include <ctime>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

static_assert(std::endian::native == std::endian::little,
              "archive blobs are written in native little-endian layout");

namespace nestmix {

using nlohmann::json;

namespace {

struct BlobWriter {
    json manifest = json::array();
    std::vector<unsigned char> bytes;

    template <class T>
    void add(const std::string& name, const char* dtype, const std::vector<T>& v) {
        manifest.push_back({{"name", name},
                            {"dtype", dtype},
                            {"count", v.size()},
                            {"offset", bytes.size()}});
        const std::size_t nb = v.size() * sizeof(T);
        const std::size_t base = bytes.size();
        bytes.resize(base + nb);
        if (nb) std::memcpy(bytes.data() + base, v.data(), nb);
    }

    void f64(const std::string& n, const std::vector<double>& v) { add(n, "f64", v); }
    void u16(const std::string& n, const std::vector<std::uint16_t>& v) { add(n, "u16", v); }
    void i32(const std::string& n, const std::vector<int>& v) { add(n, "i32", v); }
};

struct BlobReader {
    const json& manifest;
    const std::vector<unsigned char>& bytes;

    const json* find(const std::string& name) const {
        for (const auto& e : manifest)
            if (e.at("name") == name) return &e;
        return nullptr;
    }

    template <class T>
    std::vector<T> get(const std::string& name, const char* dtype) const {
        const json* e = find(name);
        if (!e) throw std::runtime_error("archive: missing blob '" + name + "'");
        if (e->at("dtype") != dtype)
            throw std::runtime_error("archive: blob '" + name + "' has unexpected dtype");
        const std::size_t count = e->at("count");
        const std::size_t offset = e->at("offset");
        if (offset + count * sizeof(T) > bytes.size())
            throw std::runtime_error("archive: blob '" + name + "' exceeds payload");
        std::vector<T> v(count);
        if (count) std::memcpy(v.data(), bytes.data() + offset, count * sizeof(T));
        return v;
    }

    std::vector<double> f64(const std::string& n) const { return get<double>(n, "f64"); }
    std::vector<std::uint16_t> u16(const std::string& n) const { return get<std::uint16_t>(n, "u16"); }
    std::vector<int> i32(const std::string& n) const { return get<int>(n, "i32"); }
    bool has(const std::string& n) const { return find(n) != nullptr; }
};

json gem_to_json(const GemPrior& g) {
    json j{{"h1", g.h1}, {"h2", g.h2}};
    if (g.fixed) j["fixed"] = *g.fixed;
    return j;
}

GemPrior gem_from_json(const json& j) {
    GemPrior g;
    g.h1 = j.at("h1");
    g.h2 = j.at("h2");
    if (j.contains("fixed")) g.fixed = j.at("fixed").get<double>();
    return g;
}

json config_to_json(const ModelConfig& c) {
    return {{"family", family_name(c.family)},
            {"maxK", c.maxK},
            {"maxL", c.maxL},
            {"nig", {{"m0", c.nig.m0}, {"tau0", c.nig.tau0}, {"lambda0", c.nig.lambda0},
                     {"gamma0", c.nig.gamma0}}},
            {"alpha", gem_to_json(c.alpha)},
            {"beta", gem_to_json(c.beta)},
            {"a_dirichlet", c.a_dirichlet},
            {"b_dirichlet", c.b_dirichlet}};
}

ModelConfig config_from_json(const json& j) {
    ModelConfig c;
    c.family = family_from_string(j.at("family"));
    c.maxK = j.at("maxK");
    c.maxL = j.at("maxL");
    const json& n = j.at("nig");
    c.nig = NigParams{n.at("m0"), n.at("tau0"), n.at("lambda0"), n.at("gamma0")};
    c.alpha = gem_from_json(j.at("alpha"));
    c.beta = gem_from_json(j.at("beta"));
    c.a_dirichlet = j.at("a_dirichlet");
    c.b_dirichlet = j.at("b_dirichlet");
    return c;
}

std::string now_iso8601() {
    char buf[32];
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

std::vector<std::uint16_t> to_u16(const std::vector<int>& v) {
    std::vector<std::uint16_t> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<std::uint16_t>(v[i]);
    return out;
}

std::vector<int> to_int(const std::vector<std::uint16_t>& v) {
    return std::vector<int>(v.begin(), v.end());
}

}  // namespace

void save_archive(const std::string& path, const FitArchive& a) {
    if (a.method == FitMethod::MCMC && !a.chains)
        throw std::invalid_argument("save_archive: MCMC archive without chains");
    if (a.method == FitMethod::VI && !a.vifit)
        throw std::invalid_argument("save_archive: VI archive without a variational fit");

    BlobWriter w;
    w.f64("data.values", a.data.values);
    w.u16("data.group_of", to_u16(a.data.group_of));

    json header;
    header["method"] = a.method == FitMethod::MCMC ? "mcmc" : "vi";
    header["config"] = config_to_json(a.cfg);
    header["data"] = {{"N", a.data.N}, {"J", a.data.J}, {"group_labels", a.data.group_labels}};

    if (a.method == FitMethod::MCMC) {
        const McmcChains& ch = *a.chains;
        const McmcParams& p = a.mcmc_params;
        header["params"] = {{"nrep", p.nrep},       {"burn", p.burn},
                            {"maxK", p.maxK},       {"maxL", p.maxL},
                            {"seed", p.seed},       {"warmstart", p.warmstart},
                            {"nclus_start", p.nclus_start}, {"store_omega", p.store_omega}};
        header["chains"] = {{"nkept", ch.nkept},
                            {"maxK", ch.maxK},
                            {"maxL", ch.maxL},
                            {"has_alpha", ch.has_alpha},
                            {"has_beta", ch.has_beta},
                            {"has_omega", ch.has_omega},
                            {"saturation_warning", ch.saturation_warning}};
        w.u16("chains.S", ch.S);
        w.u16("chains.M", ch.M);
        w.f64("chains.pi", ch.pi);
        if (ch.has_omega) w.f64("chains.omega", ch.omega);
        w.f64("chains.mu", ch.mu);
        w.f64("chains.sigma2", ch.sigma2);
        if (ch.has_alpha) w.f64("chains.alpha", ch.alpha);
        if (ch.has_beta) w.f64("chains.beta", ch.beta);
        w.i32("chains.n_oc", ch.n_oc);
        w.i32("chains.n_dc", ch.n_dc);
        header["provenance"] = {{"created_at", a.created_at.empty() ? now_iso8601() : a.created_at},
                                {"elapsed_seconds", ch.elapsed_seconds}};
    } else {
        const ViFit& f = *a.vifit;
        const ViState& st = f.best;
        const ViParams& p = a.vi_params;
        header["params"] = {{"maxK", p.maxK},     {"maxL", p.maxL},   {"epsilon", p.epsilon},
                            {"maxSIM", p.maxSIM}, {"seed", p.seed},   {"n_runs", p.n_runs},
                            {"warmstart", p.warmstart}};
        header["vi"] = {{"maxK", st.maxK},
                        {"maxL", st.maxL},
                        {"converged", st.converged},
                        {"best_run_index", f.best_run_index},
                        {"best_seed", f.best_seed},
                        {"alpha_shape", st.alpha_shape},
                        {"alpha_rate", st.alpha_rate},
                        {"beta_shape", st.beta_shape},
                        {"beta_rate", st.beta_rate}};
        w.f64("vi.R", st.R);
        w.f64("vi.X", st.X);
        w.f64("vi.nbar", st.nbar);
        if (!st.dir_obs.empty()) w.f64("vi.dir_obs", st.dir_obs);
        if (!st.sa_obs.empty()) { w.f64("vi.sa_obs", st.sa_obs); w.f64("vi.sb_obs", st.sb_obs); }
        if (!st.sa_dist.empty()) { w.f64("vi.sa_dist", st.sa_dist); w.f64("vi.sb_dist", st.sb_dist); }
        if (!st.dir_dist.empty()) w.f64("vi.dir_dist", st.dir_dist);
        std::vector<double> m0(st.nig.size()), tau0(st.nig.size()), lam(st.nig.size()),
            gam(st.nig.size());
        for (std::size_t l = 0; l < st.nig.size(); ++l) {
            m0[l] = st.nig[l].m0;
            tau0[l] = st.nig[l].tau0;
            lam[l] = st.nig[l].lambda0;
            gam[l] = st.nig[l].gamma0;
        }
        w.f64("vi.nig.m", m0);
        w.f64("vi.nig.tau", tau0);
        w.f64("vi.nig.lambda", lam);
        w.f64("vi.nig.gamma", gam);
        w.f64("vi.elbo_trace", st.elbo_trace);
        std::vector<double> traces;
        std::vector<int> trace_len;
        for (const auto& t : f.all_traces) {
            trace_len.push_back(static_cast<int>(t.size()));
            traces.insert(traces.end(), t.begin(), t.end());
        }
        w.f64("vi.all_traces", traces);
        w.i32("vi.trace_len", trace_len);
        header["provenance"] = {{"created_at", a.created_at.empty() ? now_iso8601() : a.created_at},
                                {"elapsed_seconds", f.elapsed_seconds}};
    }
    header["blobs"] = std::move(w.manifest);

    const std::string hs = header.dump();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out.write(kArchiveMagic, sizeof kArchiveMagic);
    const std::uint32_t ver = kArchiveVersion;
    out.write(reinterpret_cast<const char*>(&ver), sizeof ver);
    const std::uint64_t hlen = hs.size();
    out.write(reinterpret_cast<const char*>(&hlen), sizeof hlen);
    out.write(hs.data(), static_cast<std::streamsize>(hs.size()));
    out.write(reinterpret_cast<const char*>(w.bytes.data()),
              static_cast<std::streamsize>(w.bytes.size()));
    if (!out) throw std::runtime_error("write failure on " + path);
}

namespace {

void read_container(const std::string& path, json& header, std::vector<unsigned char>& payload) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path);
    char magic[sizeof kArchiveMagic];
    std::uint32_t ver = 0;
    std::uint64_t hlen = 0;
    in.read(magic, sizeof magic);
    in.read(reinterpret_cast<char*>(&ver), sizeof ver);
    in.read(reinterpret_cast<char*>(&hlen), sizeof hlen);
    if (!in || std::memcmp(magic, kArchiveMagic, sizeof magic) != 0)
        throw std::runtime_error(path + ": not a nestmix fit archive");
    if (ver != kArchiveVersion)
        throw std::runtime_error(path + ": archive version " + std::to_string(ver) +
                                 " unsupported (expected " + std::to_string(kArchiveVersion) + ")");
    std::string hs(hlen, '\0');
    in.read(hs.data(), static_cast<std::streamsize>(hlen));
    if (!in) throw std::runtime_error(path + ": truncated archive header");
    header = json::parse(hs);
    payload.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

}  // namespace

FitArchive load_archive(const std::string& path) {
    json header;
    std::vector<unsigned char> payload;
    read_container(path, header, payload);
    BlobReader r{header.at("blobs"), payload};

    FitArchive a;
    a.cfg = config_from_json(header.at("config"));
    a.created_at = header.at("provenance").at("created_at");

    a.data.values = r.f64("data.values");
    a.data.group_of = to_int(r.u16("data.group_of"));
    a.data.N = header.at("data").at("N");
    a.data.J = header.at("data").at("J");
    a.data.group_labels = header.at("data").at("group_labels").get<std::vector<std::string>>();
    a.data.group_sizes.assign(a.data.J, 0);
    for (int g : a.data.group_of) ++a.data.group_sizes[g];
    a.data.offsets.assign(a.data.J + 1, 0);
    for (int j = 0; j < a.data.J; ++j) a.data.offsets[j + 1] = a.data.offsets[j] + a.data.group_sizes[j];

    const std::string method = header.at("method");
    if (method == "mcmc") {
        a.method = FitMethod::MCMC;
        const json& p = header.at("params");
        a.mcmc_params.nrep = p.at("nrep");
        a.mcmc_params.burn = p.at("burn");
        a.mcmc_params.maxK = p.at("maxK");
        a.mcmc_params.maxL = p.at("maxL");
        a.mcmc_params.seed = p.at("seed");
        a.mcmc_params.warmstart = p.at("warmstart");
        a.mcmc_params.nclus_start = p.at("nclus_start");
        a.mcmc_params.store_omega = p.at("store_omega");

        McmcChains ch;
        const json& c = header.at("chains");
        ch.family = a.cfg.family;
        ch.J = a.data.J;
        ch.N = a.data.N;
        ch.nkept = c.at("nkept");
        ch.maxK = c.at("maxK");
        ch.maxL = c.at("maxL");
        ch.has_alpha = c.at("has_alpha");
        ch.has_beta = c.at("has_beta");
        ch.has_omega = c.at("has_omega");
        ch.saturation_warning = c.at("saturation_warning");
        ch.S = r.u16("chains.S");
        ch.M = r.u16("chains.M");
        ch.pi = r.f64("chains.pi");
        if (ch.has_omega) ch.omega = r.f64("chains.omega");
        ch.mu = r.f64("chains.mu");
        ch.sigma2 = r.f64("chains.sigma2");
        if (ch.has_alpha) ch.alpha = r.f64("chains.alpha");
        if (ch.has_beta) ch.beta = r.f64("chains.beta");
        ch.n_oc = r.i32("chains.n_oc");
        ch.n_dc = r.i32("chains.n_dc");
        ch.elapsed_seconds = header.at("provenance").at("elapsed_seconds");
        a.chains = std::move(ch);
    } else if (method == "vi") {
        a.method = FitMethod::VI;
        const json& p = header.at("params");
        a.vi_params.maxK = p.at("maxK");
        a.vi_params.maxL = p.at("maxL");
        a.vi_params.epsilon = p.at("epsilon");
        a.vi_params.maxSIM = p.at("maxSIM");
        a.vi_params.seed = p.at("seed");
        a.vi_params.n_runs = p.at("n_runs");
        a.vi_params.warmstart = p.at("warmstart");

        ViFit f;
        const json& v = header.at("vi");
        f.family = a.cfg.family;
        f.best_run_index = v.at("best_run_index");
        f.best_seed = v.at("best_seed");
        f.elapsed_seconds = header.at("provenance").at("elapsed_seconds");
        ViState& st = f.best;
        st.maxK = v.at("maxK");
        st.maxL = v.at("maxL");
        st.converged = v.at("converged");
        st.alpha_shape = v.at("alpha_shape");
        st.alpha_rate = v.at("alpha_rate");
        st.beta_shape = v.at("beta_shape");
        st.beta_rate = v.at("beta_rate");
        st.R = r.f64("vi.R");
        st.X = r.f64("vi.X");
        st.nbar = r.f64("vi.nbar");
        if (r.has("vi.dir_obs")) st.dir_obs = r.f64("vi.dir_obs");
        if (r.has("vi.sa_obs")) { st.sa_obs = r.f64("vi.sa_obs"); st.sb_obs = r.f64("vi.sb_obs"); }
        if (r.has("vi.sa_dist")) { st.sa_dist = r.f64("vi.sa_dist"); st.sb_dist = r.f64("vi.sb_dist"); }
        if (r.has("vi.dir_dist")) st.dir_dist = r.f64("vi.dir_dist");
        const auto m0 = r.f64("vi.nig.m");
        const auto tau0 = r.f64("vi.nig.tau");
        const auto lam = r.f64("vi.nig.lambda");
        const auto gam = r.f64("vi.nig.gamma");
        st.nig.resize(m0.size());
        for (std::size_t l = 0; l < m0.size(); ++l) st.nig[l] = NigParams{m0[l], tau0[l], lam[l], gam[l]};
        st.elbo_trace = r.f64("vi.elbo_trace");
        const auto traces = r.f64("vi.all_traces");
        const auto lens = r.i32("vi.trace_len");
        std::size_t pos = 0;
        for (int len : lens) {
            f.all_traces.emplace_back(traces.begin() + pos, traces.begin() + pos + len);
            pos += len;
        }
        a.vifit = std::move(f);
    } else {
        throw std::runtime_error(path + ": unknown archive method '" + method + "'");
    }
    return a;
}

std::vector<unsigned char> archive_payload_bytes(const std::string& path) {
    json header;
    std::vector<unsigned char> payload;
    read_container(path, header, payload);
    return payload;
}

}  // namespace nestmix
