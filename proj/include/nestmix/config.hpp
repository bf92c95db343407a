#pragma once

#include <optional>
#include <stdexcept>
#include <string>

namespace nestmix {

enum class Family { CAM, FISAN, FSAN };

inline const char* family_name(Family f) {
    switch (f) {
        case Family::CAM: return "CAM";
        case Family::FISAN: return "fiSAN";
        case Family::FSAN: return "fSAN";
    }
    return "?";
}

inline Family family_from_string(const std::string& s) {
    if (s == "cam" || s == "CAM") return Family::CAM;
    if (s == "fisan" || s == "fiSAN" || s == "FISAN") return Family::FISAN;
    if (s == "fsan" || s == "fSAN" || s == "FSAN") return Family::FSAN;
    throw std::invalid_argument("unknown model family: " + s);
}

// Normal-inverse-gamma parameters: mu | sigma2 ~ N(m0, sigma2/tau0),
// 1/sigma2 ~ Gamma(lambda0, gamma0) (shape/rate).
struct NigParams {
    double m0 = 0.0;
    double tau0 = 0.01;
    double lambda0 = 3.0;
    double gamma0 = 2.0;
};

// GEM concentration: either fixed or Gamma(h1, h2) hyperprior.
struct GemPrior {
    double h1 = 1.0;
    double h2 = 1.0;
    std::optional<double> fixed;

    bool is_fixed() const { return fixed.has_value(); }
    double mean() const { return fixed ? *fixed : h1 / h2; }
};

struct ModelConfig {
    Family family = Family::FISAN;
    int maxK = 20;
    int maxL = 25;
    NigParams nig;
    GemPrior alpha;              // distributional GEM (CAM, FISAN)
    GemPrior beta;               // observational GEM (CAM)
    double a_dirichlet = 0.05;   // distributional Dirichlet (FSAN)
    double b_dirichlet = 0.04;   // observational Dirichlet (FISAN, FSAN)

    bool dist_is_gem() const { return family != Family::FSAN; }
    bool obs_is_gem() const { return family == Family::CAM; }
    bool has_random_alpha() const { return dist_is_gem() && !alpha.is_fixed(); }
    bool has_random_beta() const { return obs_is_gem() && !beta.is_fixed(); }

    void validate() const {
        if (maxK < 1 || maxL < 1) throw std::invalid_argument("ModelConfig: maxK and maxL must be >= 1");
        if (!(nig.tau0 > 0) || !(nig.lambda0 > 0) || !(nig.gamma0 > 0))
            throw std::invalid_argument("ModelConfig: NIG hyperparameters must be > 0");
        if (dist_is_gem()) {
            if (alpha.is_fixed() ? !(*alpha.fixed > 0) : !(alpha.h1 > 0 && alpha.h2 > 0))
                throw std::invalid_argument("ModelConfig: alpha prior must be > 0");
        } else if (!(a_dirichlet > 0)) {
            throw std::invalid_argument("ModelConfig: a_dirichlet must be > 0");
        }
        if (obs_is_gem()) {
            if (beta.is_fixed() ? !(*beta.fixed > 0) : !(beta.h1 > 0 && beta.h2 > 0))
                throw std::invalid_argument("ModelConfig: beta prior must be > 0");
        } else if (!(b_dirichlet > 0)) {
            throw std::invalid_argument("ModelConfig: b_dirichlet must be > 0");
        }
    }
};

// Defaults: NIG (0, 0.01, 3, 2); alpha ~ Gamma(1,1) and beta ~ Gamma(1,1)
// where GEM priors apply; Dirichlet concentrations 1/maxK and 1/maxL where
// finite symmetric Dirichlets apply (sparse overfitted-mixture defaults).
inline ModelConfig default_config(Family family, int maxK, int maxL) {
    if (maxK < 1 || maxL < 1) throw std::invalid_argument("default_config: bounds must be >= 1");
    ModelConfig cfg;
    cfg.family = family;
    cfg.maxK = maxK;
    cfg.maxL = maxL;
    cfg.nig = NigParams{0.0, 0.01, 3.0, 2.0};
    cfg.alpha = GemPrior{1.0, 1.0, std::nullopt};
    cfg.beta = GemPrior{1.0, 1.0, std::nullopt};
    cfg.a_dirichlet = 1.0 / maxK;
    cfg.b_dirichlet = 1.0 / maxL;
    return cfg;
}

}  // namespace nestmix
