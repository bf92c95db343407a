#pragma once

#include <cmath>
#include <span>
#include <stdexcept>

#include "nestmix/config.hpp"

namespace nestmix {

inline constexpr double kLog2Pi = 1.8378770664093454835606594728112;

inline double log_gauss(double y, double mu, double sigma2) {
    if (!(sigma2 > 0.0)) throw std::domain_error("log_gauss: sigma2 must be > 0");
    const double d = y - mu;
    return -0.5 * (kLog2Pi + std::log(sigma2)) - d * d / (2.0 * sigma2);
}

// Weighted NIG update from sufficient statistics W = sum w, S1 = sum w*y,
// S2 = sum w*y^2. Weights in {0,1} give the Gibbs conditional, fractional
// weights the variational one. gamma_n is clamped below at 1e-12: the exact
// quantity is positive but the S2 + tau0*m0^2 - tau_n*m_n^2 form can cancel.
inline NigParams nig_posterior_suff(const NigParams& prior, double W, double S1, double S2) {
    NigParams post;
    post.tau0 = prior.tau0 + W;
    post.m0 = (prior.tau0 * prior.m0 + S1) / post.tau0;
    post.lambda0 = prior.lambda0 + 0.5 * W;
    double g = prior.gamma0 + 0.5 * (S2 + prior.tau0 * prior.m0 * prior.m0 - post.tau0 * post.m0 * post.m0);
    post.gamma0 = g > 1e-12 ? g : 1e-12;
    return post;
}

inline NigParams nig_posterior(const NigParams& prior, std::span<const double> w,
                               std::span<const double> y) {
    if (w.size() != y.size()) throw std::invalid_argument("nig_posterior: length mismatch");
    double W = 0.0, S1 = 0.0, S2 = 0.0;
    for (std::size_t i = 0; i < w.size(); ++i) {
        if (w[i] < 0.0) throw std::domain_error("nig_posterior: negative weight");
        W += w[i];
        S1 += w[i] * y[i];
        S2 += w[i] * y[i] * y[i];
    }
    return nig_posterior_suff(prior, W, S1, S2);
}

}  // namespace nestmix
