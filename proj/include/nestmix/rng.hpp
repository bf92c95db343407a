#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace nestmix {

// Counter-based generator (splitmix64 output function over a Weyl sequence).
// A stream is fully determined by its 64-bit key, so (seed, stream index)
// pairs give reproducible, platform-independent substreams. All variate
// transforms below are implemented here rather than via <random> so that
// identical seeds give identical draws on every platform.
class RngStream {
public:
    explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x1d8af066e2f82a4bULL)), ctr_(0) {}

    // Deterministic derivation of an independent stream from (key, index).
    RngStream substream(std::uint64_t index) const {
        RngStream s(0);
        s.key_ = mix(key_ + mix(index + 0x632be59bd9b4e019ULL));
        s.ctr_ = 0;
        return s;
    }

    std::uint64_t next_u64() {
        ctr_ += 0x9e3779b97f4a7c15ULL;
        return mix(key_ + ctr_);
    }

    // Uniform on the open interval (0,1).
    double uniform() {
        double u;
        do {
            u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        } while (u <= 0.0);
        return u;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal(double mean, double sd) {
        // Box-Muller, cosine branch only; two uniforms per draw.
        const double u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + sd * r * std::cos(6.283185307179586476925287 * u2);
    }

    // Shape/rate parameterization. Marsaglia-Tsang for shape >= 1 and the
    // boosting identity G(a) = G(a+1) * U^{1/a} for shape < 1.
    double gamma(double shape, double rate) {
        if (!(shape > 0.0) || !(rate > 0.0))
            throw std::domain_error("gamma: shape and rate must be > 0");
        double boost = 1.0;
        double a = shape;
        if (a < 1.0) {
            boost = std::pow(uniform(), 1.0 / a);
            a += 1.0;
        }
        const double d = a - 1.0 / 3.0;
        const double c = 1.0 / std::sqrt(9.0 * d);
        for (;;) {
            double x, v;
            do {
                x = normal(0.0, 1.0);
                v = 1.0 + c * x;
            } while (v <= 0.0);
            v = v * v * v;
            const double u = uniform();
            if (u < 1.0 - 0.0331 * x * x * x * x) return boost * d * v / rate;
            if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return boost * d * v / rate;
        }
    }

    double beta(double a, double b) {
        if (!(a > 0.0) || !(b > 0.0))
            throw std::domain_error("beta: parameters must be > 0");
        const double x = gamma(a, 1.0);
        const double y = gamma(b, 1.0);
        const double s = x + y;
        if (s <= 0.0) return a / (a + b);  // both underflowed; return the mean
        double r = x / s;
        if (r <= 0.0) r = 1e-300;
        if (r >= 1.0) r = 1.0 - 1e-16;
        return r;
    }

    void dirichlet(std::span<const double> conc, std::span<double> out) {
        if (conc.size() != out.size()) throw std::invalid_argument("dirichlet: size mismatch");
        double sum = 0.0;
        for (std::size_t i = 0; i < conc.size(); ++i) {
            if (!(conc[i] > 0.0)) throw std::domain_error("dirichlet: concentration must be > 0");
            out[i] = gamma(conc[i], 1.0);
            sum += out[i];
        }
        if (sum <= 0.0) {
            // all draws underflowed; fall back to the mean
            double c = 0.0;
            for (double v : conc) c += v;
            for (std::size_t i = 0; i < conc.size(); ++i) out[i] = conc[i] / c;
            return;
        }
        for (std::size_t i = 0; i < out.size(); ++i) out[i] /= sum;
    }

    // Index drawn proportionally to exp(logw - max(logw)); -inf entries get
    // probability zero. Consumes exactly one uniform.
    int categorical_log(std::span<const double> logw) {
        double mx = -std::numeric_limits<double>::infinity();
        for (double w : logw) mx = std::max(mx, w);
        if (!std::isfinite(mx)) throw std::domain_error("categorical_log: no finite entry");
        double total = 0.0;
        for (double w : logw) total += std::exp(w - mx);
        const double target = uniform() * total;
        double acc = 0.0;
        int last_finite = 0;
        for (std::size_t i = 0; i < logw.size(); ++i) {
            if (logw[i] == -std::numeric_limits<double>::infinity()) continue;
            acc += std::exp(logw[i] - mx);
            last_finite = static_cast<int>(i);
            if (acc >= target) return static_cast<int>(i);
        }
        return last_finite;
    }

private:
    static std::uint64_t mix(std::uint64_t z) {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t ctr_;
};

}  // namespace nestmix
