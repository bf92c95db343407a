#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "nestmix/rng.hpp"

namespace nestmix {

struct KmeansResult {
    std::vector<double> centers;  // k x dim, row-major
    std::vector<int> assign;      // per row
    double inertia = 0.0;
};

// Lloyd's algorithm on row-major data (n x dim). Centers initialized from
// distinct sampled rows; empty clusters re-seeded at the farthest point.
inline KmeansResult kmeans(std::span<const double> data, int dim, int k, int restarts,
                           int iters, RngStream rng) {
    if (dim < 1 || k < 1) throw std::invalid_argument("kmeans: dim and k must be >= 1");
    const int n = static_cast<int>(data.size()) / dim;
    if (n < 1) throw std::invalid_argument("kmeans: empty data");
    k = std::min(k, n);

    KmeansResult best;
    best.inertia = std::numeric_limits<double>::infinity();

    std::vector<double> centers(static_cast<std::size_t>(k) * dim);
    std::vector<int> assign(n);
    std::vector<int> counts(k);
    std::vector<double> dist_to_center(n);

    for (int r = 0; r < restarts; ++r) {
        // sample k distinct starting rows
        std::vector<int> picked;
        while (static_cast<int>(picked.size()) < k) {
            int idx = static_cast<int>(rng.uniform() * n);
            idx = std::min(idx, n - 1);
            if (std::find(picked.begin(), picked.end(), idx) == picked.end()) picked.push_back(idx);
        }
        for (int c = 0; c < k; ++c)
            for (int d = 0; d < dim; ++d) centers[c * dim + d] = data[picked[c] * dim + d];

        double inertia = 0.0;
        for (int it = 0; it < iters; ++it) {
            inertia = 0.0;
            for (int i = 0; i < n; ++i) {
                double bestd = std::numeric_limits<double>::infinity();
                int bestc = 0;
                for (int c = 0; c < k; ++c) {
                    double dsq = 0.0;
                    for (int d = 0; d < dim; ++d) {
                        const double diff = data[i * dim + d] - centers[c * dim + d];
                        dsq += diff * diff;
                    }
                    if (dsq < bestd) { bestd = dsq; bestc = c; }
                }
                assign[i] = bestc;
                dist_to_center[i] = bestd;
                inertia += bestd;
            }
            std::fill(centers.begin(), centers.end(), 0.0);
            std::fill(counts.begin(), counts.end(), 0);
            for (int i = 0; i < n; ++i) {
                ++counts[assign[i]];
                for (int d = 0; d < dim; ++d) centers[assign[i] * dim + d] += data[i * dim + d];
            }
            for (int c = 0; c < k; ++c) {
                if (counts[c] == 0) {
                    // re-seed at the point farthest from its center
                    int far = static_cast<int>(std::max_element(dist_to_center.begin(), dist_to_center.end()) -
                                               dist_to_center.begin());
                    for (int d = 0; d < dim; ++d) centers[c * dim + d] = data[far * dim + d];
                    dist_to_center[far] = 0.0;
                } else {
                    for (int d = 0; d < dim; ++d) centers[c * dim + d] /= counts[c];
                }
            }
        }
        if (inertia < best.inertia) {
            best.inertia = inertia;
            best.centers = centers;
            best.assign = assign;
        }
    }
    return best;
}

}  // namespace nestmix
