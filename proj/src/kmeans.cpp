#include "unlearn/kmeans.hpp"

#include <cmath>
#include <algorithm>
#include <limits>

#include "unlearn/error.hpp"
#include "unlearn/kernels.hpp"
#include "unlearn/rng.hpp"

namespace unlearn {

namespace {

// k-means++: first centre uniform, then each next centre drawn with probability
// proportional to the squared distance to the nearest chosen centre.
Matrix seed_centroids(const Matrix& x, std::size_t k, Rng& rng) {
    const std::size_t n = x.rows, d = x.cols;
    Matrix c(k, d);
    std::vector<double> best(n, std::numeric_limits<double>::infinity());

    auto copy_row = [&](std::size_t src, std::size_t dst) {
        auto s = x.row(src);
        auto t = c.row(dst);
        std::copy(s.begin(), s.end(), t.begin());
    };
    copy_row(static_cast<std::size_t>(uniform_index(rng, n)), 0);

    for (std::size_t j = 1; j < k; ++j) {
        auto prev = c.row(j - 1);
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double dist = 0.0;
            auto r = x.row(i);
            for (std::size_t t = 0; t < d; ++t) {
                const double diff = r[t] - prev[t];
                dist += diff * diff;
            }
            best[i] = std::min(best[i], dist);
            total += best[i];
        }
        std::size_t pick = n - 1;
        if (total > 0.0) {
            double target = uniform01(rng) * total;
            for (std::size_t i = 0; i < n; ++i) {
                target -= best[i];
                if (target < 0.0) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = static_cast<std::size_t>(uniform_index(rng, n));
        }
        copy_row(pick, j);
    }
    return c;
}

}  // namespace

KMeansResult kmeans(const Matrix& x, const KMeansConfig& cfg) {
    if (x.rows == 0 || x.cols == 0) throw InputError("k-means needs a non-empty feature matrix");
    if (cfg.k < 1) throw ConfigError("k must be at least 1");
    const auto k = static_cast<std::size_t>(cfg.k);
    if (k > x.rows) throw ConfigError("k exceeds the number of rows");

    Rng rng(mix_seed(cfg.seed));
    KMeansResult res;
    res.centroids = seed_centroids(x, k, rng);
    res.labels.assign(x.rows, 0);
    std::vector<double> dist(x.rows);

    Matrix sums(k, x.cols);
    std::vector<std::size_t> counts(k);
    for (res.iterations = 0; res.iterations < cfg.max_iters;) {
        kernels::nearest_centroid(x.data, res.centroids.data, x.cols, res.labels, dist);
        ++res.iterations;

        std::fill(sums.data.begin(), sums.data.end(), 0.0);
        std::fill(counts.begin(), counts.end(), 0);
        for (std::size_t i = 0; i < x.rows; ++i) {
            const auto c = static_cast<std::size_t>(res.labels[i]);
            auto s = sums.row(c);
            auto r = x.row(i);
            for (std::size_t t = 0; t < x.cols; ++t) s[t] += r[t];
            ++counts[c];
        }

        double max_shift = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            auto cen = res.centroids.row(c);
            std::vector<double> next(cen.begin(), cen.end());
            if (counts[c] == 0) {
                // Empty cluster: move it onto the point currently farthest from its centre.
                std::size_t far = 0;
                for (std::size_t i = 1; i < x.rows; ++i)
                    if (dist[i] > dist[far]) far = i;
                auto r = x.row(far);
                next.assign(r.begin(), r.end());
                dist[far] = 0.0;
            } else {
                auto s = sums.row(c);
                for (std::size_t t = 0; t < x.cols; ++t) next[t] = s[t] / static_cast<double>(counts[c]);
            }
            double shift = 0.0;
            for (std::size_t t = 0; t < x.cols; ++t) {
                const double diff = next[t] - cen[t];
                shift += diff * diff;
                cen[t] = next[t];
            }
            max_shift = std::max(max_shift, std::sqrt(shift));
        }
        if (max_shift < cfg.tolerance) {
            res.converged = true;
            break;
        }
    }
    kernels::nearest_centroid(x.data, res.centroids.data, x.cols, res.labels, dist);
    res.inertia = 0.0;
    for (double d : dist) res.inertia += d;
    return res;
}

std::vector<int> cluster_label(const Matrix& features, int k, std::uint64_t seed) {
    KMeansConfig cfg;
    cfg.k = k;
    cfg.seed = seed;
    return kmeans(features, cfg).labels;
}

}  // namespace unlearn
