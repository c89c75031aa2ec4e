#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "unlearn/matrix.hpp"

namespace unlearn {

struct KMeansConfig {
    int k = 10;
    std::size_t max_iters = 300;
    double tolerance = 1e-4;  // on the largest Euclidean centroid shift
    std::uint64_t seed = 0;
};

struct KMeansResult {
    std::vector<int> labels;
    Matrix centroids;
    std::size_t iterations = 0;
    double inertia = 0.0;
    bool converged = false;
};

/// Lloyd iterations from k-means++ seeding. Distances are Euclidean on the raw
/// features, so the result depends on feature scale.
KMeansResult kmeans(const Matrix& features, const KMeansConfig& cfg);

/// Labels in [0, k) for every row of `features`.
std::vector<int> cluster_label(const Matrix& features, int k, std::uint64_t seed);

}  // namespace unlearn
