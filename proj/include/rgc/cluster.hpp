#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "rgc/matrix.hpp"

namespace rgc {

struct ClusterResult {
    std::vector<int> assignment;
    Matrix centers;
    std::size_t k = 0;
    double wss = 0.0;
    // WSS after each Lloyd iteration of the selected restart.
    std::vector<double> wss_history;
};

struct KMeansOptions {
    std::size_t max_iters = 100;
    std::size_t restarts = 10;
};

// Lloyd's algorithm with k-means++ seeding. Runs `restarts` seeded restarts and
// keeps the lowest WSS (ties go to the earlier restart). Empty clusters are
// re-seeded at the point farthest from its assigned center; nearest-center ties
// go to the lowest index. Throws ArgumentError unless 1 <= k <= rows.
ClusterResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, KMeansOptions opts = {});

double wss(const Matrix& points, const ClusterResult& result);

// Normalized mutual information with arithmetic-mean normalization.
double nmi(std::span<const int> a, std::span<const int> b);

// Adjusted Rand index (pair counting, expected-index corrected).
double ari(std::span<const int> a, std::span<const int> b);

}  // namespace rgc
