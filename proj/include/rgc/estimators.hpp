#pragma once

#include <span>
#include <vector>

#include "rgc/config.hpp"
#include "rgc/graph.hpp"

namespace rgc {

// round(sqrt(n / 2)), at least 2.
int thumb_rule(std::size_t n);

struct Knee {
    int k = 0;
    // False when the largest second difference is below the flatness threshold.
    bool distinct = false;
};

// Fraction of the WSS range below which the curve counts as having no elbow.
inline constexpr double kFlatCurvature = 0.05;

// K with the largest discrete second difference wss[i-1] - 2 wss[i] + wss[i+1]
// (ties to the smaller K). Curves shorter than three points report their
// first K as non-distinct.
Knee detect_knee(std::span<const int> ks, std::span<const double> wss);

struct ElbowCurve {
    std::vector<int> ks;
    std::vector<double> wss_values;
    std::vector<double> wall_times;
    int knee = 0;
    bool distinct = false;
};

// Trains the full pipeline once per K in [2, k_max] with K pinned and the
// controller off, recording the final WSS and wall time of each run. Every
// run uses the config's seed.
ElbowCurve elbow_sweep(const AttributedGraph& g, const RunConfig& config, int k_max);

}  // namespace rgc
