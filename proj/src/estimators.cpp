#include "rgc/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "rgc/error.hpp"
#include "rgc/trainer.hpp"

namespace rgc {

int thumb_rule(std::size_t n) {
    if (n < 2) throw ArgumentError("thumb_rule: needs n >= 2");
    return std::max(2, static_cast<int>(std::lround(std::sqrt(static_cast<double>(n) / 2.0))));
}

Knee detect_knee(std::span<const int> ks, std::span<const double> wss) {
    if (ks.size() != wss.size() || ks.empty()) throw ArgumentError("detect_knee: ks and wss must match and be non-empty");
    Knee out{ks.front(), false};
    if (ks.size() < 3) return out;
    const auto [lo, hi] = std::minmax_element(wss.begin(), wss.end());
    const double range = *hi - *lo;
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t i = 1; i + 1 < ks.size(); ++i) {
        const double curvature = wss[i - 1] - 2.0 * wss[i] + wss[i + 1];
        if (curvature > best) {
            best = curvature;
            out.k = ks[i];
        }
    }
    out.distinct = range > 0.0 && best >= kFlatCurvature * range;
    return out;
}

ElbowCurve elbow_sweep(const AttributedGraph& g, const RunConfig& config, int k_max) {
    if (k_max < 3) throw ArgumentError("elbow_sweep: k_max must be >= 3");
    if (static_cast<std::size_t>(k_max) > g.n) throw ArgumentError("elbow_sweep: k_max exceeds the node count");
    ElbowCurve curve;
    for (int k = 2; k <= k_max; ++k) {
        RunConfig run = config;
        run.fixed_k = static_cast<std::size_t>(k);
        const RunRecord rec = rgc_train(g, run);
        curve.ks.push_back(k);
        curve.wss_values.push_back(rec.summary.wss);
        curve.wall_times.push_back(rec.summary.wall_seconds);
    }
    const Knee knee = detect_knee(curve.ks, curve.wss_values);
    curve.knee = knee.k;
    curve.distinct = knee.distinct;
    return curve;
}

}  // namespace rgc
