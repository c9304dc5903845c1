#include "rgc/cluster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <random>

#include "rgc/error.hpp"

namespace rgc {

namespace {

// Returns true if any assignment changed.
bool assign_nearest(const Matrix& points, const Matrix& centers, std::vector<int>& assignment) {
    bool changed = false;
    for (std::size_t i = 0; i < points.rows(); ++i) {
        int best = 0;
        double best_d = std::numeric_limits<double>::infinity();
        for (std::size_t j = 0; j < centers.rows(); ++j) {
            const double d = squared_distance(points.row(i), centers.row(j));
            if (d < best_d) {
                best_d = d;
                best = static_cast<int>(j);
            }
        }
        if (assignment[i] != best) {
            assignment[i] = best;
            changed = true;
        }
    }
    return changed;
}

void update_means(const Matrix& points, const std::vector<int>& assignment, Matrix& centers,
                  std::vector<std::size_t>& counts) {
    const std::size_t k = centers.rows();
    Matrix sums(k, points.cols());
    counts.assign(k, 0);
    for (std::size_t i = 0; i < points.rows(); ++i) {
        const auto c = static_cast<std::size_t>(assignment[i]);
        ++counts[c];
        auto s = sums.row(c);
        const auto p = points.row(i);
        for (std::size_t d = 0; d < s.size(); ++d) s[d] += p[d];
    }
    for (std::size_t j = 0; j < k; ++j) {
        if (counts[j] == 0) continue;
        const double inv = 1.0 / static_cast<double>(counts[j]);
        auto dst = centers.row(j);
        const auto s = sums.row(j);
        for (std::size_t d = 0; d < dst.size(); ++d) dst[d] = s[d] * inv;
    }
}

double total_wss(const Matrix& points, const Matrix& centers, const std::vector<int>& assignment) {
    double s = 0.0;
    for (std::size_t i = 0; i < points.rows(); ++i)
        s += squared_distance(points.row(i), centers.row(static_cast<std::size_t>(assignment[i])));
    return s;
}

Matrix seed_plus_plus(const Matrix& points, std::size_t k, std::mt19937_64& rng) {
    const std::size_t n = points.rows();
    Matrix centers(k, points.cols());
    std::vector<bool> chosen(n, false);
    std::vector<double> d2(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t j, std::size_t idx) {
        chosen[idx] = true;
        std::copy(points.row(idx).begin(), points.row(idx).end(), centers.row(j).begin());
        for (std::size_t i = 0; i < n; ++i) d2[i] = std::min(d2[i], squared_distance(points.row(i), points.row(idx)));
    };

    take(0, std::uniform_int_distribution<std::size_t>(0, n - 1)(rng));
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::size_t j = 1; j < k; ++j) {
        double total = 0.0;
        for (double v : d2) total += v;
        std::size_t pick = n;
        if (total > 0.0) {
            const double target = unit(rng) * total;
            double acc = 0.0;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == n)  // rounding at the tail
                for (std::size_t i = n; i-- > 0;)
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
        } else {
            for (std::size_t i = 0; i < n; ++i)
                if (!chosen[i]) {
                    pick = i;
                    break;
                }
        }
        take(j, pick);
    }
    return centers;
}

// Moves each empty cluster's center onto the point farthest from its own
// center, taking that point out of a cluster with at least two members.
void repair_empty(const Matrix& points, std::vector<int>& assignment, Matrix& centers,
                  std::vector<std::size_t>& counts) {
    for (std::size_t j = 0; j < centers.rows(); ++j) {
        if (counts[j] != 0) continue;
        std::size_t far = points.rows();
        double far_d = -1.0;
        for (std::size_t i = 0; i < points.rows(); ++i) {
            const auto c = static_cast<std::size_t>(assignment[i]);
            if (counts[c] < 2) continue;
            const double d = squared_distance(points.row(i), centers.row(c));
            if (d > far_d) {
                far_d = d;
                far = i;
            }
        }
        if (far == points.rows() || far_d <= 0.0) continue;
        --counts[static_cast<std::size_t>(assignment[far])];
        assignment[far] = static_cast<int>(j);
        counts[j] = 1;
        std::copy(points.row(far).begin(), points.row(far).end(), centers.row(j).begin());
    }
}

ClusterResult lloyd(const Matrix& points, std::size_t k, std::mt19937_64& rng, std::size_t max_iters) {
    ClusterResult r;
    r.k = k;
    r.centers = seed_plus_plus(points, k, rng);
    r.assignment.assign(points.rows(), -1);
    std::vector<std::size_t> counts;
    for (std::size_t iter = 0; iter < max_iters; ++iter) {
        const bool changed = assign_nearest(points, r.centers, r.assignment);
        if (!changed && iter > 0) break;
        update_means(points, r.assignment, r.centers, counts);
        if (std::find(counts.begin(), counts.end(), 0) != counts.end()) {
            repair_empty(points, r.assignment, r.centers, counts);
            update_means(points, r.assignment, r.centers, counts);
        }
        r.wss_history.push_back(total_wss(points, r.centers, r.assignment));
    }
    r.wss = total_wss(points, r.centers, r.assignment);
    return r;
}

struct Contingency {
    std::vector<std::vector<std::int64_t>> table;
    std::vector<std::int64_t> rows, cols;
    std::int64_t n = 0;
};

Contingency contingency(std::span<const int> a, std::span<const int> b) {
    if (a.size() != b.size())
        throw ArgumentError("label vectors differ in length (" + std::to_string(a.size()) + " vs " +
                            std::to_string(b.size()) + ")");
    std::map<int, std::size_t> ia, ib;
    for (int v : a) ia.emplace(v, ia.size());
    for (int v : b) ib.emplace(v, ib.size());
    Contingency c;
    c.table.assign(ia.size(), std::vector<std::int64_t>(ib.size(), 0));
    c.rows.assign(ia.size(), 0);
    c.cols.assign(ib.size(), 0);
    for (std::size_t i = 0; i < a.size(); ++i) {
        const std::size_t r = ia[a[i]], s = ib[b[i]];
        ++c.table[r][s];
        ++c.rows[r];
        ++c.cols[s];
    }
    c.n = static_cast<std::int64_t>(a.size());
    return c;
}

bool same_partition(const Contingency& c) {
    if (c.rows.size() != c.cols.size()) return false;
    for (const auto& row : c.table) {
        std::size_t nonzero = 0;
        for (auto v : row) nonzero += v != 0;
        if (nonzero != 1) return false;
    }
    return true;
}

std::int64_t pairs(std::int64_t m) { return m * (m - 1) / 2; }

}  // namespace

ClusterResult kmeans(const Matrix& points, std::size_t k, std::uint64_t seed, KMeansOptions opts) {
    if (k < 1 || k > points.rows())
        throw ArgumentError("kmeans: k=" + std::to_string(k) + " must lie in [1, " + std::to_string(points.rows()) +
                            "]");
    if (opts.restarts < 1) throw ArgumentError("kmeans: restarts must be >= 1");
    if (opts.max_iters < 1) throw ArgumentError("kmeans: max_iters must be >= 1");
    ClusterResult best;
    for (std::size_t r = 0; r < opts.restarts; ++r) {
        std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                          static_cast<std::uint32_t>(r)};
        std::mt19937_64 rng(seq);
        ClusterResult cand = lloyd(points, k, rng, opts.max_iters);
        if (r == 0 || cand.wss < best.wss) best = std::move(cand);
    }
    return best;
}

double wss(const Matrix& points, const ClusterResult& result) {
    if (result.assignment.size() != points.rows() || result.centers.cols() != points.cols())
        throw DimensionError("wss: result does not match points");
    return total_wss(points, result.centers, result.assignment);
}

double nmi(std::span<const int> a, std::span<const int> b) {
    if (a.empty()) throw ArgumentError("nmi: empty label vectors");
    const Contingency c = contingency(a, b);
    if (same_partition(c)) return 1.0;
    const double n = static_cast<double>(c.n);
    auto entropy = [n](const std::vector<std::int64_t>& counts) {
        double h = 0.0;
        for (auto m : counts) {
            const double p = static_cast<double>(m) / n;
            h -= p * std::log(p);
        }
        return h;
    };
    const double ha = entropy(c.rows);
    const double hb = entropy(c.cols);
    if (ha == 0.0 || hb == 0.0) return 0.0;
    double mi = 0.0;
    for (std::size_t i = 0; i < c.rows.size(); ++i)
        for (std::size_t j = 0; j < c.cols.size(); ++j) {
            const auto nij = c.table[i][j];
            if (nij == 0) continue;
            const double x = static_cast<double>(nij);
            mi += x / n * std::log(n * x / (static_cast<double>(c.rows[i]) * static_cast<double>(c.cols[j])));
        }
    return std::clamp(mi / (0.5 * (ha + hb)), 0.0, 1.0);
}

double ari(std::span<const int> a, std::span<const int> b) {
    if (a.size() < 2 && a.size() == b.size()) throw ArgumentError("ari: needs at least two labels");
    const Contingency c = contingency(a, b);
    std::int64_t index = 0, sum_a = 0, sum_b = 0;
    for (const auto& row : c.table)
        for (auto v : row) index += pairs(v);
    for (auto v : c.rows) sum_a += pairs(v);
    for (auto v : c.cols) sum_b += pairs(v);
    // (index - sum_a sum_b / total) / ((sum_a + sum_b) / 2 - sum_a sum_b / total), scaled by
    // 2 total so both sides stay integral and a single division rounds the result.
    using Wide = __int128;
    const Wide total = pairs(c.n);
    const Wide num = 2 * (Wide{index} * total - Wide{sum_a} * sum_b);
    const Wide den = Wide{sum_a + sum_b} * total - 2 * Wide{sum_a} * sum_b;
    if (den == 0) return same_partition(c) ? 1.0 : 0.0;
    return static_cast<double>(num) / static_cast<double>(den);
}

}  // namespace rgc
