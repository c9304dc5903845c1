#include <cmath>
#include <random>
#include <set>

#include "doctest.h"
#include "oracles.hpp"
#include "rgc/cluster.hpp"
#include "rgc/error.hpp"

using namespace rgc;

namespace {

std::vector<std::vector<int>> all_labelings(std::size_t n, int classes) {
    std::vector<std::vector<int>> out;
    std::vector<int> cur(n, 0);
    while (true) {
        out.push_back(cur);
        std::size_t i = 0;
        while (i < n && ++cur[i] == classes) cur[i++] = 0;
        if (i == n) break;
    }
    return out;
}

// Lowest WSS over every split of the points into two non-empty groups.
double best_two_split(const Matrix& x) {
    const std::size_t n = x.rows();
    double best = INFINITY;
    for (std::size_t mask = 1; mask + 1 < (std::size_t{1} << n); ++mask) {
        double total = 0.0;
        for (int side = 0; side < 2; ++side) {
            std::vector<double> mean(x.cols(), 0.0);
            double count = 0;
            for (std::size_t i = 0; i < n; ++i)
                if (((mask >> i) & 1) == static_cast<std::size_t>(side)) {
                    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(i, j);
                    ++count;
                }
            for (auto& m : mean) m /= count;
            for (std::size_t i = 0; i < n; ++i)
                if (((mask >> i) & 1) == static_cast<std::size_t>(side))
                    for (std::size_t j = 0; j < x.cols(); ++j) total += (x(i, j) - mean[j]) * (x(i, j) - mean[j]);
        }
        best = std::min(best, total);
    }
    return best;
}

Matrix blobs(std::size_t per, std::size_t k, double spread, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> nd(0.0, spread);
    Matrix x(per * k, 2);
    for (std::size_t i = 0; i < per * k; ++i) {
        x(i, 0) = 10.0 * static_cast<double>(i / per) + nd(rng);
        x(i, 1) = 5.0 * static_cast<double>((i / per) % 2) + nd(rng);
    }
    return x;
}

}  // namespace

TEST_SUITE("cluster") {

TEST_CASE("nmi and ari agree with the oracles on every small labeling") {
    for (std::size_t n = 1; n <= 6; ++n) {
        const auto labelings = all_labelings(n, 3);
        for (const auto& a : labelings)
            for (const auto& b : labelings) {
                REQUIRE(std::abs(nmi(a, b) - oracle::nmi(a, b)) < 1e-12);
                if (n >= 2) REQUIRE(std::abs(ari(a, b) - oracle::ari(a, b)) < 1e-12);
            }
    }
}

TEST_CASE("known metric values") {
    const std::vector<int> a{0, 0, 1, 1}, b{0, 1, 0, 1};
    CHECK(ari(a, b) == -0.5);
    CHECK(nmi(a, b) == 0.0);
    const std::vector<int> c{2, 2, 0, 0, 1, 1}, d{0, 0, 1, 1, 2, 2};
    CHECK(nmi(c, d) == 1.0);
    CHECK(ari(c, d) == 1.0);
}

TEST_CASE("metrics are symmetric and bounded") {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<int> lab(0, 4);
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<int> a(30), b(30);
        for (auto& v : a) v = lab(rng);
        for (auto& v : b) v = lab(rng);
        CHECK(nmi(a, b) == doctest::Approx(nmi(b, a)).epsilon(1e-14));
        CHECK(ari(a, b) == doctest::Approx(ari(b, a)).epsilon(1e-14));
        CHECK(nmi(a, b) >= 0.0);
        CHECK(nmi(a, b) <= 1.0);
        CHECK(ari(a, b) <= 1.0);
    }
}

TEST_CASE("metric argument checks") {
    CHECK_THROWS_AS(nmi(std::vector<int>{0, 1}, std::vector<int>{0}), ArgumentError);
    CHECK_THROWS_AS(ari(std::vector<int>{0}, std::vector<int>{0}), ArgumentError);
}

TEST_CASE("two-means reaches the enumerated optimum on separated data") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const Matrix x = blobs(4, 2, 0.5, seed);
        const auto r = kmeans(x, 2, seed);
        CHECK(std::abs(r.wss - best_two_split(x)) < 1e-9);
    }
}

TEST_CASE("two-means never beats the enumerated optimum") {
    std::mt19937_64 rng(21);
    int optimal = 0;
    for (int rep = 0; rep < 30; ++rep) {
        const Matrix x = oracle::random_matrix(8, 2, rng);
        const double best = best_two_split(x);
        const double got = kmeans(x, 2, static_cast<std::uint64_t>(rep)).wss;
        CHECK(got >= best - 1e-12);
        if (got <= best + 1e-9) ++optimal;
    }
    CHECK(optimal >= 25);
}

TEST_CASE("lloyd iterations never increase wss and end at a fixed point") {
    std::mt19937_64 rng(5);
    for (int rep = 0; rep < 20; ++rep) {
        const Matrix x = oracle::random_matrix(60, 3, rng);
        const auto r = kmeans(x, 5, static_cast<std::uint64_t>(rep));
        for (std::size_t i = 1; i < r.wss_history.size(); ++i)
            CHECK(r.wss_history[i] <= r.wss_history[i - 1] + 1e-12);
        CHECK(r.wss == doctest::Approx(wss(x, r)));
        for (std::size_t i = 0; i < x.rows(); ++i) {
            double own = oracle::euclid(x, i, r.centers, static_cast<std::size_t>(r.assignment[i]));
            for (std::size_t j = 0; j < 5; ++j) CHECK(own <= oracle::euclid(x, i, r.centers, j) + 1e-12);
        }
        for (std::size_t j = 0; j < 5; ++j) {
            std::vector<double> mean(3, 0.0);
            double count = 0;
            for (std::size_t i = 0; i < x.rows(); ++i)
                if (r.assignment[i] == static_cast<int>(j)) {
                    for (std::size_t c = 0; c < 3; ++c) mean[c] += x(i, c);
                    ++count;
                }
            REQUIRE(count > 0);
            for (std::size_t c = 0; c < 3; ++c) CHECK(r.centers(j, c) == doctest::Approx(mean[c] / count));
        }
    }
}

TEST_CASE("kmeans recovers separated blobs") {
    const Matrix x = blobs(30, 4, 0.5, 2);
    std::vector<int> truth(120);
    for (std::size_t i = 0; i < 120; ++i) truth[i] = static_cast<int>(i / 30);
    const auto r = kmeans(x, 4, 7);
    CHECK(nmi(truth, r.assignment) == 1.0);
    CHECK(r.k == 4);
}

TEST_CASE("kmeans is deterministic per seed") {
    std::mt19937_64 rng(9);
    const Matrix x = oracle::random_matrix(50, 4, rng);
    const auto a = kmeans(x, 6, 3), b = kmeans(x, 6, 3);
    CHECK(a.assignment == b.assignment);
    CHECK(a.centers == b.centers);
    CHECK(a.wss_history == b.wss_history);
}

TEST_CASE("kmeans edge cases") {
    std::mt19937_64 rng(1);
    const Matrix x = oracle::random_matrix(6, 2, rng);
    CHECK(kmeans(x, 6, 0).wss == doctest::Approx(0.0));
    const auto one = kmeans(x, 1, 0);
    CHECK(std::set<int>(one.assignment.begin(), one.assignment.end()).size() == 1);
    const Matrix same(5, 2, 1.0);
    const auto r = kmeans(same, 3, 0);
    CHECK(r.wss == 0.0);
    CHECK(r.centers.all_finite());
    CHECK_THROWS_AS(kmeans(x, 0, 0), ArgumentError);
    CHECK_THROWS_AS(kmeans(x, 7, 0), ArgumentError);
}

}
