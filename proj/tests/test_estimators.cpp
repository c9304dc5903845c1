#include <random>

#include "doctest.h"
#include "rgc/error.hpp"
#include "rgc/estimators.hpp"
#include "rgc/trainer.hpp"

using namespace rgc;

namespace {

// Largest wss[i-1] - 2 wss[i] + wss[i+1], first occurrence wins.
int knee_oracle(const std::vector<int>& ks, const std::vector<double>& w) {
    int best_k = ks[1];
    double best = w[0] - 2 * w[1] + w[2];
    for (std::size_t i = 2; i + 1 < w.size(); ++i) {
        const double c = w[i - 1] - 2 * w[i] + w[i + 1];
        if (c > best) {
            best = c;
            best_k = ks[i];
        }
    }
    return best_k;
}

RunConfig small_config() {
    RunConfig c;
    c.synth.blocks = 3;
    c.synth.nodes_per_block = 12;
    c.synth.feature_dim = 6;
    c.latent_dim = 6;
    c.encoder_epochs = 15;
    c.buffer_capacity = 4;
    c.quality_epochs = 3;
    c.quality_hidden = 4;
    c.max_k = 5;
    c.kmeans_restarts = 2;
    return c;
}

}  // namespace

TEST_SUITE("estimators") {

TEST_CASE("thumb rule") {
    CHECK(thumb_rule(200) == 10);
    CHECK(thumb_rule(131) == 8);
    CHECK(thumb_rule(2708) == 37);
    CHECK(thumb_rule(2) == 2);
    CHECK_THROWS_AS(thumb_rule(1), ArgumentError);
}

TEST_CASE("knee of a textbook curve") {
    const std::vector<int> ks{2, 3, 4, 5, 6, 7};
    const std::vector<double> w{100, 60, 20, 18, 17, 16};
    const auto k = detect_knee(ks, w);
    CHECK(k.k == 4);
    CHECK(k.distinct);
}

TEST_CASE("knee agrees with the second-difference oracle") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t len = 3 + rep % 8;
        std::vector<int> ks;
        std::vector<double> w;
        for (std::size_t i = 0; i < len; ++i) {
            ks.push_back(static_cast<int>(i) + 2);
            w.push_back(u(rng));
        }
        CHECK(detect_knee(ks, w).k == knee_oracle(ks, w));
    }
}

TEST_CASE("flat and short curves have no distinct knee") {
    const std::vector<int> ks{2, 3, 4, 5};
    CHECK_FALSE(detect_knee(ks, std::vector<double>{5, 4, 3, 2}).distinct);
    CHECK_FALSE(detect_knee(ks, std::vector<double>{1, 1, 1, 1}).distinct);
    const auto short_curve = detect_knee(std::vector<int>{2, 3}, std::vector<double>{9, 1});
    CHECK(short_curve.k == 2);
    CHECK_FALSE(short_curve.distinct);
    CHECK_THROWS_AS(detect_knee(ks, std::vector<double>{1, 2}), ArgumentError);
}

TEST_CASE("elbow sweep runs one pinned training per K") {
    const RunConfig cfg = small_config();
    const auto g = load_dataset(cfg);
    const auto curve = elbow_sweep(g, cfg, 5);
    CHECK(curve.ks == std::vector<int>{2, 3, 4, 5});
    REQUIRE(curve.wss_values.size() == 4);
    CHECK(curve.wall_times.size() == 4);
    CHECK(curve.knee == knee_oracle(curve.ks, curve.wss_values));
    RunConfig pinned = cfg;
    pinned.fixed_k = 3;
    CHECK(curve.wss_values[1] == rgc_train(g, pinned).summary.wss);
    CHECK_THROWS_AS(elbow_sweep(g, cfg, 2), ArgumentError);
    CHECK_THROWS_AS(elbow_sweep(g, cfg, 37), ArgumentError);
}

}
