#include <cmath>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "rgc/error.hpp"
#include "rgc/rl.hpp"

using namespace rgc;

namespace {

// Layer-by-layer evaluation of the quality network with plain loops.
std::vector<double> quality_oracle(const ClusterState& s, const QualityNetwork& net) {
    auto branch = [](const Matrix& x, const Matrix& w) {
        const Matrix h = oracle::naive_matmul(x, w);
        std::vector<double> pooled(h.cols(), 0.0);
        for (std::size_t i = 0; i < h.rows(); ++i) {
            double mean = 0.0, var = 0.0;
            for (std::size_t j = 0; j < h.cols(); ++j) mean += h(i, j) / static_cast<double>(h.cols());
            for (std::size_t j = 0; j < h.cols(); ++j) var += (h(i, j) - mean) * (h(i, j) - mean) / static_cast<double>(h.cols());
            for (std::size_t j = 0; j < h.cols(); ++j)
                pooled[j] += std::max(0.0, (h(i, j) - mean) / std::sqrt(var + 1e-8)) / static_cast<double>(h.rows());
        }
        return pooled;
    };
    std::vector<double> feat = branch(s.z, net.params.at("lin_z").value);
    const auto c = branch(s.c, net.params.at("lin_c").value);
    feat.insert(feat.end(), c.begin(), c.end());
    const Matrix& w = net.params.at("lin_out").value;
    std::vector<double> logits(w.cols(), 0.0);
    for (std::size_t j = 0; j < w.cols(); ++j)
        for (std::size_t i = 0; i < feat.size(); ++i) logits[j] += feat[i] * w(i, j);
    double top = logits[0], total = 0.0;
    for (double v : logits) top = std::max(top, v);
    for (double& v : logits) total += (v = std::exp(v - top));
    for (double& v : logits) v /= total;
    return logits;
}

StatePtr random_state(std::size_t n, std::size_t k, std::size_t d, std::mt19937_64& rng, std::size_t epoch = 0) {
    auto s = std::make_shared<ClusterState>();
    s->z = oracle::random_matrix(n, d, rng);
    s->c = oracle::random_matrix(k, d, rng);
    s->epoch = epoch;
    return s;
}

// Quality rows looked up by state epoch; the row for epoch 0 is trainable.
QualityModel table_model(ParamSet& ps, std::vector<Matrix> rows) {
    return [&ps, rows](Tape& t, const ClusterState& s) {
        if (s.epoch == 0) return t.param(ps, "row");
        return t.constant(rows.at(s.epoch));
    };
}

}  // namespace

TEST_SUITE("rl") {

TEST_CASE("reward matches the double loop") {
    std::mt19937_64 rng(1);
    for (int rep = 0; rep < 30; ++rep) {
        const Matrix z = oracle::random_matrix(20, 3, rng), c = oracle::random_matrix(1 + rep % 6, 3, rng);
        CHECK(std::abs(reward(z, c) - oracle::reward(z, c)) < 1e-12);
    }
}

TEST_CASE("reward is translation invariant and positively homogeneous") {
    std::mt19937_64 rng(2);
    std::uniform_real_distribution<double> scale_dist(0.1, 10.0);
    for (int rep = 0; rep < 50; ++rep) {
        Matrix z = oracle::random_matrix(15, 4, rng), c = oracle::random_matrix(4, 4, rng);
        const double base = reward(z, c);
        const Matrix shift = oracle::random_matrix(1, 4, rng, -5, 5);
        Matrix zs = z, cs = c;
        for (std::size_t i = 0; i < zs.rows(); ++i)
            for (std::size_t j = 0; j < 4; ++j) zs(i, j) += shift(0, j);
        for (std::size_t i = 0; i < cs.rows(); ++i)
            for (std::size_t j = 0; j < 4; ++j) cs(i, j) += shift(0, j);
        CHECK(std::abs(reward(zs, cs) - base) < 1e-9);
        const double a = scale_dist(rng);
        for (double& v : z.data()) v *= a;
        for (double& v : c.data()) v *= a;
        CHECK(std::abs(reward(z, c) - a * base) < 1e-9);
    }
}

TEST_CASE("two coincident clusters give half their distance") {
    for (double delta : {3.0, 0.7, 1e-3}) {
        const Matrix c{{0.0, 0.0}, {delta, 0.0}};
        CHECK(reward(c, c) == delta / 2);
    }
    const Matrix one{{1.0, 1.0}};
    CHECK(reward(Matrix{{1.0, 1.0}, {4.0, 5.0}}, one) == -2.5);
}

TEST_CASE("quality network matches the layer-by-layer evaluation") {
    std::mt19937_64 rng(3);
    auto net = init_quality(5, 7, 10, 4);
    for (int rep = 0; rep < 10; ++rep) {
        const auto s = random_state(12, 2 + rep % 8, 5, rng);
        const auto q = quality_forward(*s, net);
        const auto ref = quality_oracle(*s, net);
        REQUIRE(q.size() == 9);
        double total = 0.0;
        for (std::size_t a = 0; a < q.size(); ++a) {
            CHECK(std::abs(q[a] - ref[a]) < 1e-12);
            total += q[a];
        }
        CHECK(std::abs(total - 1.0) < 1e-12);
    }
}

TEST_CASE("quality network is invariant to node and center order") {
    std::mt19937_64 rng(5);
    auto net = init_quality(4, 6, 6, 1);
    const auto s = random_state(8, 3, 4, rng);
    ClusterState r = *s;
    for (std::size_t j = 0; j < 4; ++j) {
        std::swap(r.z(0, j), r.z(7, j));
        std::swap(r.c(0, j), r.c(2, j));
    }
    const auto a = quality_forward(*s, net), b = quality_forward(r, net);
    for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i] == doctest::Approx(b[i]).epsilon(1e-13));
}

TEST_CASE("quality network gradient") {
    std::mt19937_64 rng(6);
    auto net = init_quality(4, 5, 6, 2);
    ReplayBuffer buf(6);
    for (int i = 0; i < 6; ++i)
        buf.push({random_state(7, 3, 4, rng), 2 + i % 5, random_state(7, 4, 4, rng), 0.3 * i}, 6);
    CHECK(grad_check([&](Tape& t, ParamSet&) { return q_loss(t, buf.items(), net, 0.0); }, net.params, 1e-5) <
          1e-6);
}

TEST_CASE("init is seeded") {
    CHECK(init_quality(4, 3, 5, 1).params == init_quality(4, 3, 5, 1).params);
    CHECK_FALSE(init_quality(4, 3, 5, 1).params == init_quality(4, 3, 5, 2).params);
    CHECK_THROWS_AS(init_quality(4, 3, 2, 1), ArgumentError);
}

TEST_CASE("action mapping") {
    CHECK(action_to_k(0) == 2);
    CHECK(k_to_action(10) == 8);
}

TEST_CASE("epsilon schedule is linear to the last epoch") {
    PolicySchedule s;
    s.epsilon_initial = 0.5;
    s.total_epochs = 401;
    CHECK(s.epsilon(0) == 0.5);
    CHECK(s.epsilon(200) == doctest::Approx(0.75));
    CHECK(s.epsilon(400) == 1.0);
    CHECK(s.epsilon(1000) == 1.0);
    s.epsilon_final = 0.4;
    CHECK_THROWS_AS(s.validate(), ArgumentError);
}

TEST_CASE("greedy ties go to the lowest index") {
    const std::vector<double> q{0.1, 0.3, 0.3, 0.2};
    CHECK(greedy_action(q) == 1);
    std::mt19937_64 rng(0);
    for (int i = 0; i < 100; ++i) CHECK(select_action(q, 1.0, rng) == 3);
}

TEST_CASE("random branch is uniform over the actions") {
    std::vector<double> q(9, 0.0);
    q[4] = 1.0;
    std::mt19937_64 rng(11);
    std::vector<double> counts(9, 0.0);
    const int draws = 9000;
    for (int i = 0; i < draws; ++i) {
        const int k = select_action(q, 0.0, rng);
        REQUIRE(k >= 2);
        REQUIRE(k <= 10);
        counts[k_to_action(k)] += 1;
    }
    double chi2 = 0.0;
    for (double c : counts) chi2 += (c - 1000.0) * (c - 1000.0) / 1000.0;
    // 99.9% quantile of chi-square with 8 degrees of freedom.
    CHECK(chi2 < 26.12);
}

TEST_CASE("greedy frequency at epsilon 0.7") {
    std::vector<double> q{0.05, 0.1, 0.4, 0.05, 0.1, 0.1, 0.05, 0.1, 0.05};
    std::mt19937_64 rng(13);
    int hits = 0;
    for (int i = 0; i < 10000; ++i) hits += select_action(q, 0.7, rng) == 4;
    CHECK(std::abs(hits / 10000.0 - (0.7 + 0.3 / 9)) < 0.015);
}

TEST_CASE("replay buffer validation") {
    std::mt19937_64 rng(1);
    ReplayBuffer buf(2);
    const auto s = random_state(3, 2, 2, rng);
    CHECK_THROWS_AS(buf.push({s, 1, s, 0.0}, 10), ArgumentError);
    CHECK_THROWS_AS(buf.push({s, 11, s, 0.0}, 10), ArgumentError);
    CHECK_THROWS_AS(buf.push({s, 3, nullptr, 0.0}, 10), ArgumentError);
    CHECK_THROWS_AS(buf.push({s, 3, s, NAN}, 10), NumericError);
    buf.push({s, 2, s, 0.0}, 10);
    buf.push({s, 10, s, 0.0}, 10);
    CHECK(buf.full());
    CHECK_THROWS_AS(buf.push({s, 3, s, 0.0}, 10), ArgumentError);
    CHECK_THROWS_AS(ReplayBuffer(0), ArgumentError);
}

TEST_CASE("exact TD target gives zero loss") {
    ParamSet ps;
    ps.add("row", Matrix{{0.2, 1.05, 0.1}});
    auto model = table_model(ps, {Matrix(), Matrix{{0.5, 0.1, 0.3}}});
    auto s = std::make_shared<ClusterState>(ClusterState{Matrix(1, 1), Matrix(1, 1), 0});
    auto next = std::make_shared<ClusterState>(ClusterState{Matrix(1, 1), Matrix(1, 1), 1});
    const std::vector<Experience> buf{{s, 3, next, 1.0}};
    Tape t;
    CHECK(q_loss(t, buf, model, 0.1).scalar() == 0.0);
}

TEST_CASE("q loss is the mean squared TD error") {
    ParamSet ps;
    ps.add("row", Matrix{{0.2, 0.5, 0.3}});
    auto model = table_model(ps, {Matrix(), Matrix{{0.1, 0.7, 0.2}}, Matrix{{0.6, 0.3, 0.1}}});
    auto s0 = std::make_shared<ClusterState>(ClusterState{Matrix(1, 1), Matrix(1, 1), 0});
    auto s1 = std::make_shared<ClusterState>(ClusterState{Matrix(1, 1), Matrix(1, 1), 1});
    auto s2 = std::make_shared<ClusterState>(ClusterState{Matrix(1, 1), Matrix(1, 1), 2});
    const std::vector<Experience> buf{{s0, 2, s1, 1.0}, {s1, 4, s2, -0.5}, {s0, 3, s2, 0.25}};
    const double e1 = 0.2 - (1.0 + 0.1 * 0.7);
    const double e2 = 0.2 - (-0.5 + 0.1 * 0.6);
    const double e3 = 0.5 - (0.25 + 0.1 * 0.6);
    Tape t;
    Var loss = q_loss(t, buf, model, 0.1);
    CHECK(loss.scalar() == doctest::Approx((e1 * e1 + e2 * e2 + e3 * e3) / 3));
    t.backward(loss);
    // The target carries no gradient: only the chosen entries of the trainable row move.
    CHECK(ps.at("row").grad(0, 0) == doctest::Approx(2 * e1 / 3));
    CHECK(ps.at("row").grad(0, 1) == doctest::Approx(2 * e3 / 3));
    CHECK(ps.at("row").grad(0, 2) == 0.0);
}

TEST_CASE("shared and copied states give the same loss") {
    std::mt19937_64 rng(7);
    auto net = init_quality(3, 4, 5, 0);
    std::vector<StatePtr> chain;
    for (int i = 0; i < 6; ++i) chain.push_back(random_state(5, 2 + i % 3, 3, rng, i));
    std::vector<Experience> shared, copied;
    for (int i = 0; i < 5; ++i) {
        shared.push_back({chain[i], 2 + i % 4, chain[i + 1], 0.1 * i});
        copied.push_back({std::make_shared<ClusterState>(*chain[i]), 2 + i % 4,
                          std::make_shared<ClusterState>(*chain[i + 1]), 0.1 * i});
    }
    Tape a, b;
    CHECK(q_loss(a, shared, net, 0.1).scalar() == q_loss(b, copied, net, 0.1).scalar());
    CHECK(a.node_count() < b.node_count());
}

TEST_CASE("training lowers the loss and empties the buffer") {
    std::mt19937_64 rng(8);
    auto net = init_quality(4, 8, 10, 3);
    ReplayBuffer buf(50);
    std::uniform_int_distribution<int> k(2, 10);
    std::uniform_real_distribution<double> r(-1.0, 1.0);
    for (int i = 0; i < 50; ++i) buf.push({random_state(10, 3, 4, rng), k(rng), random_state(10, 3, 4, rng), r(rng)}, 10);
    const auto trace = train_quality(buf, net, 30, 1e-3, 0.1);
    CHECK(trace.size() == 30);
    CHECK(trace.back() < trace.front());
    CHECK(buf.size() == 0);
    CHECK_THROWS_AS(train_quality(buf, net, 5, 1e-3, 0.1), ArgumentError);
}

}
