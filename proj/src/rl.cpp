#include "rgc/rl.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "rgc/error.hpp"

namespace rgc {

QualityNetwork init_quality(std::size_t latent_dim, std::size_t hidden_dim, std::size_t max_k, std::uint64_t seed) {
    if (latent_dim < 1 || hidden_dim < 1) throw ArgumentError("quality network dimensions must be >= 1");
    if (max_k < 3) throw ArgumentError("max_k must be >= 3");
    QualityNetwork net;
    net.latent_dim = latent_dim;
    net.hidden_dim = hidden_dim;
    net.max_k = max_k;
    std::mt19937_64 rng(seed);
    net.params.add("lin_z", init_uniform(latent_dim, hidden_dim, latent_dim, rng));
    net.params.add("lin_c", init_uniform(latent_dim, hidden_dim, latent_dim, rng));
    net.params.add("lin_out", init_uniform(2 * hidden_dim, max_k - 1, 2 * hidden_dim, rng));
    return net;
}

Var quality_forward(Tape& tape, const ClusterState& state, QualityNetwork& net) {
    if (state.z.cols() != net.latent_dim || state.c.cols() != net.latent_dim)
        throw DimensionError("quality_forward: state width does not match the network");
    if (state.z.rows() == 0 || state.c.rows() == 0) throw DimensionError("quality_forward: empty state");
    Var nodes = mean_rows(relu(row_standardize(matmul(tape.constant(state.z), tape.param(net.params, "lin_z")))));
    Var clusters =
        mean_rows(relu(row_standardize(matmul(tape.constant(state.c), tape.param(net.params, "lin_c")))));
    return softmax_rows(matmul(concat_rows(nodes, clusters), tape.param(net.params, "lin_out")));
}

std::vector<double> quality_forward(const ClusterState& state, QualityNetwork& net) {
    Tape tape;
    return quality_forward(tape, state, net).value().data();
}

void PolicySchedule::validate() const {
    if (!(epsilon_initial >= 0.0 && epsilon_initial <= 1.0)) throw ArgumentError("epsilon_initial must lie in [0, 1]");
    if (!(epsilon_final >= 0.0 && epsilon_final <= 1.0)) throw ArgumentError("epsilon_final must lie in [0, 1]");
    if (epsilon_final < epsilon_initial) throw ArgumentError("epsilon must not decrease over training");
    if (!(discount >= 0.0 && discount <= 1.0)) throw ArgumentError("discount must lie in [0, 1]");
    if (total_epochs < 1) throw ArgumentError("schedule needs at least one epoch");
}

double PolicySchedule::epsilon(std::size_t epoch) const {
    if (total_epochs <= 1) return epsilon_initial;
    const double frac = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(total_epochs - 1));
    return epsilon_initial + (epsilon_final - epsilon_initial) * frac;
}

std::size_t greedy_action(std::span<const double> q) {
    if (q.empty()) throw ArgumentError("empty quality vector");
    return static_cast<std::size_t>(std::max_element(q.begin(), q.end()) - q.begin());
}

int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng) {
    if (q.empty()) throw ArgumentError("empty quality vector");
    std::uniform_real_distribution<double> coin(0.0, 1.0);
    if (coin(rng) < epsilon) return action_to_k(greedy_action(q));
    std::uniform_int_distribution<std::size_t> pick(0, q.size() - 1);
    return action_to_k(pick(rng));
}

int select_action(std::span<const double> q, const PolicySchedule& schedule, std::size_t epoch,
                  std::mt19937_64& rng) {
    return select_action(q, schedule.epsilon(epoch), rng);
}

double reward(const Matrix& z, const Matrix& centers) {
    const std::size_t k = centers.rows();
    if (k < 1) throw ArgumentError("reward: need at least one center");
    if (z.cols() != centers.cols()) throw DimensionError("reward: embedding/center widths differ");
    double cohesion = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double best = distance(z.row(i), centers.row(0));
        for (std::size_t j = 1; j < k; ++j) best = std::min(best, distance(z.row(i), centers.row(j)));
        cohesion += best;
    }
    double separation = 0.0;
    for (std::size_t i = 0; i < k; ++i)
        for (std::size_t j = 0; j < k; ++j)
            if (i != j) separation += distance(centers.row(i), centers.row(j));
    const double n = static_cast<double>(std::max<std::size_t>(z.rows(), 1));
    return -cohesion / n + separation / static_cast<double>(k * k);
}

ReplayBuffer::ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
    if (capacity < 1) throw ArgumentError("buffer capacity must be >= 1");
    items_.reserve(capacity);
}

void ReplayBuffer::push(Experience e, std::size_t max_k) {
    if (full()) throw ArgumentError("replay buffer is full");
    if (e.action < kMinClusters || static_cast<std::size_t>(e.action) > max_k)
        throw ArgumentError("experience action " + std::to_string(e.action) + " outside [2, " +
                            std::to_string(max_k) + "]");
    if (!std::isfinite(e.reward)) throw NumericError("experience reward is not finite");
    if (!e.state || !e.next_state) throw ArgumentError("experience without state");
    items_.push_back(std::move(e));
}

namespace {

// (q[index] - target)^2 as a 1x1 node.
Var squared_td_error(Var q, std::size_t index, double target) {
    const Matrix& v = q.value();
    if (v.rows() != 1 || index >= v.cols()) throw DimensionError("q_loss: action index outside the quality row");
    const double err = v(0, index) - target;
    return q.tape()->record(Matrix(1, 1, err * err), {q}, [index, err](const BackwardContext& c) {
        if (c.in_grads[0]) (*c.in_grads[0])(0, index) += 2.0 * err * c.out_grad(0, 0);
    });
}

}  // namespace

Var q_loss(Tape& tape, std::span<const Experience> buffer, const QualityModel& model, double gamma) {
    if (buffer.empty()) throw ArgumentError("q_loss: empty buffer");
    // Consecutive experiences share states (S_{t+1} of one is S_t of the next);
    // evaluate each distinct state once.
    std::map<const ClusterState*, Var> cache;
    auto eval = [&](const StatePtr& s) {
        auto it = cache.find(s.get());
        if (it == cache.end()) it = cache.emplace(s.get(), model(tape, *s)).first;
        return it->second;
    };
    Var total;
    bool first = true;
    for (const Experience& e : buffer) {
        const Matrix& next_q = eval(e.next_state).value();
        const double target =
            e.reward + gamma * *std::max_element(next_q.data().begin(), next_q.data().end());
        Var term = squared_td_error(eval(e.state), k_to_action(e.action), target);
        total = first ? term : add(total, term);
        first = false;
    }
    return scale(total, 1.0 / static_cast<double>(buffer.size()));
}

Var q_loss(Tape& tape, std::span<const Experience> buffer, QualityNetwork& net, double gamma) {
    return q_loss(
        tape, buffer, [&net](Tape& t, const ClusterState& s) { return quality_forward(t, s, net); }, gamma);
}

std::vector<double> train_quality(ReplayBuffer& buffer, QualityNetwork& net, std::size_t epochs, double lr,
                                  double gamma) {
    std::vector<double> trace;
    if (epochs == 0) {
        buffer.clear();
        return trace;
    }
    if (buffer.size() == 0) throw ArgumentError("train_quality: empty buffer");
    Adam opt(lr);
    trace.reserve(epochs);
    for (std::size_t e = 0; e < epochs; ++e) {
        Tape tape;
        Var loss = q_loss(tape, buffer.items(), net, gamma);
        trace.push_back(loss.scalar());
        net.params.zero_grad();
        tape.backward(loss);
        opt.step(net.params);
    }
    buffer.clear();
    return trace;
}

}  // namespace rgc
