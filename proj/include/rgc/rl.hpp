#pragma once

// Cluster-number controller: states, the quality network, the policy, the
// clustering-oriented reward and experience replay.

#include <cstdint>
#include <functional>
#include <memory>
#include <random>
#include <span>
#include <vector>

#include "rgc/ndiff.hpp"

namespace rgc {

// S_t: node embeddings and the centers of their current clustering.
struct ClusterState {
    Matrix z;
    Matrix c;
    std::size_t epoch = 0;
};

using StatePtr = std::shared_ptr<const ClusterState>;

// Action index a in [0, max_k - 2] stands for cluster number a + 2.
inline constexpr int kMinClusters = 2;
inline int action_to_k(std::size_t action) { return static_cast<int>(action) + kMinClusters; }
inline std::size_t k_to_action(int k) { return static_cast<std::size_t>(k - kMinClusters); }

// Weights "lin_z" (d x h), "lin_c" (d x h) and "lin_out" (2h x (max_k - 1)).
struct QualityNetwork {
    ParamSet params;
    std::size_t latent_dim = 0;
    std::size_t hidden_dim = 0;
    std::size_t max_k = 0;

    std::size_t action_count() const { return max_k - 1; }
};

QualityNetwork init_quality(std::size_t latent_dim, std::size_t hidden_dim, std::size_t max_k, std::uint64_t seed);

// q = softmax([mean_rows(relu(std(Z Lz))), mean_rows(relu(std(C Lc)))] Lout), a 1 x (max_k - 1) row.
Var quality_forward(Tape& tape, const ClusterState& state, QualityNetwork& net);
std::vector<double> quality_forward(const ClusterState& state, QualityNetwork& net);

struct PolicySchedule {
    double epsilon_initial = 0.5;
    double epsilon_final = 1.0;
    std::size_t total_epochs = 400;
    double discount = 0.1;

    void validate() const;
    // Linear from epsilon_initial at epoch 0 to epsilon_final at epoch total_epochs - 1.
    double epsilon(std::size_t epoch) const;
};

// Index of the largest quality; ties go to the smallest index.
std::size_t greedy_action(std::span<const double> q);

// With probability `epsilon` the greedy cluster number, otherwise one drawn
// uniformly from [2, q.size() + 1]. Returns the cluster number, not the index.
int select_action(std::span<const double> q, double epsilon, std::mt19937_64& rng);
int select_action(std::span<const double> q, const PolicySchedule& schedule, std::size_t epoch,
                  std::mt19937_64& rng);

// -(1/N) sum_i min_j |z_i - c_j| + (1/K^2) sum_i sum_j |c_i - c_j|, Euclidean.
double reward(const Matrix& z, const Matrix& centers);

struct Experience {
    StatePtr state;
    int action = kMinClusters;  // cluster number
    StatePtr next_state;
    double reward = 0.0;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity);

    // Throws ArgumentError when full or when the experience is out of range.
    void push(Experience e, std::size_t max_k);
    bool full() const { return items_.size() >= capacity_; }
    void clear() { items_.clear(); }
    std::size_t size() const { return items_.size(); }
    std::size_t capacity() const { return capacity_; }
    std::span<const Experience> items() const { return items_; }

private:
    std::size_t capacity_;
    std::vector<Experience> items_;
};

// Maps a state to a 1 x A row of action qualities recorded on the tape.
using QualityModel = std::function<Var(Tape&, const ClusterState&)>;

// Mean over the buffer of (R + gamma * max q(S') - q(S)[a])^2. The target
// R + gamma * max q(S') is computed from values and carries no gradient.
Var q_loss(Tape& tape, std::span<const Experience> buffer, const QualityModel& model, double gamma);
Var q_loss(Tape& tape, std::span<const Experience> buffer, QualityNetwork& net, double gamma);

// `epochs` full-buffer Adam steps on q_loss. Returns the loss observed before
// each step and clears the buffer.
std::vector<double> train_quality(ReplayBuffer& buffer, QualityNetwork& net, std::size_t epochs, double lr,
                                  double gamma);

}  // namespace rgc
