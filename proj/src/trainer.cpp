#include "rgc/trainer.hpp"

#include <chrono>
#include <map>
#include <memory>
#include <random>

#include "rgc/encoder.hpp"
#include "rgc/error.hpp"
#include "rgc/objectives.hpp"
#include "rgc/rl.hpp"

namespace rgc {

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

namespace {

enum Stream : std::uint64_t { kEncoderInit = 1, kQualityInit = 2, kPolicy = 3, kClustering = 1000 };

// K-Means on one embedding snapshot, memoized by K so that clustering the same
// snapshot twice at the same K costs nothing and gives the same answer.
class SnapshotClusterer {
public:
    SnapshotClusterer(const Matrix& z, std::uint64_t seed, KMeansOptions opts) : z_(z), seed_(seed), opts_(opts) {}

    const ClusterResult& at(std::size_t k) {
        auto it = cache_.find(k);
        if (it == cache_.end()) it = cache_.emplace(k, kmeans(z_, k, seed_, opts_)).first;
        return it->second;
    }

private:
    const Matrix& z_;
    std::uint64_t seed_;
    KMeansOptions opts_;
    std::map<std::size_t, ClusterResult> cache_;
};

void score(const std::optional<std::vector<int>>& labels, const std::vector<int>& pred, std::optional<double>& nmi_out,
           std::optional<double>& ari_out) {
    if (!labels) return;
    nmi_out = nmi(*labels, pred);
    if (pred.size() >= 2) ari_out = ari(*labels, pred);
}

}  // namespace

RunRecord rgc_train(const AttributedGraph& g, const RunConfig& config) {
    config.validate();
    const bool learn_k = config.fixed_k == 0;
    const std::size_t max_k = config.max_k;
    if (g.n < 2) throw ConfigError("graph needs at least two nodes");
    if (learn_k && max_k > g.n) throw ConfigError("key 'max_k': exceeds the node count " + std::to_string(g.n));
    if (!learn_k && config.fixed_k > g.n) throw ConfigError("key 'fixed_k': exceeds the node count");

    const auto start = std::chrono::steady_clock::now();
    const KMeansOptions kopts{config.kmeans_max_iters, config.kmeans_restarts};
    const PolicySchedule schedule{config.epsilon_initial, config.epsilon_final, config.encoder_epochs, config.gamma};

    RunRecord rec;
    rec.config = config;
    rec.summary.seed = config.seed;

    const FilteredFeatures smoothed = laplacian_smooth(g, config.hops);
    EncoderParams encoder =
        init_encoder(g.dim, config.latent_dim, derive_seed(config.seed, kEncoderInit), config.encoder_hidden);
    QualityNetwork quality =
        init_quality(config.latent_dim, config.quality_hidden, max_k, derive_seed(config.seed, kQualityInit));
    std::mt19937_64 policy_rng(derive_seed(config.seed, kPolicy));
    Adam encoder_opt(config.lr_encoder);
    ReplayBuffer buffer(config.buffer_capacity);

    auto clustering_seed = [&](std::size_t epoch) { return derive_seed(config.seed, kClustering + epoch); };

    std::size_t k_prev = learn_k ? static_cast<std::size_t>(std::uniform_int_distribution<int>(
                                       kMinClusters, static_cast<int>(max_k))(policy_rng))
                                 : config.fixed_k;

    struct Pending {
        StatePtr state;
        int action;
        double reward;
    };
    std::optional<Pending> pending;

    auto complete_pending = [&](const StatePtr& next) {
        if (!pending) return;
        buffer.push(Experience{pending->state, pending->action, next, pending->reward}, max_k);
        ++rec.summary.experiences;
        pending.reset();
        if (buffer.full()) {
            rec.quality_losses.push_back(
                train_quality(buffer, quality, config.quality_epochs, config.lr_quality, config.gamma));
            ++rec.summary.quality_updates;
        }
    };

    rec.epochs.reserve(config.encoder_epochs);
    for (std::size_t t = 0; t < config.encoder_epochs; ++t) {
        Tape tape;
        EmbeddingVars emb = encode(tape, smoothed, encoder);
        const Matrix& z = emb.fused.value();
        SnapshotClusterer clusterer(z, clustering_seed(t), kopts);

        EpochEntry entry;
        entry.epoch = t;
        entry.epsilon = schedule.epsilon(t);
        std::size_t k_t = config.fixed_k;
        StatePtr state;
        if (learn_k) {
            state = std::make_shared<const ClusterState>(ClusterState{z, clusterer.at(k_prev).centers, t});
            complete_pending(state);
            entry.quality = quality_forward(*state, quality);
            k_t = static_cast<std::size_t>(select_action(entry.quality, entry.epsilon, policy_rng));
        }
        const ClusterResult& action = clusterer.at(k_t);
        entry.k = static_cast<int>(k_t);
        entry.reward = reward(z, action.centers);

        EncoderLoss loss = encoder_loss(emb, action.centers, config.alpha, config.temperature);
        entry.loss_total = loss.total.scalar();
        entry.loss_contrastive = loss.contrastive.scalar();
        entry.loss_clustering = loss.clustering.scalar();
        score(g.labels, action.assignment, entry.nmi, entry.ari);

        encoder.params.zero_grad();
        tape.backward(loss.total);
        encoder_opt.step(encoder.params);

        if (learn_k) pending = Pending{state, entry.k, entry.reward};
        k_prev = k_t;
        rec.epochs.push_back(std::move(entry));
    }

    // State after the last encoder step.
    const std::size_t t_end = config.encoder_epochs;
    rec.final_embedding = encode(smoothed, encoder).fused;
    SnapshotClusterer final_clusterer(rec.final_embedding, clustering_seed(t_end), kopts);
    std::size_t k_final = config.fixed_k;
    if (learn_k) {
        auto final_state = std::make_shared<const ClusterState>(
            ClusterState{rec.final_embedding, final_clusterer.at(k_prev).centers, t_end});
        complete_pending(final_state);
        k_final = static_cast<std::size_t>(action_to_k(greedy_action(quality_forward(*final_state, quality))));
    }
    rec.final_clustering = final_clusterer.at(k_final);
    rec.summary.k_final = static_cast<int>(k_final);
    rec.summary.wss = rec.final_clustering.wss;
    score(g.labels, rec.final_clustering.assignment, rec.summary.nmi, rec.summary.ari);
    rec.summary.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return rec;
}

}  // namespace rgc
