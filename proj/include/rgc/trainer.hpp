#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "rgc/cluster.hpp"
#include "rgc/config.hpp"
#include "rgc/graph.hpp"

namespace rgc {

struct EpochEntry {
    std::size_t epoch = 0;
    double epsilon = 0.0;
    int k = 0;
    double reward = 0.0;
    double loss_total = 0.0;
    double loss_contrastive = 0.0;
    double loss_clustering = 0.0;
    std::optional<double> nmi;
    std::optional<double> ari;
    // Empty when the controller is disabled.
    std::vector<double> quality;
};

struct RunSummary {
    int k_final = 0;
    std::optional<double> nmi;
    std::optional<double> ari;
    double wss = 0.0;
    std::uint64_t seed = 0;
    std::size_t quality_updates = 0;
    std::size_t experiences = 0;
    // Not serialized with the record (see write_record).
    double wall_seconds = 0.0;
};

struct RunRecord {
    RunConfig config;
    std::vector<EpochEntry> epochs;
    RunSummary summary;
    ClusterResult final_clustering;
    Matrix final_embedding;
    // Loss traces of every quality-network training round, in order.
    std::vector<std::vector<double>> quality_losses;
};

// The unified loop: encode, cluster at the previous K to form S_t, choose K_t,
// re-cluster, reward, take one encoder step on the loss built from the K_t
// centers, and replay experiences into the quality network whenever the buffer
// fills. Deterministic for a fixed config.
RunRecord rgc_train(const AttributedGraph& g, const RunConfig& config);

// Mixes a run seed with a stream id (SplitMix64 finalizer).
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

// record.json (full record), epochs.csv (per-epoch table), assignment.txt,
// and embedding.txt when the config asks for it. Wall time goes to timing.json
// so the other files are byte-identical across repeated runs.
void write_record(const RunRecord& record, const std::filesystem::path& dir);
std::string record_json(const RunRecord& record);
std::string epochs_csv(const RunRecord& record);

struct MetricStats {
    double mean = 0.0;
    double std = 0.0;  // sample standard deviation, 0 for a single value
    std::size_t count = 0;
};

MetricStats mean_std(std::span<const double> values);

struct Aggregate {
    MetricStats k_final;
    std::optional<MetricStats> nmi;
    std::optional<MetricStats> ari;
    MetricStats wall_seconds;
    std::vector<std::uint64_t> seeds;
};

// Mean and sample std across seeds. Records must share every config key but
// the seed; throws ArgumentError otherwise.
Aggregate aggregate(std::span<const RunRecord> records);
std::string aggregate_json(const Aggregate& a);
// "mean±std" with two decimals, scaled by `factor` (100 for percentages).
std::string format_mean_std(const MetricStats& s, double factor = 1.0);

}  // namespace rgc
