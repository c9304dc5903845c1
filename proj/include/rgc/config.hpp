#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "rgc/graph.hpp"

namespace rgc {

// Every tunable of a run. Defaults follow the published training protocol
// where one exists; the rest are desk-scale choices.
struct RunConfig {
    // Dataset files. When `edges` is empty the synthetic generator is used.
    std::string edges;
    std::string features;
    std::string labels;
    SbmParams synth;

    int hops = 2;
    std::size_t latent_dim = 64;
    std::size_t encoder_hidden = 0;
    std::size_t quality_hidden = 32;
    std::size_t max_k = 10;
    double alpha = 10.0;
    double gamma = 0.1;
    double epsilon_initial = 0.5;
    double epsilon_final = 1.0;
    std::size_t buffer_capacity = 40;
    std::size_t encoder_epochs = 400;
    std::size_t quality_epochs = 30;
    double lr_encoder = 1e-3;
    double lr_quality = 1e-3;
    double temperature = 1.0;
    std::size_t kmeans_restarts = 10;
    std::size_t kmeans_max_iters = 100;
    std::uint64_t seed = 0;
    // 0 lets the controller choose K; otherwise K is pinned and the controller is off.
    std::size_t fixed_k = 0;
    bool export_embedding = false;

    // Throws ConfigError naming the offending key.
    void validate() const;
    // Sets one key from its text form. Throws ConfigError on an unknown key or bad value.
    void set(const std::string& key, const std::string& value);
    // All keys in a fixed order, values in the same text form `set` reads.
    std::map<std::string, std::string> to_map() const;
    // key=value lines in to_map() order.
    std::string to_text() const;

    bool uses_synthetic() const { return edges.empty(); }

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

// Flat key=value text, one pair per line, '#' starts a comment line.
// Relative dataset paths are resolved against the config file's directory.
RunConfig load_config(const std::filesystem::path& path);
RunConfig parse_config(const std::string& text, const std::string& source = "<config>");

// Applies RGC_SEED from the environment when set.
void apply_env_overrides(RunConfig& cfg);

// Loads the dataset files or generates the synthetic graph.
AttributedGraph load_dataset(const RunConfig& cfg);

}  // namespace rgc
