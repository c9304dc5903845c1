#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <utility>
#include <vector>

#include "rgc/matrix.hpp"

namespace rgc {

using Edge = std::pair<std::size_t, std::size_t>;

// Undirected attributed graph. Edges are stored once each as (min, max) and
// sorted; self-loops are never stored.
struct AttributedGraph {
    std::size_t n = 0;
    std::size_t dim = 0;
    std::vector<Edge> edges;
    Matrix attributes;
    std::optional<std::vector<int>> labels;

    // Number of distinct label values, 0 without labels.
    std::size_t class_count() const;

    friend bool operator==(const AttributedGraph&, const AttributedGraph&) = default;
};

// Canonicalizes edges (orders endpoints, sorts, removes duplicates) and checks
// every invariant. Throws ValidationError.
void validate_and_canonicalize(AttributedGraph& g);

AttributedGraph load_graph(const std::filesystem::path& edge_path,
                           const std::filesystem::path& feature_path,
                           const std::optional<std::filesystem::path>& label_path = std::nullopt);

// Writes the three files in the same formats load_graph reads. Doubles are
// written with 17 significant digits so a reload is exact.
void save_graph(const AttributedGraph& g, const std::filesystem::path& edge_path,
                const std::filesystem::path& feature_path,
                const std::optional<std::filesystem::path>& label_path = std::nullopt);

void save_features(const Matrix& features, const std::filesystem::path& path);
std::vector<int> load_labels(const std::filesystem::path& path);
void save_labels(const std::vector<int>& labels, const std::filesystem::path& path);

struct FilteredFeatures {
    Matrix matrix;
    int hops = 0;
};

// (I - L)^hops X with L = I - D^-1/2 (A + I) D^-1/2 and D the degree of A + I.
FilteredFeatures laplacian_smooth(const AttributedGraph& g, int hops);

struct SbmParams {
    std::size_t blocks = 4;
    std::size_t nodes_per_block = 50;
    double p_in = 0.5;
    double p_out = 0.01;
    std::size_t feature_dim = 16;
    // Euclidean distance between any two block means.
    double mean_separation = 4.0;
    std::uint64_t seed = 0;

    friend bool operator==(const SbmParams&, const SbmParams&) = default;
};

// Stochastic block model with unit-variance Gaussian attributes around
// per-block means; labels are block ids. Requires feature_dim >= blocks.
AttributedGraph generate_sbm(const SbmParams& p);

}  // namespace rgc
