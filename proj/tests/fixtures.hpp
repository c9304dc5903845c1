#pragma once

#include <filesystem>
#include <fstream>
#include <random>
#include <string>

#include "rgc/cluster.hpp"
#include "rgc/encoder.hpp"
#include "rgc/graph.hpp"
#include "rgc/objectives.hpp"

namespace fixture {

// Erdos-Renyi graph with uniform attributes in [-1, 1], canonicalized.
inline rgc::AttributedGraph random_graph(std::size_t n, std::size_t dim, double p, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(0.0, 1.0), x(-1.0, 1.0);
    rgc::AttributedGraph g;
    g.n = n;
    g.dim = dim;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i + 1; j < n; ++j)
            if (u(rng) < p) g.edges.emplace_back(i, j);
    g.attributes = rgc::Matrix(n, dim);
    for (auto& v : g.attributes.data()) v = x(rng);
    rgc::validate_and_canonicalize(g);
    return g;
}

// Fresh, empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("rgc_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::ofstream(p) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

// Worst relative gradient error of L_con + alpha KL(G || H) with respect to the
// encoder weights on a random graph. H is taken from the starting point and
// held fixed, as it is during training; centers come from K-Means on the
// starting embedding.
inline double full_objective_grad_error(std::size_t n, std::size_t input_dim, std::size_t latent_dim, std::size_t k,
                                        double alpha, std::uint64_t seed, std::size_t hidden = 0) {
    const auto g = random_graph(n, input_dim, 0.3, seed);
    const auto x = rgc::laplacian_smooth(g, 2);
    auto enc = rgc::init_encoder(input_dim, latent_dim, seed + 1, hidden);
    const auto start = rgc::encode(x, enc);
    const rgc::Matrix centers = rgc::kmeans(start.fused, k, seed).centers;
    const rgc::Matrix h = rgc::target_distribution(rgc::cluster_distribution(start.fused, centers));
    // grad_check perturbs enc.params in place, so the closure reads it directly.
    auto loss = [&](rgc::Tape& t, rgc::ParamSet&) {
        auto e = rgc::encode(t, x, enc);
        rgc::Var kl = rgc::clustering_loss(rgc::cluster_distribution(e.fused, centers), h);
        return rgc::add(rgc::contrastive_loss(e.view1, e.view2), rgc::scale(kl, alpha));
    };
    return rgc::grad_check(loss, enc.params, 1e-5);
}

}  // namespace fixture
