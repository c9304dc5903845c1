#pragma once

#include "rgc/encoder.hpp"
#include "rgc/ndiff.hpp"

namespace rgc {

// Two-view infoNCE. For node i in view j the positive is the same node in the
// other view; negatives are every other node in both views. Similarities are
// inner products of the unit-norm view rows divided by `temperature`.
// Averaged over all 2N (node, view) terms.
Var contrastive_loss(Var view1, Var view2, double temperature = 1.0);
double contrastive_loss(const EmbeddingState& emb, double temperature = 1.0);

// Student-t soft assignment, G_ij proportional to 1 / (1 + |z_i - c_j|^2).
// Centers are constants.
Var cluster_distribution(Var fused, const Matrix& centers);
Matrix cluster_distribution(const Matrix& fused, const Matrix& centers);

// Sharpened target: H_ij proportional to G_ij^2 / f_j with f_j = sum_i G_ij,
// normalized per row. Plain matrix; never differentiated.
Matrix target_distribution(const Matrix& g);

// KL(G || H) = sum G log(G / H), with 0 log(0 / h) = 0. H is held fixed.
// Throws NumericError where H_ij = 0 and G_ij > 0.
Var clustering_loss(Var g, const Matrix& h);
double clustering_loss(const Matrix& g, const Matrix& h);

struct EncoderLoss {
    Var total;
    Var contrastive;
    Var clustering;
};

// L = L_con + alpha * KL(G || H), H rebuilt from the current G and detached.
EncoderLoss encoder_loss(const EmbeddingVars& emb, const Matrix& centers, double alpha,
                         double temperature = 1.0);

}  // namespace rgc
