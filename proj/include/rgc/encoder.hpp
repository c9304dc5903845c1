#pragma once

#include <cstdint>

#include "rgc/graph.hpp"
#include "rgc/ndiff.hpp"

namespace rgc {

// Weights of the two un-shared view encoders. With hidden_width == 0 each
// view is a single bias-free linear map D -> d ("lin1", "lin2"). With a hidden
// layer each view is D -> w -> relu -> d ("lin1_hidden" then "lin1", same for view 2).
struct EncoderParams {
    ParamSet params;
    std::size_t input_dim = 0;
    std::size_t latent_dim = 0;
    std::size_t hidden_width = 0;

    Matrix& lin1_weight() { return params.at("lin1").value; }
    Matrix& lin2_weight() { return params.at("lin2").value; }
    const Matrix& lin1_weight() const { return params.at("lin1").value; }
    const Matrix& lin2_weight() const { return params.at("lin2").value; }
};

EncoderParams init_encoder(std::size_t input_dim, std::size_t latent_dim, std::uint64_t seed,
                           std::size_t hidden_width = 0);

struct EmbeddingState {
    Matrix view1;
    Matrix view2;
    Matrix fused;
};

// Embedding as recorded on a tape.
struct EmbeddingVars {
    Var view1;
    Var view2;
    Var fused;

    EmbeddingState values() const { return {view1.value(), view2.value(), fused.value()}; }
};

EmbeddingVars encode(Tape& tape, const FilteredFeatures& x, EncoderParams& params);

// Forward only.
EmbeddingState encode(const FilteredFeatures& x, EncoderParams& params);

}  // namespace rgc
