#include "rgc/encoder.hpp"

#include "rgc/error.hpp"

namespace rgc {

EncoderParams init_encoder(std::size_t input_dim, std::size_t latent_dim, std::uint64_t seed,
                           std::size_t hidden_width) {
    if (input_dim < 1 || latent_dim < 1) throw ArgumentError("encoder dimensions must be >= 1");
    EncoderParams p;
    p.input_dim = input_dim;
    p.latent_dim = latent_dim;
    p.hidden_width = hidden_width;
    std::mt19937_64 rng(seed);
    // Draw order is fixed: view 1 fully, then view 2.
    for (const char* view : {"lin1", "lin2"}) {
        const std::string name(view);
        if (hidden_width == 0) {
            p.params.add(name, init_uniform(input_dim, latent_dim, input_dim, rng));
        } else {
            p.params.add(name + "_hidden", init_uniform(input_dim, hidden_width, input_dim, rng));
            p.params.add(name, init_uniform(hidden_width, latent_dim, hidden_width, rng));
        }
    }
    return p;
}

EmbeddingVars encode(Tape& tape, const FilteredFeatures& x, EncoderParams& params) {
    if (x.matrix.cols() != params.input_dim)
        throw DimensionError("encode: features have " + std::to_string(x.matrix.cols()) +
                             " columns, encoder expects " + std::to_string(params.input_dim));
    Var input = tape.constant(x.matrix);
    auto view = [&](const std::string& name) {
        Var h = input;
        if (params.hidden_width > 0) h = relu(matmul(h, tape.param(params.params, name + "_hidden")));
        return row_l2_normalize(matmul(h, tape.param(params.params, name)));
    };
    EmbeddingVars out;
    out.view1 = view("lin1");
    out.view2 = view("lin2");
    out.fused = scale(add(out.view1, out.view2), 0.5);
    return out;
}

EmbeddingState encode(const FilteredFeatures& x, EncoderParams& params) {
    Tape tape;
    return encode(tape, x, params).values();
}

}  // namespace rgc
