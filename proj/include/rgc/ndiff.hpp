#pragma once

// Minimal reverse-mode differentiation over dense matrices.
//
// A Tape records every forward operation together with a closure that maps
// the output adjoint to input adjoints. Parameters live in a ParamSet; leaves
// created with Tape::param() write their adjoints into the ParamSet's gradient
// accumulators when Tape::backward() runs. A tape is rebuilt for every forward
// pass and is not thread-safe; distinct tapes may live on distinct threads.

#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "rgc/matrix.hpp"

namespace rgc {

struct Param {
    Matrix value;
    Matrix grad;
};

// Named parameter matrices with paired gradient accumulators. Iteration order
// is the lexical order of the names, so every walk over a ParamSet is stable.
class ParamSet {
public:
    Param& add(const std::string& name, Matrix value);
    Param& at(const std::string& name);
    const Param& at(const std::string& name) const;
    bool contains(const std::string& name) const { return params_.count(name) != 0; }

    void zero_grad();
    std::size_t size() const { return params_.size(); }

    auto begin() { return params_.begin(); }
    auto end() { return params_.end(); }
    auto begin() const { return params_.begin(); }
    auto end() const { return params_.end(); }

    friend bool operator==(const ParamSet& a, const ParamSet& b);

private:
    std::map<std::string, Param> params_;
};

class Tape;

// Handle to a value recorded on a tape. Cheap to copy; valid while the tape lives.
class Var {
public:
    Var() = default;
    const Matrix& value() const;
    std::size_t id() const { return id_; }
    Tape* tape() const { return tape_; }
    double scalar() const;

private:
    friend class Tape;
    Var(Tape* tape, std::size_t id) : tape_(tape), id_(id) {}
    Tape* tape_ = nullptr;
    std::size_t id_ = 0;
};

struct BackwardContext {
    const Matrix& out_value;
    const Matrix& out_grad;
    std::span<const Matrix* const> in_values;
    // nullptr where the input does not require a gradient.
    std::span<Matrix* const> in_grads;
};

using Backward = std::function<void(const BackwardContext&)>;

class Tape {
public:
    Tape() = default;
    Tape(const Tape&) = delete;
    Tape& operator=(const Tape&) = delete;

    Var constant(Matrix value);
    Var param(ParamSet& params, const std::string& name);

    // Records a node. Throws NumericError if `value` holds a non-finite entry.
    Var record(Matrix value, std::vector<Var> inputs, Backward backward);

    // Seeds d(loss)/d(loss) = 1 and propagates to every parameter leaf.
    // `loss` must be 1x1.
    void backward(Var loss);

    const Matrix& value(std::size_t id) const { return nodes_[id].value; }
    std::size_t node_count() const { return nodes_.size(); }

    // Rows that row_l2_normalize met with zero norm and passed through unchanged.
    std::size_t degenerate_rows() const { return degenerate_rows_; }
    void note_degenerate_row() { ++degenerate_rows_; }

private:
    struct Node {
        Matrix value;
        Matrix grad;
        std::vector<std::size_t> inputs;
        Backward backward;
        Param* param = nullptr;
        bool requires_grad = false;
    };

    std::vector<Node> nodes_;
    std::size_t degenerate_rows_ = 0;
};

// Forward primitives. Each records its adjoint on the operands' tape.
Var matmul(Var a, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var scale(Var a, double factor);
// Divides each row by its L2 norm. Zero rows pass through unchanged and are
// counted on the tape (see Tape::degenerate_rows).
Var row_l2_normalize(Var a);
// (x - mean) / sqrt(var + 1e-8) per row, population variance.
Var row_standardize(Var a);
Var relu(Var a);
Var softmax_rows(Var a);
// Places the columns of `b` to the right of the columns of `a`; row counts must match.
Var concat_rows(Var a, Var b);
// Column-wise mean over rows, giving a 1 x cols row vector.
Var mean_rows(Var a);
// Sum of all entries, 1x1.
Var sum(Var a);

inline constexpr double kStandardizeEps = 1e-8;

// Adam with bias correction. State is keyed by parameter name.
class Adam {
public:
    explicit Adam(double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps) {}

    void step(ParamSet& params);
    double lr() const { return lr_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::map<std::string, std::pair<Matrix, Matrix>> moments_;
};

// Uniform in [-1/sqrt(fan_in), +1/sqrt(fan_in)].
Matrix init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng);

using LossFn = std::function<Var(Tape&, ParamSet&)>;

// Central finite differences over every parameter entry against tape
// gradients. Returns the worst |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
double grad_check(const LossFn& loss_fn, ParamSet& params, double epsilon);

}  // namespace rgc
