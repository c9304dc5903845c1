#include "rgc/ndiff.hpp"

#include <algorithm>
#include <cmath>

#include "rgc/error.hpp"

namespace rgc {

namespace {

std::string shape(const Matrix& m) {
    return std::to_string(m.rows()) + "x" + std::to_string(m.cols());
}

void require_same_shape(const char* op, const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b))
        throw DimensionError(std::string(op) + ": shapes " + shape(a) + " and " + shape(b) + " differ");
}

void axpy(Matrix& dst, const Matrix& src, double factor = 1.0) {
    auto& d = dst.data();
    const auto& s = src.data();
    for (std::size_t i = 0; i < d.size(); ++i) d[i] += factor * s[i];
}

Tape& tape_of(Var a) {
    if (a.tape() == nullptr) throw ArgumentError("variable is not bound to a tape");
    return *a.tape();
}

Tape& tape_of(Var a, Var b) {
    if (a.tape() != b.tape()) throw ArgumentError("operands live on different tapes");
    return tape_of(a);
}

}  // namespace

// ---------------------------------------------------------------------------
// ParamSet

Param& ParamSet::add(const std::string& name, Matrix value) {
    Matrix grad(value.rows(), value.cols());
    auto [it, inserted] = params_.insert_or_assign(name, Param{std::move(value), std::move(grad)});
    return it->second;
}

Param& ParamSet::at(const std::string& name) {
    auto it = params_.find(name);
    if (it == params_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    return it->second;
}

const Param& ParamSet::at(const std::string& name) const {
    auto it = params_.find(name);
    if (it == params_.end()) throw ArgumentError("unknown parameter '" + name + "'");
    return it->second;
}

void ParamSet::zero_grad() {
    for (auto& [name, p] : params_) p.grad.fill(0.0);
}

bool operator==(const ParamSet& a, const ParamSet& b) {
    if (a.params_.size() != b.params_.size()) return false;
    auto ia = a.params_.begin();
    auto ib = b.params_.begin();
    for (; ia != a.params_.end(); ++ia, ++ib)
        if (ia->first != ib->first || !(ia->second.value == ib->second.value)) return false;
    return true;
}

// ---------------------------------------------------------------------------
// Tape

const Matrix& Var::value() const {
    if (tape_ == nullptr) throw ArgumentError("variable is not bound to a tape");
    return tape_->value(id_);
}

double Var::scalar() const {
    const Matrix& v = value();
    if (v.size() != 1) throw DimensionError("scalar(): value is " + shape(v));
    return v(0, 0);
}

Var Tape::constant(Matrix value) {
    if (!value.all_finite()) throw NumericError("non-finite constant");
    nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
    return Var(this, nodes_.size() - 1);
}

Var Tape::param(ParamSet& params, const std::string& name) {
    Param& p = params.at(name);
    nodes_.push_back(Node{p.value, {}, {}, {}, &p, true});
    return Var(this, nodes_.size() - 1);
}

Var Tape::record(Matrix value, std::vector<Var> inputs, Backward backward) {
    if (!value.all_finite()) throw NumericError("operation produced a non-finite value");
    Node node;
    node.value = std::move(value);
    node.backward = std::move(backward);
    for (Var in : inputs) {
        if (in.tape() != this) throw ArgumentError("input recorded on a different tape");
        node.inputs.push_back(in.id());
        node.requires_grad = node.requires_grad || nodes_[in.id()].requires_grad;
    }
    nodes_.push_back(std::move(node));
    return Var(this, nodes_.size() - 1);
}

void Tape::backward(Var loss) {
    if (loss.tape() != this) throw ArgumentError("loss recorded on a different tape");
    Node& root = nodes_[loss.id()];
    if (root.value.size() != 1) throw DimensionError("backward() needs a 1x1 loss, got " + shape(root.value));
    for (auto& n : nodes_) n.grad = Matrix();
    root.grad = Matrix(1, 1, 1.0);

    std::vector<const Matrix*> in_values;
    std::vector<Matrix*> in_grads;
    for (std::size_t id = loss.id() + 1; id-- > 0;) {
        Node& node = nodes_[id];
        if (!node.requires_grad || node.grad.empty()) continue;
        if (node.param != nullptr) {
            axpy(node.param->grad, node.grad);
            continue;
        }
        if (!node.backward) continue;
        in_values.clear();
        in_grads.clear();
        for (std::size_t in : node.inputs) {
            Node& src = nodes_[in];
            in_values.push_back(&src.value);
            if (src.requires_grad) {
                if (src.grad.empty()) src.grad = Matrix(src.value.rows(), src.value.cols());
                in_grads.push_back(&src.grad);
            } else {
                in_grads.push_back(nullptr);
            }
        }
        node.backward(BackwardContext{node.value, node.grad, in_values, in_grads});
    }
}

// ---------------------------------------------------------------------------
// Primitives

Var matmul(Var a, Var b) {
    Tape& t = tape_of(a, b);
    return t.record(matmul(a.value(), b.value()), {a, b}, [](const BackwardContext& c) {
        // dA = dC B^T, dB = A^T dC
        if (c.in_grads[0]) axpy(*c.in_grads[0], matmul_bt(c.out_grad, *c.in_values[1]));
        if (c.in_grads[1]) axpy(*c.in_grads[1], matmul_at(*c.in_values[0], c.out_grad));
    });
}

Var add(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("add", a.value(), b.value());
    Matrix out = a.value();
    axpy(out, b.value());
    return t.record(std::move(out), {a, b}, [](const BackwardContext& c) {
        if (c.in_grads[0]) axpy(*c.in_grads[0], c.out_grad);
        if (c.in_grads[1]) axpy(*c.in_grads[1], c.out_grad);
    });
}

Var sub(Var a, Var b) {
    Tape& t = tape_of(a, b);
    require_same_shape("sub", a.value(), b.value());
    Matrix out = a.value();
    axpy(out, b.value(), -1.0);
    return t.record(std::move(out), {a, b}, [](const BackwardContext& c) {
        if (c.in_grads[0]) axpy(*c.in_grads[0], c.out_grad);
        if (c.in_grads[1]) axpy(*c.in_grads[1], c.out_grad, -1.0);
    });
}

Var scale(Var a, double factor) {
    Tape& t = tape_of(a);
    Matrix out = a.value();
    for (auto& x : out.data()) x *= factor;
    return t.record(std::move(out), {a}, [factor](const BackwardContext& c) {
        if (c.in_grads[0]) axpy(*c.in_grads[0], c.out_grad, factor);
    });
}

Var row_l2_normalize(Var a) {
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    Matrix out = x;
    std::vector<double> norms(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        double s = 0.0;
        for (double v : x.row(i)) s += v * v;
        norms[i] = std::sqrt(s);
        if (norms[i] == 0.0) {
            t.note_degenerate_row();
            continue;
        }
        for (double& v : out.row(i)) v /= norms[i];
    }
    return t.record(std::move(out), {a}, [norms = std::move(norms)](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        Matrix& gx = *c.in_grads[0];
        const Matrix& y = c.out_value;
        for (std::size_t i = 0; i < y.rows(); ++i) {
            if (norms[i] == 0.0) continue;
            const auto gy = c.out_grad.row(i);
            const auto yi = y.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < yi.size(); ++j) dot += gy[j] * yi[j];
            auto gi = gx.row(i);
            for (std::size_t j = 0; j < yi.size(); ++j) gi[j] += (gy[j] - yi[j] * dot) / norms[i];
        }
    });
}

Var row_standardize(Var a) {
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    const std::size_t n = x.cols();
    if (n == 0) throw DimensionError("row_standardize on a matrix without columns");
    Matrix out(x.rows(), n);
    std::vector<double> sigma(x.rows());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        double mean = 0.0;
        for (double v : xi) mean += v;
        mean /= static_cast<double>(n);
        double var = 0.0;
        for (double v : xi) var += (v - mean) * (v - mean);
        var /= static_cast<double>(n);
        sigma[i] = std::sqrt(var + kStandardizeEps);
        for (std::size_t j = 0; j < n; ++j) out(i, j) = (xi[j] - mean) / sigma[i];
    }
    return t.record(std::move(out), {a}, [sigma = std::move(sigma)](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const Matrix& y = c.out_value;
        const double inv_n = 1.0 / static_cast<double>(y.cols());
        for (std::size_t i = 0; i < y.rows(); ++i) {
            const auto g = c.out_grad.row(i);
            const auto yi = y.row(i);
            double mean_g = 0.0, mean_gy = 0.0;
            for (std::size_t j = 0; j < yi.size(); ++j) {
                mean_g += g[j];
                mean_gy += g[j] * yi[j];
            }
            mean_g *= inv_n;
            mean_gy *= inv_n;
            auto gx = c.in_grads[0]->row(i);
            for (std::size_t j = 0; j < yi.size(); ++j)
                gx[j] += (g[j] - mean_g - yi[j] * mean_gy) / sigma[i];
        }
    });
}

Var relu(Var a) {
    Tape& t = tape_of(a);
    Matrix out = a.value();
    for (auto& v : out.data()) v = std::max(v, 0.0);
    return t.record(std::move(out), {a}, [](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const auto& x = c.in_values[0]->data();
        const auto& g = c.out_grad.data();
        auto& gx = c.in_grads[0]->data();
        for (std::size_t i = 0; i < x.size(); ++i)
            if (x[i] > 0.0) gx[i] += g[i];
    });
}

Var softmax_rows(Var a) {
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    Matrix out(x.rows(), x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        const auto xi = x.row(i);
        const double mx = *std::max_element(xi.begin(), xi.end());
        double s = 0.0;
        auto oi = out.row(i);
        for (std::size_t j = 0; j < xi.size(); ++j) {
            oi[j] = std::exp(xi[j] - mx);
            s += oi[j];
        }
        for (double& v : oi) v /= s;
    }
    return t.record(std::move(out), {a}, [](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const Matrix& y = c.out_value;
        for (std::size_t i = 0; i < y.rows(); ++i) {
            const auto g = c.out_grad.row(i);
            const auto yi = y.row(i);
            double dot = 0.0;
            for (std::size_t j = 0; j < yi.size(); ++j) dot += g[j] * yi[j];
            auto gx = c.in_grads[0]->row(i);
            for (std::size_t j = 0; j < yi.size(); ++j) gx[j] += yi[j] * (g[j] - dot);
        }
    });
}

Var concat_rows(Var a, Var b) {
    Tape& t = tape_of(a, b);
    const Matrix& x = a.value();
    const Matrix& y = b.value();
    if (x.rows() != y.rows())
        throw DimensionError("concat_rows: row counts " + shape(x) + " and " + shape(y) + " differ");
    Matrix out(x.rows(), x.cols() + y.cols());
    for (std::size_t i = 0; i < x.rows(); ++i) {
        auto oi = out.row(i);
        std::copy(x.row(i).begin(), x.row(i).end(), oi.begin());
        std::copy(y.row(i).begin(), y.row(i).end(), oi.begin() + static_cast<std::ptrdiff_t>(x.cols()));
    }
    const std::size_t split = x.cols();
    return t.record(std::move(out), {a, b}, [split](const BackwardContext& c) {
        for (std::size_t i = 0; i < c.out_grad.rows(); ++i) {
            const auto g = c.out_grad.row(i);
            if (c.in_grads[0]) {
                auto ga = c.in_grads[0]->row(i);
                for (std::size_t j = 0; j < split; ++j) ga[j] += g[j];
            }
            if (c.in_grads[1]) {
                auto gb = c.in_grads[1]->row(i);
                for (std::size_t j = 0; j < gb.size(); ++j) gb[j] += g[split + j];
            }
        }
    });
}

Var mean_rows(Var a) {
    Tape& t = tape_of(a);
    const Matrix& x = a.value();
    if (x.rows() == 0) throw DimensionError("mean_rows on a matrix without rows");
    Matrix out(1, x.cols());
    for (std::size_t i = 0; i < x.rows(); ++i)
        for (std::size_t j = 0; j < x.cols(); ++j) out(0, j) += x(i, j);
    const double inv = 1.0 / static_cast<double>(x.rows());
    for (auto& v : out.data()) v *= inv;
    return t.record(std::move(out), {a}, [inv](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        Matrix& gx = *c.in_grads[0];
        for (std::size_t i = 0; i < gx.rows(); ++i)
            for (std::size_t j = 0; j < gx.cols(); ++j) gx(i, j) += inv * c.out_grad(0, j);
    });
}

Var sum(Var a) {
    Tape& t = tape_of(a);
    double s = 0.0;
    for (double v : a.value().data()) s += v;
    return t.record(Matrix(1, 1, s), {a}, [](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const double g = c.out_grad(0, 0);
        for (auto& v : c.in_grads[0]->data()) v += g;
    });
}

// ---------------------------------------------------------------------------
// Optimizer, init, verification

void Adam::step(ParamSet& params) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, static_cast<double>(t_));
    const double bc2 = 1.0 - std::pow(beta2_, static_cast<double>(t_));
    for (auto& [name, p] : params) {
        auto it = moments_.find(name);
        if (it == moments_.end())
            it = moments_
                     .emplace(name, std::pair{Matrix(p.value.rows(), p.value.cols()),
                                              Matrix(p.value.rows(), p.value.cols())})
                     .first;
        auto& m = it->second.first.data();
        auto& v = it->second.second.data();
        auto& w = p.value.data();
        const auto& g = p.grad.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            m[i] = beta1_ * m[i] + (1.0 - beta1_) * g[i];
            v[i] = beta2_ * v[i] + (1.0 - beta2_) * g[i] * g[i];
            w[i] -= lr_ * (m[i] / bc1) / (std::sqrt(v[i] / bc2) + eps_);
        }
    }
}

Matrix init_uniform(std::size_t rows, std::size_t cols, std::size_t fan_in, std::mt19937_64& rng) {
    const double bound = 1.0 / std::sqrt(static_cast<double>(std::max<std::size_t>(fan_in, 1)));
    std::uniform_real_distribution<double> dist(-bound, bound);
    Matrix m(rows, cols);
    for (auto& v : m.data()) v = dist(rng);
    return m;
}

double grad_check(const LossFn& loss_fn, ParamSet& params, double epsilon) {
    if (!(epsilon > 0.0)) throw ArgumentError("grad_check: epsilon must be positive");

    auto evaluate = [&]() {
        Tape tape;
        const double v = loss_fn(tape, params).scalar();
        if (!std::isfinite(v)) throw NumericError("grad_check: non-finite loss");
        return v;
    };

    params.zero_grad();
    {
        Tape tape;
        Var loss = loss_fn(tape, params);
        if (!std::isfinite(loss.scalar())) throw NumericError("grad_check: non-finite loss");
        tape.backward(loss);
    }

    double worst = 0.0;
    for (auto& [name, p] : params) {
        const Matrix analytic = p.grad;
        auto& w = p.value.data();
        for (std::size_t i = 0; i < w.size(); ++i) {
            const double saved = w[i];
            w[i] = saved + epsilon;
            const double up = evaluate();
            w[i] = saved - epsilon;
            const double down = evaluate();
            w[i] = saved;
            const double numeric = (up - down) / (2.0 * epsilon);
            const double a = analytic.data()[i];
            const double denom = std::max({std::abs(a), std::abs(numeric), 1e-8});
            worst = std::max(worst, std::abs(a - numeric) / denom);
        }
    }
    return worst;
}

}  // namespace rgc
