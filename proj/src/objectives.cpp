#include "rgc/objectives.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "rgc/error.hpp"

namespace rgc {

namespace {

struct InfoNceForward {
    double loss = 0.0;
    Matrix p12, p11, q21, q22;  // softmax weights, see contrastive_loss backward
};

// logits are row-major N x N similarity matrices already divided by temperature.
InfoNceForward info_nce_forward(const Matrix& s12, const Matrix& s11, const Matrix& s22) {
    const std::size_t n = s12.rows();
    InfoNceForward f;
    f.p12 = Matrix(n, n);
    f.p11 = Matrix(n, n);
    f.q21 = Matrix(n, n);
    f.q22 = Matrix(n, n);
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        // View 1, anchor i: cross row s12[i, :] and same-view row s11[i, k != i].
        double mx = s12(i, 0);
        for (std::size_t k = 0; k < n; ++k) {
            mx = std::max(mx, s12(i, k));
            if (k != i) mx = std::max(mx, s11(i, k));
        }
        double den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            f.p12(i, k) = std::exp(s12(i, k) - mx);
            den += f.p12(i, k);
            if (k != i) {
                f.p11(i, k) = std::exp(s11(i, k) - mx);
                den += f.p11(i, k);
            }
        }
        total += -(s12(i, i) - mx) + std::log(den);
        for (std::size_t k = 0; k < n; ++k) {
            f.p12(i, k) /= den;
            f.p11(i, k) /= den;
        }

        // View 2, anchor i: cross column s12[:, i] and same-view row s22[i, k != i].
        mx = s12(0, i);
        for (std::size_t k = 0; k < n; ++k) {
            mx = std::max(mx, s12(k, i));
            if (k != i) mx = std::max(mx, s22(i, k));
        }
        den = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
            f.q21(i, k) = std::exp(s12(k, i) - mx);
            den += f.q21(i, k);
            if (k != i) {
                f.q22(i, k) = std::exp(s22(i, k) - mx);
                den += f.q22(i, k);
            }
        }
        total += -(s12(i, i) - mx) + std::log(den);
        for (std::size_t k = 0; k < n; ++k) {
            f.q21(i, k) /= den;
            f.q22(i, k) /= den;
        }
    }
    f.loss = total / (2.0 * static_cast<double>(n));
    return f;
}

Matrix scaled(Matrix m, double factor) {
    for (auto& v : m.data()) v *= factor;
    return m;
}

void check_view_shapes(const Matrix& a, const Matrix& b) {
    if (!a.same_shape(b)) throw DimensionError("contrastive_loss: view shapes differ");
    if (a.rows() == 0) throw ArgumentError("contrastive_loss: needs at least one node");
}

}  // namespace

Var contrastive_loss(Var view1, Var view2, double temperature) {
    if (!(temperature > 0.0)) throw ArgumentError("temperature must be positive");
    const Matrix& v1 = view1.value();
    const Matrix& v2 = view2.value();
    check_view_shapes(v1, v2);
    const double inv_t = 1.0 / temperature;
    auto fwd = std::make_shared<InfoNceForward>(info_nce_forward(
        scaled(matmul_bt(v1, v2), inv_t), scaled(matmul_bt(v1, v1), inv_t), scaled(matmul_bt(v2, v2), inv_t)));
    const double loss = fwd->loss;
    Tape& tape = *view1.tape();
    return tape.record(Matrix(1, 1, loss), {view1, view2}, [fwd, inv_t](const BackwardContext& c) {
        const std::size_t n = fwd->p12.rows();
        const double coef = c.out_grad(0, 0) * inv_t / (2.0 * static_cast<double>(n));
        // dL/dS12 = P12 - I + (Q21 - I)^T ; dL/dS11 = P11 ; dL/dS22 = Q22 (diagonals zero).
        Matrix g12(n, n), g11(n, n), g22(n, n);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t k = 0; k < n; ++k) {
                g12(i, k) = coef * (fwd->p12(i, k) + fwd->q21(k, i) - (i == k ? 2.0 : 0.0));
                g11(i, k) = coef * (fwd->p11(i, k) + fwd->p11(k, i));
                g22(i, k) = coef * (fwd->q22(i, k) + fwd->q22(k, i));
            }
        const Matrix& v1 = *c.in_values[0];
        const Matrix& v2 = *c.in_values[1];
        auto acc = [](Matrix& dst, const Matrix& src) {
            for (std::size_t i = 0; i < dst.size(); ++i) dst.data()[i] += src.data()[i];
        };
        if (c.in_grads[0]) {
            acc(*c.in_grads[0], matmul(g12, v2));
            acc(*c.in_grads[0], matmul(g11, v1));
        }
        if (c.in_grads[1]) {
            acc(*c.in_grads[1], matmul_at(g12, v1));
            acc(*c.in_grads[1], matmul(g22, v2));
        }
    });
}

double contrastive_loss(const EmbeddingState& emb, double temperature) {
    Tape tape;
    return contrastive_loss(tape.constant(emb.view1), tape.constant(emb.view2), temperature).scalar();
}

Matrix cluster_distribution(const Matrix& z, const Matrix& centers) {
    if (centers.rows() < 1) throw ArgumentError("cluster_distribution: need at least one center");
    if (z.cols() != centers.cols()) throw DimensionError("cluster_distribution: embedding/center widths differ");
    Matrix g(z.rows(), centers.rows());
    for (std::size_t i = 0; i < z.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < centers.rows(); ++j) {
            g(i, j) = 1.0 / (1.0 + squared_distance(z.row(i), centers.row(j)));
            s += g(i, j);
        }
        for (double& v : g.row(i)) v /= s;
    }
    return g;
}

Var cluster_distribution(Var fused, const Matrix& centers) {
    const Matrix& z = fused.value();
    Matrix g = cluster_distribution(z, centers);
    return fused.tape()->record(std::move(g), {fused}, [centers](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const Matrix& z = *c.in_values[0];
        const Matrix& g = c.out_value;
        const std::size_t k = centers.rows();
        std::vector<double> q(k);
        for (std::size_t i = 0; i < z.rows(); ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < k; ++j) {
                q[j] = 1.0 / (1.0 + squared_distance(z.row(i), centers.row(j)));
                s += q[j];
            }
            double dot = 0.0;
            for (std::size_t j = 0; j < k; ++j) dot += c.out_grad(i, j) * g(i, j);
            auto gz = c.in_grads[0]->row(i);
            const auto zi = z.row(i);
            for (std::size_t j = 0; j < k; ++j) {
                // dL/dq_j = (gout_j - dot) / s ; dq_j/dz = -2 q_j^2 (z - c_j)
                const double u = (c.out_grad(i, j) - dot) / s * (-2.0 * q[j] * q[j]);
                const auto cj = centers.row(j);
                for (std::size_t d = 0; d < zi.size(); ++d) gz[d] += u * (zi[d] - cj[d]);
            }
        }
    });
}

Matrix target_distribution(const Matrix& g) {
    std::vector<double> freq(g.cols(), 0.0);
    for (std::size_t i = 0; i < g.rows(); ++i)
        for (std::size_t j = 0; j < g.cols(); ++j) freq[j] += g(i, j);
    Matrix h(g.rows(), g.cols());
    for (std::size_t i = 0; i < g.rows(); ++i) {
        double s = 0.0;
        for (std::size_t j = 0; j < g.cols(); ++j) {
            h(i, j) = freq[j] > 0.0 ? g(i, j) * g(i, j) / freq[j] : 0.0;
            s += h(i, j);
        }
        if (s > 0.0)
            for (double& v : h.row(i)) v /= s;
    }
    return h;
}

double clustering_loss(const Matrix& g, const Matrix& h) {
    if (!g.same_shape(h)) throw DimensionError("clustering_loss: G and H shapes differ");
    double kl = 0.0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        const double gi = g.data()[i];
        const double hi = h.data()[i];
        if (gi == 0.0) continue;
        if (hi <= 0.0) throw NumericError("clustering_loss: H is zero where G is positive");
        kl += gi * std::log(gi / hi);
    }
    return kl;
}

Var clustering_loss(Var g, const Matrix& h) {
    const double kl = clustering_loss(g.value(), h);
    return g.tape()->record(Matrix(1, 1, kl), {g}, [h](const BackwardContext& c) {
        if (!c.in_grads[0]) return;
        const auto& gv = c.in_values[0]->data();
        auto& gg = c.in_grads[0]->data();
        const double up = c.out_grad(0, 0);
        for (std::size_t i = 0; i < gv.size(); ++i)
            if (gv[i] > 0.0) gg[i] += up * (std::log(gv[i] / h.data()[i]) + 1.0);
    });
}

EncoderLoss encoder_loss(const EmbeddingVars& emb, const Matrix& centers, double alpha, double temperature) {
    if (!(alpha >= 0.0)) throw ArgumentError("alpha must be >= 0");
    EncoderLoss out;
    out.contrastive = contrastive_loss(emb.view1, emb.view2, temperature);
    Var g = cluster_distribution(emb.fused, centers);
    out.clustering = clustering_loss(g, target_distribution(g.value()));
    out.total = add(out.contrastive, scale(out.clustering, alpha));
    return out;
}

}  // namespace rgc
