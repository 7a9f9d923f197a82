#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclab/graph.hpp"
#include "nclab/matrix.hpp"
#include "nclab/optim.hpp"
#include "nclab/rng.hpp"

namespace nclab {

enum class ModelKind { Mlp, Gcn, Fagcn };

inline std::string model_kind_name(ModelKind k) {
    switch (k) {
        case ModelKind::Mlp: return "mlp";
        case ModelKind::Gcn: return "gcn";
        case ModelKind::Fagcn: return "fagcn";
    }
    return "?";
}

inline ModelKind model_kind_from_name(const std::string& s) {
    if (s == "mlp") return ModelKind::Mlp;
    if (s == "gcn") return ModelKind::Gcn;
    if (s == "fagcn") return ModelKind::Fagcn;
    throw std::invalid_argument("unknown model kind '" + s + "'");
}

// One point of the hyperparameter space. `epsilon` is the residual weight of
// the two propagation layers and only read by FAGCN.
struct HyperConfig {
    int hidden_dim = 16;
    double input_dropout = 0.5;
    double dropout = 0.5;
    double learning_rate = 0.01;
    double l2 = 5e-4;
    double epsilon = 0.0;

    bool operator==(const HyperConfig&) const = default;
};

// Two-layer classifier parameters: input linear (w0, b0), output linear
// (w1, b1), plus one gate vector per propagation layer for FAGCN. Gates score
// each directed edge from the concatenated endpoint embeddings.
struct ModelParams {
    ModelKind kind = ModelKind::Mlp;
    DenseMatrix w0;              // input_dim x hidden
    std::vector<double> b0;      // hidden
    DenseMatrix w1;              // hidden x num_classes
    std::vector<double> b1;      // num_classes
    std::vector<double> gate0;   // 2*hidden (FAGCN only)
    std::vector<double> gate1;   // 2*hidden (FAGCN only)

    std::size_t hidden_dim() const { return w0.cols; }
    std::size_t input_dim() const { return w0.rows; }
    std::size_t num_classes() const { return w1.cols; }
};

// Gradients mirror the parameter layout.
struct ModelGrads {
    DenseMatrix w0;
    std::vector<double> b0;
    DenseMatrix w1;
    std::vector<double> b1;
    std::vector<double> gate0;
    std::vector<double> gate1;
};

inline ModelParams init_params(ModelKind kind, std::size_t input_dim, std::size_t num_classes,
                               const HyperConfig& cfg, RngStream& rng) {
    if (kind == ModelKind::Fagcn && cfg.epsilon <= 0.0)
        throw std::invalid_argument("fagcn requires a positive epsilon");
    const auto h = static_cast<std::size_t>(cfg.hidden_dim);
    ModelParams p;
    p.kind = kind;
    p.w0 = glorot_init(input_dim, h, rng);
    p.b0.assign(h, 0.0);
    p.w1 = glorot_init(h, num_classes, rng);
    p.b1.assign(num_classes, 0.0);
    if (kind == ModelKind::Fagcn) {
        p.gate0 = glorot_init_vector(2 * h, rng);
        p.gate1 = glorot_init_vector(2 * h, rng);
    }
    return p;
}

// Everything a model may need to run. MLP reads `features` only, GCN also
// needs the renormalized adjacency, FAGCN walks the raw graph.
struct ModelInputs {
    const SparseMatrix* features = nullptr;
    const SparseMatrix* adj_norm = nullptr;
    const SparseGraph* graph = nullptr;

    std::size_t node_count() const { return features->rows; }
};

// Activations kept from the forward pass for the backward pass.
struct ForwardCache {
    bool training = false;
    SparseMatrix x_drop;        // input after dropout (== *features in eval mode)
    DenseMatrix z0;             // pre-activation of the first layer
    DenseMatrix h0_drop;        // ReLU output after hidden dropout
    DenseMatrix mask_hidden;    // dropout masks (empty in eval mode)
    DenseMatrix logits;
    // FAGCN extras
    DenseMatrix prop1;          // output of the first propagation
    DenseMatrix prop1_drop;     // after the in-between dropout
    DenseMatrix prop2;
    DenseMatrix mask_prop;
    std::vector<double> alpha0;  // tanh gate value per directed edge, layer 1
    std::vector<double> alpha1;  // and layer 2
};

namespace detail {

inline void check_inputs(const ModelParams& p, const ModelInputs& in, const HyperConfig& cfg) {
    if (!in.features) throw std::invalid_argument("model inputs: features missing");
    if (in.features->cols != p.input_dim())
        throw std::invalid_argument("model inputs: feature width " + std::to_string(in.features->cols) +
                                    " does not match parameters (" + std::to_string(p.input_dim()) + ")");
    if (p.kind == ModelKind::Gcn && !in.adj_norm)
        throw std::invalid_argument("gcn requires the renormalized adjacency");
    if (p.kind == ModelKind::Fagcn) {
        if (!in.graph) throw std::invalid_argument("fagcn requires the graph");
        if (cfg.epsilon <= 0.0) throw std::invalid_argument("fagcn requires a positive epsilon");
    }
}

// One FAGCN propagation: out_i = eps*residual_i + sum_j c_ij * h_j over
// neighbors j, with c_ij = tanh(g^T [h_i || h_j]) / sqrt(d~_i d~_j) and
// d~ = degree + 1. Gate values are cached per directed edge (CSR order).
inline DenseMatrix fagcn_propagate(const SparseGraph& g, const DenseMatrix& h,
                                   const DenseMatrix& residual, const std::vector<double>& gate,
                                   double eps, std::vector<double>& alpha_out) {
    const std::size_t n = g.node_count;
    const std::size_t dim = h.cols;
    DenseMatrix out(n, dim);
    alpha_out.assign(g.adj.size(), 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double* oi = out.row(i);
        const double* ri = residual.row(i);
        for (std::size_t d = 0; d < dim; ++d) oi[d] = eps * ri[d];
        const double di = std::sqrt(static_cast<double>(g.degree(i) + 1));
        const double* hi = h.row(i);
        for (std::size_t p = g.adj_ptr[i]; p < g.adj_ptr[i + 1]; ++p) {
            const std::size_t j = g.adj[p];
            const double* hj = h.row(j);
            double s = 0.0;
            for (std::size_t d = 0; d < dim; ++d) s += gate[d] * hi[d] + gate[dim + d] * hj[d];
            const double a = std::tanh(s);
            alpha_out[p] = a;
            const double c = a / (di * std::sqrt(static_cast<double>(g.degree(j) + 1)));
            for (std::size_t d = 0; d < dim; ++d) oi[d] += c * hj[d];
        }
    }
    return out;
}

// Backward through one propagation. Accumulates into dh (gradient w.r.t. the
// propagated input), dresidual, and dgate.
inline void fagcn_propagate_backward(const SparseGraph& g, const DenseMatrix& h,
                                     const std::vector<double>& gate,
                                     const std::vector<double>& alpha, double eps,
                                     const DenseMatrix& dout, DenseMatrix& dh,
                                     DenseMatrix& dresidual, std::vector<double>& dgate) {
    const std::size_t dim = h.cols;
    for (std::size_t i = 0; i < g.node_count; ++i) {
        const double* doi = dout.row(i);
        double* dri = dresidual.row(i);
        for (std::size_t d = 0; d < dim; ++d) dri[d] += eps * doi[d];
        const double di = std::sqrt(static_cast<double>(g.degree(i) + 1));
        const double* hi = h.row(i);
        double* dhi = dh.row(i);
        for (std::size_t p = g.adj_ptr[i]; p < g.adj_ptr[i + 1]; ++p) {
            const std::size_t j = g.adj[p];
            const double* hj = h.row(j);
            double* dhj = dh.row(j);
            const double norm = 1.0 / (di * std::sqrt(static_cast<double>(g.degree(j) + 1)));
            const double a = alpha[p];
            double dc = 0.0;
            for (std::size_t d = 0; d < dim; ++d) dc += doi[d] * hj[d];
            // value path: out_i += c * h_j
            const double c = a * norm;
            for (std::size_t d = 0; d < dim; ++d) dhj[d] += c * doi[d];
            // gate path: c = tanh(s) * norm, s = gate^T [h_i || h_j]
            const double ds = dc * norm * (1.0 - a * a);
            for (std::size_t d = 0; d < dim; ++d) {
                dgate[d] += ds * hi[d];
                dgate[dim + d] += ds * hj[d];
                dhi[d] += ds * gate[d];
                dhj[d] += ds * gate[dim + d];
            }
        }
    }
}

}  // namespace detail

// Forward pass for any model kind. In training mode dropout draws come from
// `rng` in a fixed order (input first, then each hidden mask), so a seed
// pins the entire trajectory.
inline ForwardCache model_forward(const ModelParams& p, const ModelInputs& in,
                                  const HyperConfig& cfg, bool training, RngStream& rng) {
    detail::check_inputs(p, in, cfg);
    ForwardCache c;
    c.training = training;

    const SparseMatrix* x = in.features;
    if (training && cfg.input_dropout > 0.0) {
        c.x_drop = dropout_sparse(*x, cfg.input_dropout, rng);
        x = &c.x_drop;
    } else {
        c.x_drop = *x;
        x = &c.x_drop;
    }

    switch (p.kind) {
        case ModelKind::Mlp: {
            c.z0 = spmm(*x, p.w0);
            add_row_vector(c.z0, p.b0);
            c.h0_drop = relu(c.z0);
            if (training && cfg.dropout > 0.0) {
                c.mask_hidden = dropout_mask(c.h0_drop.rows, c.h0_drop.cols, cfg.dropout, rng);
                apply_mask(c.h0_drop, c.mask_hidden);
            }
            c.logits = matmul(c.h0_drop, p.w1);
            add_row_vector(c.logits, p.b1);
            break;
        }
        case ModelKind::Gcn: {
            DenseMatrix xw = spmm(*x, p.w0);
            c.z0 = spmm(*in.adj_norm, xw);
            add_row_vector(c.z0, p.b0);
            c.h0_drop = relu(c.z0);
            if (training && cfg.dropout > 0.0) {
                c.mask_hidden = dropout_mask(c.h0_drop.rows, c.h0_drop.cols, cfg.dropout, rng);
                apply_mask(c.h0_drop, c.mask_hidden);
            }
            DenseMatrix hw = matmul(c.h0_drop, p.w1);
            c.logits = spmm(*in.adj_norm, hw);
            add_row_vector(c.logits, p.b1);
            break;
        }
        case ModelKind::Fagcn: {
            c.z0 = spmm(*x, p.w0);
            add_row_vector(c.z0, p.b0);
            c.h0_drop = relu(c.z0);
            if (training && cfg.dropout > 0.0) {
                c.mask_hidden = dropout_mask(c.h0_drop.rows, c.h0_drop.cols, cfg.dropout, rng);
                apply_mask(c.h0_drop, c.mask_hidden);
            }
            // Residual anchor for both propagations is the (dropped) first layer.
            c.prop1 = detail::fagcn_propagate(*in.graph, c.h0_drop, c.h0_drop, p.gate0, cfg.epsilon,
                                              c.alpha0);
            c.prop1_drop = c.prop1;
            if (training && cfg.dropout > 0.0) {
                c.mask_prop = dropout_mask(c.prop1_drop.rows, c.prop1_drop.cols, cfg.dropout, rng);
                apply_mask(c.prop1_drop, c.mask_prop);
            }
            c.prop2 = detail::fagcn_propagate(*in.graph, c.prop1_drop, c.h0_drop, p.gate1,
                                              cfg.epsilon, c.alpha1);
            c.logits = matmul(c.prop2, p.w1);
            add_row_vector(c.logits, p.b1);
            break;
        }
    }
    return c;
}

// Backward pass from d(loss)/d(logits). Hand-derived; verified against
// central finite differences in the test suite.
inline ModelGrads model_backward(const ModelParams& p, const ModelInputs& in,
                                 const HyperConfig& cfg, const ForwardCache& c,
                                 const DenseMatrix& dlogits) {
    ModelGrads g;
    g.b1 = column_sums(dlogits);

    DenseMatrix dz0;  // gradient at the first layer pre-activation, filled per kind
    switch (p.kind) {
        case ModelKind::Mlp: {
            g.w1 = matmul_tn(c.h0_drop, dlogits);
            DenseMatrix dh = matmul_nt(dlogits, p.w1);
            if (c.mask_hidden.rows > 0) apply_mask(dh, c.mask_hidden);
            dz0 = std::move(dh);
            break;
        }
        case ModelKind::Gcn: {
            // logits = A (h W1) + b1, with A symmetric.
            DenseMatrix da = spmm(*in.adj_norm, dlogits);
            g.w1 = matmul_tn(c.h0_drop, da);
            DenseMatrix dh = matmul_nt(da, p.w1);
            if (c.mask_hidden.rows > 0) apply_mask(dh, c.mask_hidden);
            dz0 = std::move(dh);
            break;
        }
        case ModelKind::Fagcn: {
            g.w1 = matmul_tn(c.prop2, dlogits);
            DenseMatrix dprop2 = matmul_nt(dlogits, p.w1);

            const std::size_t n = c.h0_drop.rows, dim = c.h0_drop.cols;
            DenseMatrix dprop1_drop(n, dim);
            DenseMatrix dh0(n, dim);
            g.gate1.assign(2 * dim, 0.0);
            detail::fagcn_propagate_backward(*in.graph, c.prop1_drop, p.gate1, c.alpha1, cfg.epsilon,
                                             dprop2, dprop1_drop, dh0, g.gate1);
            if (c.mask_prop.rows > 0) apply_mask(dprop1_drop, c.mask_prop);

            g.gate0.assign(2 * dim, 0.0);
            // The first propagation reads h0 both as input and as residual.
            detail::fagcn_propagate_backward(*in.graph, c.h0_drop, p.gate0, c.alpha0, cfg.epsilon,
                                             dprop1_drop, dh0, dh0, g.gate0);
            if (c.mask_hidden.rows > 0) apply_mask(dh0, c.mask_hidden);
            dz0 = std::move(dh0);
            break;
        }
    }

    // ReLU gate, then the input linear layer.
    for (std::size_t i = 0; i < dz0.rows; ++i) {
        double* di = dz0.row(i);
        const double* zi = c.z0.row(i);
        for (std::size_t j = 0; j < dz0.cols; ++j)
            if (zi[j] <= 0.0) di[j] = 0.0;
    }
    if (p.kind == ModelKind::Gcn) {
        DenseMatrix da = spmm(*in.adj_norm, dz0);
        g.w0 = spmm_transposed(c.x_drop, da);
        g.b0 = column_sums(dz0);
    } else {
        g.w0 = spmm_transposed(c.x_drop, dz0);
        g.b0 = column_sums(dz0);
    }
    return g;
}

// Row-stochastic class probabilities from an evaluation-mode forward pass.
inline DenseMatrix predict_probs(const ModelParams& p, const ModelInputs& in,
                                 const HyperConfig& cfg) {
    RngStream unused(0);
    ForwardCache c = model_forward(p, in, cfg, /*training=*/false, unused);
    return softmax_rows(c.logits);
}

// Mean softmax cross-entropy over `rows` and its gradient w.r.t. logits
// (zero outside `rows`).
inline double softmax_ce_loss(const DenseMatrix& logits, const DenseMatrix& targets,
                              const std::vector<std::size_t>& rows, DenseMatrix* dlogits = nullptr) {
    if (rows.empty()) throw std::invalid_argument("softmax_ce_loss: empty row set");
    DenseMatrix probs = softmax_rows(logits);
    const double loss = cross_entropy_soft(probs, targets, rows) / static_cast<double>(rows.size());
    if (dlogits) {
        *dlogits = DenseMatrix(logits.rows, logits.cols);
        const double scale = 1.0 / static_cast<double>(rows.size());
        for (std::size_t n : rows) {
            double* d = dlogits->row(n);
            const double* pr = probs.row(n);
            const double* t = targets.row(n);
            for (std::size_t k = 0; k < logits.cols; ++k) d[k] = scale * (pr[k] - t[k]);
        }
    }
    return loss;
}

// Classification accuracy of argmax predictions over the given rows.
inline double accuracy(const DenseMatrix& logits_or_probs, const std::vector<std::size_t>& rows,
                       const std::vector<int>& labels) {
    if (rows.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t n : rows)
        if (static_cast<int>(argmax_row(logits_or_probs, n)) == labels[n]) ++hit;
    return static_cast<double>(hit) / static_cast<double>(rows.size());
}

inline double accuracy(const DenseMatrix& logits_or_probs, const std::vector<std::size_t>& rows,
                       const GuardedLabels& labels) {
    if (rows.empty()) return 0.0;
    std::size_t hit = 0;
    for (std::size_t n : rows)
        if (static_cast<int>(argmax_row(logits_or_probs, n)) == labels.label(n)) ++hit;
    return static_cast<double>(hit) / static_cast<double>(rows.size());
}

}  // namespace nclab
