#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "nclab/matrix.hpp"

namespace nclab {

// Undirected graph stored as a symmetric CSR adjacency structure.
// Self-loops and duplicate edges are removed at construction.
struct SparseGraph {
    std::size_t node_count = 0;
    std::vector<std::size_t> adj_ptr;  // node_count + 1
    std::vector<std::size_t> adj;      // neighbor ids, sorted within each row

    SparseGraph() : adj_ptr(1, 0) {}

    static SparseGraph from_edges(std::size_t n,
                                  const std::vector<std::pair<std::size_t, std::size_t>>& edges) {
        std::vector<std::pair<std::size_t, std::size_t>> dir;
        dir.reserve(edges.size() * 2);
        for (const auto& [u, v] : edges) {
            if (u >= n || v >= n) throw std::out_of_range("from_edges: endpoint out of range");
            if (u == v) continue;  // no self-loops in storage
            dir.emplace_back(u, v);
            dir.emplace_back(v, u);
        }
        std::sort(dir.begin(), dir.end());
        dir.erase(std::unique(dir.begin(), dir.end()), dir.end());
        SparseGraph g;
        g.node_count = n;
        g.adj_ptr.assign(n + 1, 0);
        g.adj.reserve(dir.size());
        std::size_t p = 0;
        for (std::size_t i = 0; i < n; ++i) {
            while (p < dir.size() && dir[p].first == i) {
                g.adj.push_back(dir[p].second);
                ++p;
            }
            g.adj_ptr[i + 1] = g.adj.size();
        }
        return g;
    }

    std::size_t degree(std::size_t i) const { return adj_ptr[i + 1] - adj_ptr[i]; }

    // Undirected edges counted once.
    std::size_t edge_count() const { return adj.size() / 2; }

    std::vector<std::pair<std::size_t, std::size_t>> undirected_edges() const {
        std::vector<std::pair<std::size_t, std::size_t>> e;
        e.reserve(edge_count());
        for (std::size_t i = 0; i < node_count; ++i)
            for (std::size_t p = adj_ptr[i]; p < adj_ptr[i + 1]; ++p)
                if (i < adj[p]) e.emplace_back(i, adj[p]);
        return e;
    }
};

constexpr int kUnlabeled = -1;

// Per-node features and labels. Features are binary presence indicators,
// L1-normalized row by row. Label -1 marks an unlabeled node.
struct NodeData {
    SparseMatrix features;    // node_count x feature_count
    std::vector<int> labels;  // node_count entries in [0, K) or -1
    int num_classes = 0;

    std::size_t node_count() const { return labels.size(); }

    std::vector<std::size_t> labeled_nodes() const {
        std::vector<std::size_t> out;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] != kUnlabeled) out.push_back(i);
        return out;
    }
};

// Read guard over ground-truth labels. Harness code paths that select models
// or train them must go through this view; touching a blocked (test) node
// aborts the experiment instead of silently leaking held-out labels.
class GuardedLabels {
public:
    explicit GuardedLabels(const std::vector<int>& labels)
        : labels_(&labels), blocked_(labels.size(), 0) {}

    GuardedLabels(const std::vector<int>& labels, const std::vector<std::size_t>& blocked_idx)
        : labels_(&labels), blocked_(labels.size(), 0) {
        for (std::size_t i : blocked_idx) {
            if (i >= blocked_.size()) throw std::out_of_range("GuardedLabels: index out of range");
            blocked_[i] = 1;
        }
    }

    int label(std::size_t n) const {
        if (n >= labels_->size()) throw std::out_of_range("GuardedLabels: index out of range");
        if (blocked_[n])
            throw std::logic_error("guarded label access: node " + std::to_string(n) +
                                   " belongs to the held-out test set");
        return (*labels_)[n];
    }

    std::size_t size() const { return labels_->size(); }

private:
    const std::vector<int>* labels_;
    std::vector<std::uint8_t> blocked_;
};

// One-hot target rows for the given nodes; all other rows stay zero.
inline DenseMatrix onehot_targets(const GuardedLabels& labels, const std::vector<std::size_t>& rows,
                                  std::size_t n, int num_classes) {
    DenseMatrix t(n, static_cast<std::size_t>(num_classes));
    for (std::size_t i : rows) {
        int y = labels.label(i);
        if (y < 0 || y >= num_classes) throw std::invalid_argument("onehot_targets: node has no valid label");
        t(i, static_cast<std::size_t>(y)) = 1.0;
    }
    return t;
}

// D^{-1/2} (A+I) D^{-1/2} where D is the degree matrix of A+I.
// Isolated nodes end up with a single diagonal entry of 1.
inline SparseMatrix renormalize_adjacency(const SparseGraph& g) {
    const std::size_t n = g.node_count;
    std::vector<double> inv_sqrt(n);
    for (std::size_t i = 0; i < n; ++i)
        inv_sqrt[i] = 1.0 / std::sqrt(static_cast<double>(g.degree(i) + 1));
    SparseMatrix m(n, n);
    m.col.reserve(g.adj.size() + n);
    m.val.reserve(g.adj.size() + n);
    for (std::size_t i = 0; i < n; ++i) {
        std::size_t p = g.adj_ptr[i];
        const std::size_t pe = g.adj_ptr[i + 1];
        bool diag_done = false;
        auto push = [&](std::size_t j, double x) {
            m.col.push_back(j);
            m.val.push_back(x);
        };
        while (p < pe) {
            std::size_t j = g.adj[p];
            if (!diag_done && j > i) {
                push(i, inv_sqrt[i] * inv_sqrt[i]);
                diag_done = true;
            }
            push(j, inv_sqrt[i] * inv_sqrt[j]);
            ++p;
        }
        if (!diag_done) push(i, inv_sqrt[i] * inv_sqrt[i]);
        m.row_ptr[i + 1] = m.col.size();
    }
    return m;
}

// Row-stochastic neighbor averaging matrix D^{-1} A. With `include_self` the
// node itself joins its neighborhood: D^{-1}(A+I). Isolated nodes keep an
// all-zero row (self excluded) or a single 1 on the diagonal (self included).
inline SparseMatrix neighbor_average_matrix(const SparseGraph& g, bool include_self = false) {
    const std::size_t n = g.node_count;
    SparseMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(g.degree(i) + (include_self ? 1 : 0));
        std::size_t p = g.adj_ptr[i];
        const std::size_t pe = g.adj_ptr[i + 1];
        bool diag_done = !include_self;
        while (p < pe) {
            std::size_t j = g.adj[p];
            if (!diag_done && j > i) {
                m.col.push_back(i);
                m.val.push_back(1.0 / d);
                diag_done = true;
            }
            m.col.push_back(j);
            m.val.push_back(1.0 / d);
            ++p;
        }
        if (!diag_done && d > 0.0) {
            m.col.push_back(i);
            m.val.push_back(1.0 / d);
        }
        m.row_ptr[i + 1] = m.col.size();
    }
    return m;
}

// K x K label mixing matrix: entry (i,j) is the fraction of directed edge
// endpoints going from label i to label j; each undirected edge counts in
// both directions. Edges with an unlabeled endpoint are skipped.
inline DenseMatrix label_mixing_matrix(const SparseGraph& g, const NodeData& d) {
    const std::size_t k = static_cast<std::size_t>(d.num_classes);
    DenseMatrix e(k, k);
    double total = 0.0;
    for (std::size_t u = 0; u < g.node_count; ++u) {
        int yu = d.labels[u];
        if (yu == kUnlabeled) continue;
        for (std::size_t p = g.adj_ptr[u]; p < g.adj_ptr[u + 1]; ++p) {
            int yv = d.labels[g.adj[p]];
            if (yv == kUnlabeled) continue;
            e(static_cast<std::size_t>(yu), static_cast<std::size_t>(yv)) += 1.0;
            total += 1.0;
        }
    }
    if (total > 0.0)
        for (double& x : e.v) x /= total;
    return e;
}

// Newman's discrete assortativity r = (sum_i e_ii - sum_i a_i b_i) /
// (1 - sum_i a_i b_i) over the label mixing matrix. A graph whose every edge
// joins same-label endpoints is perfectly assortative (r = 1) even when only
// one label is present; `degenerate` is set when the denominator vanishes.
inline double label_assortativity(const SparseGraph& g, const NodeData& d,
                                  bool* degenerate = nullptr) {
    if (g.edge_count() == 0) throw std::invalid_argument("label_assortativity: graph has no edges");
    DenseMatrix e = label_mixing_matrix(g, d);
    const std::size_t k = e.rows;
    double diag = 0.0, ab = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
        diag += e(i, i);
        double ai = 0.0, bi = 0.0;
        for (std::size_t j = 0; j < k; ++j) {
            ai += e(i, j);
            bi += e(j, i);
        }
        ab += ai * bi;
    }
    if (degenerate) *degenerate = false;
    const double denom = 1.0 - ab;
    if (std::abs(denom) < 1e-12) {
        if (degenerate) *degenerate = true;
        return diag >= 1.0 - 1e-12 ? 1.0 : 0.0;
    }
    return (diag - ab) / denom;
}

// Entry (i,j): proportion of label-j nodes in the neighborhoods of label-i
// nodes, i.e. label-j neighbor count over total degree of label-i nodes.
// Labels with zero total degree get an all-zero row.
inline DenseMatrix label_adjacency_matrix(const SparseGraph& g, const NodeData& d) {
    const std::size_t k = static_cast<std::size_t>(d.num_classes);
    DenseMatrix counts(k, k);
    std::vector<double> total_degree(k, 0.0);
    for (std::size_t u = 0; u < g.node_count; ++u) {
        int yu = d.labels[u];
        if (yu == kUnlabeled) continue;
        for (std::size_t p = g.adj_ptr[u]; p < g.adj_ptr[u + 1]; ++p) {
            int yv = d.labels[g.adj[p]];
            total_degree[static_cast<std::size_t>(yu)] += 1.0;
            if (yv == kUnlabeled) continue;
            counts(static_cast<std::size_t>(yu), static_cast<std::size_t>(yv)) += 1.0;
        }
    }
    for (std::size_t i = 0; i < k; ++i)
        if (total_degree[i] > 0.0)
            for (std::size_t j = 0; j < k; ++j) counts(i, j) /= total_degree[i];
    return counts;
}

struct DatasetStats {
    std::string name;
    double assortativity = 0.0;
    bool assortativity_degenerate = false;
    std::size_t node_count = 0;
    std::size_t edge_count = 0;  // undirected, counted once
    int category_count = 0;
    std::size_t feature_count = 0;
    DenseMatrix label_adjacency;  // K x K
};

inline DatasetStats dataset_stats(const SparseGraph& g, const NodeData& d,
                                  const std::string& name = "") {
    DatasetStats s;
    s.name = name;
    s.node_count = g.node_count;
    s.edge_count = g.edge_count();
    s.category_count = d.num_classes;
    s.feature_count = d.features.cols;
    s.assortativity =
        g.edge_count() > 0 ? label_assortativity(g, d, &s.assortativity_degenerate) : 0.0;
    s.label_adjacency = label_adjacency_matrix(g, d);
    return s;
}

}  // namespace nclab
