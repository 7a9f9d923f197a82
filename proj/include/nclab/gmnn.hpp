#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclab/graph.hpp"
#include "nclab/matrix.hpp"
#include "nclab/models.hpp"
#include "nclab/train.hpp"

namespace nclab {

// How predicted distributions become pseudo-labels. Sharpen mixes the
// distribution with its own argmax one-hot (deterministic); Sample draws a
// hard category from the sharpened distribution.
enum class AnnealMode { Sharpen, Sample };

struct GmnnConfig {
    HyperConfig alpha;  // classification network q
    HyperConfig beta;   // label-conditional network p
    ModelKind base = ModelKind::Gcn;
    int em_loops = 10;
    int epochs_per_phase = 100;
    double tau = 0.1;
    AnnealMode anneal = AnnealMode::Sharpen;
    bool label_self_loop = false;  // let a node's own pseudo-label reach its label channel
    TrainSettings init_train{1000, 200};  // matches a plain supervised run
    int phase_patience = 200;
};

// Immutable per-dataset matrices shared across runs.
struct GraphCache {
    SparseMatrix adj_norm;         // D^{-1/2}(A+I)D^{-1/2}
    SparseMatrix label_prop;       // row-normalized A, zero diagonal
    SparseMatrix label_prop_self;  // row-normalized A+I
};

inline GraphCache build_graph_cache(const SparseGraph& g) {
    return GraphCache{renormalize_adjacency(g), neighbor_average_matrix(g, false),
                      neighbor_average_matrix(g, true)};
}

struct EmSplit {
    std::vector<std::size_t> train;  // labeled nodes visible to training
    std::vector<std::size_t> valid;
};

// Pseudo-labels: exact ground-truth one-hots on the labeled set, annealed
// predictions elsewhere. Sharpening with factor tau keeps tau of the
// predicted distribution and moves the rest onto its argmax.
inline DenseMatrix annealed_sample(const DenseMatrix& q_probs, const GuardedLabels& labels,
                                   const std::vector<std::size_t>& labeled_set, double tau,
                                   RngStream& rng, AnnealMode mode = AnnealMode::Sharpen) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("annealed_sample: tau outside [0,1]");
    const std::size_t n = q_probs.rows, k = q_probs.cols;
    DenseMatrix y(n, k);
    std::vector<std::uint8_t> is_labeled(n, 0);
    for (std::size_t i : labeled_set) is_labeled[i] = 1;
    for (std::size_t i = 0; i < n; ++i) {
        if (is_labeled[i]) {
            y(i, static_cast<std::size_t>(labels.label(i))) = 1.0;
            continue;
        }
        const std::size_t top = argmax_row(q_probs, i);
        if (mode == AnnealMode::Sharpen) {
            for (std::size_t c = 0; c < k; ++c) y(i, c) = tau * q_probs(i, c);
            y(i, top) += 1.0 - tau;
        } else {
            // draw from the sharpened distribution
            double x = rng.next_double();
            std::size_t pick = k - 1;
            for (std::size_t c = 0; c < k; ++c) {
                const double w = tau * q_probs(i, c) + (c == top ? 1.0 - tau : 0.0);
                x -= w;
                if (x < 0.0) {
                    pick = c;
                    break;
                }
            }
            y(i, pick) = 1.0;
        }
    }
    return y;
}

// Horizontal concatenation of the feature matrix with a dense label channel,
// dropping exact zeros so the CSR invariant holds.
inline SparseMatrix hstack_label_channel(const SparseMatrix& features,
                                         const DenseMatrix& channel) {
    if (features.rows != channel.rows) throw std::invalid_argument("hstack: row count mismatch");
    SparseMatrix out(features.rows, features.cols + channel.cols);
    out.col.reserve(features.nnz() + channel.rows * channel.cols);
    out.val.reserve(features.nnz() + channel.rows * channel.cols);
    for (std::size_t i = 0; i < features.rows; ++i) {
        for (std::size_t p = features.row_ptr[i]; p < features.row_ptr[i + 1]; ++p) {
            out.col.push_back(features.col[p]);
            out.val.push_back(features.val[p]);
        }
        for (std::size_t c = 0; c < channel.cols; ++c) {
            const double v = channel(i, c);
            if (v != 0.0) {
                out.col.push_back(features.cols + c);
                out.val.push_back(v);
            }
        }
        out.row_ptr[i + 1] = out.col.size();
    }
    return out;
}

// Variational objective for the classification network: expected
// log-likelihood under the label-conditional soft targets on the unlabeled
// set plus supervised log-likelihood on the labeled set (log floor 1e-12).
inline double objective_theta(const DenseMatrix& q_probs, const DenseMatrix& p_soft_targets,
                              const std::vector<int>& labels,
                              const std::vector<std::size_t>& labeled_set,
                              const std::vector<std::size_t>& unlabeled_set) {
    double obj = -cross_entropy_soft(q_probs, p_soft_targets, unlabeled_set);
    for (std::size_t n : labeled_set)
        obj += std::log(q_probs(n, static_cast<std::size_t>(labels[n])) + kLogFloor);
    return obj;
}

// Pseudo-likelihood objective for the label-conditional network: expected
// log-likelihood of the pseudo-labels over every node.
inline double objective_phi(const DenseMatrix& p_probs, const DenseMatrix& y_hat) {
    std::vector<std::size_t> all(p_probs.rows);
    for (std::size_t i = 0; i < all.size(); ++i) all[i] = i;
    return -cross_entropy_soft(p_probs, y_hat, all);
}

struct PhaseRecord {
    int loop = 0;            // 0 for the initial supervised fit
    std::string phase;       // "init", "M" or "E"
    std::string network;     // "q_theta" or "p_phi"
    double val_acc = 0.0;
    double val_loss = 0.0;
    double test_acc = std::numeric_limits<double>::quiet_NaN();  // NaN when test is off-limits
};

struct GmnnState {
    ModelParams theta;
    ModelParams phi;
    DenseMatrix y_hat;
    std::vector<PhaseRecord> history;  // 1 + 2*em_loops records

    double baseline_val_acc = 0.0;
    double baseline_test_acc = std::numeric_limits<double>::quiet_NaN();
    // phase-selected numbers: the phase with the best validation accuracy,
    // restricted to EM phases only (ties break toward the earlier phase)
    double p_phi_val_acc = 0.0, p_phi_test_acc = std::numeric_limits<double>::quiet_NaN();
    double q_theta_val_acc = 0.0, q_theta_test_acc = std::numeric_limits<double>::quiet_NaN();
    double best_val_acc = 0.0, best_test_acc = std::numeric_limits<double>::quiet_NaN();
};

// Optional test-set evaluation hook for reporting. Selection-time runs pass
// nullptr so held-out labels stay untouchable.
struct TestEval {
    const std::vector<std::size_t>* rows = nullptr;
    const std::vector<int>* labels = nullptr;
};

struct BaseRunResult {
    TrainOutcome outcome;
    double test_acc = std::numeric_limits<double>::quiet_NaN();
};

// A plain supervised run of the base model: parameter init and the whole
// training trajectory are a pure function of run_seed. The EM procedure uses
// the same routine for its initialization phase, which is what makes a
// zero-loop run bit-identical to the baseline.
inline BaseRunResult run_base_training(ModelKind kind, const HyperConfig& cfg,
                                       const ModelInputs& inputs, const EmSplit& split,
                                       const GuardedLabels& labels, int num_classes,
                                       const TrainSettings& ts, std::uint64_t run_seed,
                                       const TestEval* test = nullptr) {
    RngStream rng = RngStream::derive(run_seed, {0});
    ModelParams init = init_params(kind, inputs.features->cols, num_classes, cfg, rng);
    DenseMatrix targets = onehot_targets(labels, split.train, inputs.node_count(), num_classes);
    BaseRunResult r;
    r.outcome = train_model(std::move(init), inputs, cfg, split.train, targets, split.valid, labels,
                            ts, rng);
    if (test && test->rows && test->labels) {
        DenseMatrix probs = predict_probs(r.outcome.params, inputs, cfg);
        r.test_acc = accuracy(probs, *test->rows, *test->labels);
    }
    return r;
}

// The full EM procedure: initialize the classification network q on hard
// labels, then alternate M-steps (fit the label-conditional network p to
// pseudo-labeled neighborhoods) and E-steps (refit q against p's soft
// targets) for a fixed number of loops, tracking per-phase accuracy.
inline GmnnState em_train(const SparseGraph& graph, const GraphCache& cache,
                          const SparseMatrix& features, const EmSplit& split,
                          const GuardedLabels& labels, int num_classes, const GmnnConfig& cfg,
                          std::uint64_t run_seed, const TestEval* test = nullptr) {
    GmnnState st;
    const std::size_t n = features.rows;
    ModelInputs inputs_q{&features, &cache.adj_norm, &graph};

    // Phase 0: plain supervised baseline.
    BaseRunResult base = run_base_training(cfg.base, cfg.alpha, inputs_q, split, labels,
                                           num_classes, cfg.init_train, run_seed, test);
    st.theta = base.outcome.params;
    st.baseline_val_acc = base.outcome.val_acc_at_best;
    st.baseline_test_acc = base.test_acc;
    st.history.push_back({0, "init", "q_theta", base.outcome.val_acc_at_best,
                          base.outcome.best_val_loss, base.test_acc});

    const SparseMatrix& prop = cfg.label_self_loop ? cache.label_prop_self : cache.label_prop;
    const TrainSettings phase_ts{cfg.epochs_per_phase, cfg.phase_patience};
    std::vector<std::size_t> all_rows(n);
    for (std::size_t i = 0; i < n; ++i) all_rows[i] = i;

    SparseMatrix phi_features;
    ModelInputs inputs_p{&phi_features, &cache.adj_norm, &graph};
    bool phi_ready = false;

    for (int loop = 1; loop <= cfg.em_loops; ++loop) {
        // pseudo-labels from the current q
        RngStream rng_s = RngStream::derive(run_seed, {3 * static_cast<std::uint64_t>(loop)});
        DenseMatrix q_probs = predict_probs(st.theta, inputs_q, cfg.alpha);
        st.y_hat = annealed_sample(q_probs, labels, split.train, cfg.tau, rng_s, cfg.anneal);

        // M-step: p learns to predict each node's pseudo-label from its
        // neighborhood's pseudo-labels and the node features.
        DenseMatrix channel = spmm(prop, st.y_hat);
        phi_features = hstack_label_channel(features, channel);
        RngStream rng_m = RngStream::derive(run_seed, {3 * static_cast<std::uint64_t>(loop) + 1});
        if (!phi_ready) {
            st.phi = init_params(cfg.base, phi_features.cols, num_classes, cfg.beta, rng_m);
            phi_ready = true;
        }
        TrainOutcome m_out = train_model(st.phi, inputs_p, cfg.beta, all_rows, st.y_hat,
                                         split.valid, labels, phase_ts, rng_m);
        st.phi = m_out.params;
        double m_test = std::numeric_limits<double>::quiet_NaN();
        if (test && test->rows && test->labels) {
            DenseMatrix probs = predict_probs(st.phi, inputs_p, cfg.beta);
            m_test = accuracy(probs, *test->rows, *test->labels);
        }
        st.history.push_back({loop, "M", "p_phi", m_out.val_acc_at_best, m_out.best_val_loss, m_test});

        // E-step: q chases p's soft targets on unlabeled nodes and the ground
        // truth on labeled training nodes.
        DenseMatrix e_targets = predict_probs(st.phi, inputs_p, cfg.beta);
        for (std::size_t i : split.train) {
            for (std::size_t c = 0; c < e_targets.cols; ++c) e_targets(i, c) = 0.0;
            e_targets(i, static_cast<std::size_t>(labels.label(i))) = 1.0;
        }
        RngStream rng_e = RngStream::derive(run_seed, {3 * static_cast<std::uint64_t>(loop) + 2});
        TrainOutcome e_out = train_model(st.theta, inputs_q, cfg.alpha, all_rows, e_targets,
                                         split.valid, labels, phase_ts, rng_e);
        st.theta = e_out.params;
        double e_test = std::numeric_limits<double>::quiet_NaN();
        if (test && test->rows && test->labels) {
            DenseMatrix probs = predict_probs(st.theta, inputs_q, cfg.alpha);
            e_test = accuracy(probs, *test->rows, *test->labels);
        }
        st.history.push_back({loop, "E", "q_theta", e_out.val_acc_at_best, e_out.best_val_loss, e_test});
    }

    // Phase selection by validation accuracy, EM phases only; tie -> earliest.
    auto select = [&](const std::string& network, double& val_out, double& test_out) {
        bool found = false;
        for (const auto& rec : st.history) {
            if (rec.loop == 0) continue;
            if (!network.empty() && rec.network != network) continue;
            if (!found || rec.val_acc > val_out) {
                val_out = rec.val_acc;
                test_out = rec.test_acc;
                found = true;
            }
        }
        if (!found) {  // no EM phases ran: fall back to the baseline numbers
            val_out = st.baseline_val_acc;
            test_out = st.baseline_test_acc;
        }
    };
    select("p_phi", st.p_phi_val_acc, st.p_phi_test_acc);
    select("q_theta", st.q_theta_val_acc, st.q_theta_test_acc);
    select("", st.best_val_acc, st.best_test_acc);
    return st;
}

}  // namespace nclab
