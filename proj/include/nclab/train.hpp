#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclab/models.hpp"

namespace nclab {

struct TrainSettings {
    int max_epochs = 1000;
    int patience = 200;
};

// Patience-based stopping rule. An epoch "improves" when its validation loss
// (or, for the loss-and-accuracy criterion, its loss or accuracy) is strictly
// better than the best seen so far. Snapshots are always pinned to the epoch
// with the lowest validation loss.
class EarlyStopper {
public:
    EarlyStopper(int patience, bool also_track_accuracy)
        : patience_(patience), track_acc_(also_track_accuracy) {}

    struct Verdict {
        bool new_best_loss = false;  // caller should snapshot parameters
        bool stop = false;
    };

    Verdict observe(double val_loss, double val_acc) {
        ++epoch_;
        Verdict v;
        bool reset = false;
        if (val_loss < best_loss_) {
            best_loss_ = val_loss;
            best_loss_epoch_ = epoch_;
            v.new_best_loss = true;
            reset = true;
        }
        if (val_acc > best_acc_) {
            best_acc_ = val_acc;
            if (track_acc_) reset = true;
        }
        if (reset)
            since_improvement_ = 0;
        else
            ++since_improvement_;
        v.stop = since_improvement_ >= patience_;
        return v;
    }

    double best_loss() const { return best_loss_; }
    double best_acc() const { return best_acc_; }
    int best_loss_epoch() const { return best_loss_epoch_; }
    int epochs_seen() const { return epoch_; }

private:
    int patience_;
    bool track_acc_;
    int epoch_ = 0;
    int since_improvement_ = 0;
    double best_loss_ = std::numeric_limits<double>::infinity();
    double best_acc_ = -std::numeric_limits<double>::infinity();
    int best_loss_epoch_ = 0;
};

struct TrainOutcome {
    ModelParams params;       // state restored from the best-validation-loss epoch
    double best_val_loss = std::numeric_limits<double>::infinity();
    double best_val_acc = 0.0;    // best accuracy seen over all epochs
    double val_acc_at_best = 0.0; // accuracy at the restored epoch
    int epochs_run = 0;
    std::string stop_reason;      // "patience" or "max_epochs"
};

// Full-batch training with Adam. Targets may be soft distributions; hard
// labels are the one-hot special case. Validation loss and accuracy are
// measured against ground-truth labels each epoch, and the returned
// parameters come from the epoch with the lowest validation loss.
inline TrainOutcome train_model(ModelParams params, const ModelInputs& in, const HyperConfig& cfg,
                                const std::vector<std::size_t>& train_rows,
                                const DenseMatrix& targets,
                                const std::vector<std::size_t>& valid_rows,
                                const GuardedLabels& labels, const TrainSettings& ts,
                                RngStream& rng) {
    if (train_rows.empty()) throw std::invalid_argument("train_model: empty train set");
    if (valid_rows.empty()) throw std::invalid_argument("train_model: empty validation set");
    if (targets.rows != in.node_count() ||
        targets.cols != params.num_classes())
        throw std::invalid_argument("train_model: target shape mismatch");

    const DenseMatrix valid_onehot =
        onehot_targets(labels, valid_rows, in.node_count(), static_cast<int>(params.num_classes()));

    AdamState st_w0(params.w0.v.size()), st_b0(params.b0.size());
    AdamState st_w1(params.w1.v.size()), st_b1(params.b1.size());
    AdamState st_g0(params.gate0.size()), st_g1(params.gate1.size());

    const bool fagcn = params.kind == ModelKind::Fagcn;
    EarlyStopper stopper(ts.patience, /*also_track_accuracy=*/fagcn);

    TrainOutcome out;
    out.params = params;
    out.stop_reason = "max_epochs";

    for (int epoch = 1; epoch <= ts.max_epochs; ++epoch) {
        ForwardCache fc = model_forward(params, in, cfg, /*training=*/true, rng);
        DenseMatrix dlogits;
        const double train_loss = softmax_ce_loss(fc.logits, targets, train_rows, &dlogits);
        if (!std::isfinite(train_loss))
            throw std::runtime_error("train_model: non-finite training loss at epoch " +
                                     std::to_string(epoch) + " (lr=" + std::to_string(cfg.learning_rate) + ")");
        ModelGrads g = model_backward(params, in, cfg, fc, dlogits);

        adam_step(params.w0, g.w0, st_w0, cfg.learning_rate, cfg.l2);
        adam_step(params.b0, g.b0, st_b0, cfg.learning_rate, cfg.l2);
        adam_step(params.w1, g.w1, st_w1, cfg.learning_rate, cfg.l2);
        adam_step(params.b1, g.b1, st_b1, cfg.learning_rate, cfg.l2);
        if (fagcn) {
            adam_step(params.gate0, g.gate0, st_g0, cfg.learning_rate, cfg.l2);
            adam_step(params.gate1, g.gate1, st_g1, cfg.learning_rate, cfg.l2);
        }

        RngStream eval_unused(0);
        ForwardCache ec = model_forward(params, in, cfg, /*training=*/false, eval_unused);
        const double val_loss =
            softmax_ce_loss(ec.logits, valid_onehot, valid_rows, nullptr);
        if (!std::isfinite(val_loss))
            throw std::runtime_error("train_model: non-finite validation loss at epoch " +
                                     std::to_string(epoch));
        const double val_acc = accuracy(ec.logits, valid_rows, labels);

        auto verdict = stopper.observe(val_loss, val_acc);
        if (verdict.new_best_loss) {
            out.params = params;
            out.val_acc_at_best = val_acc;
        }
        out.epochs_run = epoch;
        if (verdict.stop) {
            out.stop_reason = "patience";
            break;
        }
    }

    out.best_val_loss = stopper.best_loss();
    out.best_val_acc = stopper.best_acc();
    return out;
}

}  // namespace nclab
