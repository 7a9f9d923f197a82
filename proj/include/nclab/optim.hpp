#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <stdexcept>
#include <vector>

#include "nclab/matrix.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// Adam accumulators for one parameter tensor (viewed flat).
struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    long long t = 0;

    static constexpr double beta1 = 0.9;
    static constexpr double beta2 = 0.999;
    static constexpr double eps = 1e-8;

    explicit AdamState(std::size_t n = 0) : m(n, 0.0), v(n, 0.0) {}
};

// One Adam update with bias correction. L2 regularization enters as an extra
// gradient term 2*l2*param on every coordinate, weights and biases alike.
inline void adam_step(double* params, const double* grads, std::size_t n, AdamState& state,
                      double lr, double l2) {
    if (state.m.size() != n || state.v.size() != n)
        throw std::invalid_argument("adam_step: state shape mismatch");
    state.t += 1;
    const double bc1 = 1.0 - std::pow(AdamState::beta1, static_cast<double>(state.t));
    const double bc2 = 1.0 - std::pow(AdamState::beta2, static_cast<double>(state.t));
    for (std::size_t i = 0; i < n; ++i) {
        const double g = grads[i] + 2.0 * l2 * params[i];
        state.m[i] = AdamState::beta1 * state.m[i] + (1.0 - AdamState::beta1) * g;
        state.v[i] = AdamState::beta2 * state.v[i] + (1.0 - AdamState::beta2) * g * g;
        const double mhat = state.m[i] / bc1;
        const double vhat = state.v[i] / bc2;
        params[i] -= lr * mhat / (std::sqrt(vhat) + AdamState::eps);
    }
}

inline void adam_step(DenseMatrix& params, const DenseMatrix& grads, AdamState& state, double lr,
                      double l2) {
    if (!params.same_shape(grads)) throw std::invalid_argument("adam_step: grad shape mismatch");
    adam_step(params.v.data(), grads.v.data(), params.v.size(), state, lr, l2);
}

inline void adam_step(std::vector<double>& params, const std::vector<double>& grads,
                      AdamState& state, double lr, double l2) {
    if (params.size() != grads.size()) throw std::invalid_argument("adam_step: grad shape mismatch");
    adam_step(params.data(), grads.data(), params.size(), state, lr, l2);
}

// Glorot/Xavier uniform init on [-s, s] with s = sqrt(6/(fan_in + fan_out)).
inline DenseMatrix glorot_init(std::size_t rows, std::size_t cols, RngStream& rng) {
    if (rows == 0 || cols == 0) throw std::invalid_argument("glorot_init: empty shape");
    const double s = std::sqrt(6.0 / static_cast<double>(rows + cols));
    DenseMatrix m(rows, cols);
    for (double& x : m.v) x = rng.uniform(-s, s);
    return m;
}

inline std::vector<double> glorot_init_vector(std::size_t n, RngStream& rng) {
    DenseMatrix m = glorot_init(n, 1, rng);
    return m.v;
}

// Inverted-dropout mask: entries are 0 with probability `rate`, else
// 1/(1-rate). Evaluation mode never applies a mask.
inline DenseMatrix dropout_mask(std::size_t rows, std::size_t cols, double rate, RngStream& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout_mask: rate must be in [0,1)");
    DenseMatrix m(rows, cols);
    const double keep_scale = 1.0 / (1.0 - rate);
    for (double& x : m.v) x = rng.next_double() < rate ? 0.0 : keep_scale;
    return m;
}

inline void apply_mask(DenseMatrix& m, const DenseMatrix& mask) {
    if (!m.same_shape(mask)) throw std::invalid_argument("apply_mask: shape mismatch");
    for (std::size_t i = 0; i < m.v.size(); ++i) m.v[i] *= mask.v[i];
}

// Inverted dropout on a sparse matrix. Only stored entries can be nonzero, so
// masking the zeros is a no-op; dropped entries are removed from the pattern.
inline SparseMatrix dropout_sparse(const SparseMatrix& m, double rate, RngStream& rng) {
    if (rate < 0.0 || rate >= 1.0) throw std::invalid_argument("dropout_sparse: rate must be in [0,1)");
    if (rate == 0.0) return m;
    const double keep_scale = 1.0 / (1.0 - rate);
    SparseMatrix out(m.rows, m.cols);
    out.col.reserve(m.nnz());
    out.val.reserve(m.nnz());
    for (std::size_t i = 0; i < m.rows; ++i) {
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) {
            if (rng.next_double() >= rate) {
                out.col.push_back(m.col[p]);
                out.val.push_back(m.val[p] * keep_scale);
            }
        }
        out.row_ptr[i + 1] = out.col.size();
    }
    return out;
}

// Central-difference gradient of a deterministic scalar function over a flat
// parameter buffer. The buffer is perturbed in place and restored.
inline std::vector<double> finite_diff_grad(const std::function<double()>& loss, double* params,
                                            std::size_t n, double h = 1e-5) {
    std::vector<double> g(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        const double saved = params[i];
        params[i] = saved + h;
        const double fp = loss();
        params[i] = saved - h;
        const double fm = loss();
        params[i] = saved;
        g[i] = (fp - fm) / (2.0 * h);
    }
    return g;
}

inline DenseMatrix finite_diff_grad(const std::function<double(const DenseMatrix&)>& loss,
                                    const DenseMatrix& params, double h = 1e-5) {
    DenseMatrix work = params;
    DenseMatrix g(params.rows, params.cols);
    g.v = finite_diff_grad([&] { return loss(work); }, work.v.data(), work.v.size(), h);
    return g;
}

}  // namespace nclab
