#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <tuple>
#include <vector>

namespace nclab {

// Row-major dense matrix of doubles.
struct DenseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> v;  // rows * cols entries

    DenseMatrix() = default;
    DenseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), v(r * c, 0.0) {}

    double& operator()(std::size_t i, std::size_t j) { return v[i * cols + j]; }
    double operator()(std::size_t i, std::size_t j) const { return v[i * cols + j]; }

    double* row(std::size_t i) { return v.data() + i * cols; }
    const double* row(std::size_t i) const { return v.data() + i * cols; }

    bool same_shape(const DenseMatrix& o) const { return rows == o.rows && cols == o.cols; }

    void fill(double x) { std::fill(v.begin(), v.end(), x); }
};

// Compressed sparse row matrix. Invariants: row_ptr has rows+1 nondecreasing
// entries, column indices are strictly increasing within each row, and no
// explicit zeros are stored.
struct SparseMatrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::size_t> row_ptr;  // rows + 1
    std::vector<std::size_t> col;
    std::vector<double> val;

    SparseMatrix() : row_ptr(1, 0) {}
    SparseMatrix(std::size_t r, std::size_t c) : rows(r), cols(c), row_ptr(r + 1, 0) {}

    std::size_t nnz() const { return val.size(); }

    // Builds CSR from (row, col, value) triplets. Duplicate coordinates are
    // summed; entries that end up exactly zero are dropped.
    static SparseMatrix from_triplets(std::size_t rows, std::size_t cols,
                                      std::vector<std::tuple<std::size_t, std::size_t, double>> t) {
        for (const auto& [i, j, x] : t) {
            (void)x;
            if (i >= rows || j >= cols)
                throw std::out_of_range("from_triplets: coordinate out of range");
        }
        std::sort(t.begin(), t.end(), [](const auto& a, const auto& b) {
            return std::get<0>(a) != std::get<0>(b) ? std::get<0>(a) < std::get<0>(b)
                                                    : std::get<1>(a) < std::get<1>(b);
        });
        SparseMatrix m(rows, cols);
        m.col.reserve(t.size());
        m.val.reserve(t.size());
        std::size_t p = 0;
        for (std::size_t i = 0; i < rows; ++i) {
            while (p < t.size() && std::get<0>(t[p]) == i) {
                std::size_t j = std::get<1>(t[p]);
                double x = std::get<2>(t[p]);
                ++p;
                while (p < t.size() && std::get<0>(t[p]) == i && std::get<1>(t[p]) == j) {
                    x += std::get<2>(t[p]);
                    ++p;
                }
                if (x != 0.0) {
                    m.col.push_back(j);
                    m.val.push_back(x);
                }
            }
            m.row_ptr[i + 1] = m.col.size();
        }
        return m;
    }

    static SparseMatrix identity(std::size_t n) {
        SparseMatrix m(n, n);
        m.col.resize(n);
        m.val.assign(n, 1.0);
        for (std::size_t i = 0; i < n; ++i) {
            m.col[i] = i;
            m.row_ptr[i + 1] = i + 1;
        }
        return m;
    }

    DenseMatrix to_dense() const {
        DenseMatrix d(rows, cols);
        for (std::size_t i = 0; i < rows; ++i)
            for (std::size_t p = row_ptr[i]; p < row_ptr[i + 1]; ++p)
                d(i, col[p]) = val[p];
        return d;
    }
};

// C = A * B with A sparse and B dense.
inline DenseMatrix spmm(const SparseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows)
        throw std::invalid_argument("spmm: inner dimensions disagree (" +
                                    std::to_string(a.cols) + " vs " + std::to_string(b.rows) + ")");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            const double av = a.val[p];
            const double* bj = b.row(a.col[p]);
            for (std::size_t k = 0; k < b.cols; ++k) ci[k] += av * bj[k];
        }
    }
    return c;
}

// C = A^T * B with A sparse and B dense (scatter along A's rows).
inline DenseMatrix spmm_transposed(const SparseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows)
        throw std::invalid_argument("spmm_transposed: inner dimensions disagree");
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* bi = b.row(i);
        for (std::size_t p = a.row_ptr[i]; p < a.row_ptr[i + 1]; ++p) {
            double* cj = c.row(a.col[p]);
            const double av = a.val[p];
            for (std::size_t k = 0; k < b.cols; ++k) cj[k] += av * bi[k];
        }
    }
    return c;
}

inline DenseMatrix matmul(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.rows) throw std::invalid_argument("matmul: inner dimensions disagree");
    DenseMatrix c(a.rows, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        double* ci = c.row(i);
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) {
            const double av = ai[j];
            if (av == 0.0) continue;
            const double* bj = b.row(j);
            for (std::size_t k = 0; k < b.cols; ++k) ci[k] += av * bj[k];
        }
    }
    return c;
}

// C = A^T * B.
inline DenseMatrix matmul_tn(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.rows != b.rows) throw std::invalid_argument("matmul_tn: inner dimensions disagree");
    DenseMatrix c(a.cols, b.cols);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        const double* bi = b.row(i);
        for (std::size_t j = 0; j < a.cols; ++j) {
            const double av = ai[j];
            if (av == 0.0) continue;
            double* cj = c.row(j);
            for (std::size_t k = 0; k < b.cols; ++k) cj[k] += av * bi[k];
        }
    }
    return c;
}

// C = A * B^T.
inline DenseMatrix matmul_nt(const DenseMatrix& a, const DenseMatrix& b) {
    if (a.cols != b.cols) throw std::invalid_argument("matmul_nt: inner dimensions disagree");
    DenseMatrix c(a.rows, b.rows);
    for (std::size_t i = 0; i < a.rows; ++i) {
        const double* ai = a.row(i);
        for (std::size_t j = 0; j < b.rows; ++j) {
            const double* bj = b.row(j);
            double s = 0.0;
            for (std::size_t k = 0; k < a.cols; ++k) s += ai[k] * bj[k];
            c(i, j) = s;
        }
    }
    return c;
}

inline void add_row_vector(DenseMatrix& m, const std::vector<double>& bias) {
    if (bias.size() != m.cols) throw std::invalid_argument("add_row_vector: size mismatch");
    for (std::size_t i = 0; i < m.rows; ++i) {
        double* mi = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) mi[j] += bias[j];
    }
}

inline std::vector<double> column_sums(const DenseMatrix& m) {
    std::vector<double> s(m.cols, 0.0);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* mi = m.row(i);
        for (std::size_t j = 0; j < m.cols; ++j) s[j] += mi[j];
    }
    return s;
}

inline DenseMatrix relu(const DenseMatrix& m) {
    DenseMatrix r = m;
    for (double& x : r.v) x = x > 0.0 ? x : 0.0;
    return r;
}

// Scales each row of a nonnegative sparse matrix to unit L1 norm.
// All-zero rows are left untouched.
inline SparseMatrix l1_row_normalize(const SparseMatrix& m) {
    for (double x : m.val)
        if (x < 0.0) throw std::invalid_argument("l1_row_normalize: negative entry");
    SparseMatrix out = m;
    for (std::size_t i = 0; i < m.rows; ++i) {
        double s = 0.0;
        for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) s += m.val[p];
        if (s > 0.0)
            for (std::size_t p = m.row_ptr[i]; p < m.row_ptr[i + 1]; ++p) out.val[p] /= s;
    }
    return out;
}

// Row-wise softmax with max subtraction for overflow safety.
inline DenseMatrix softmax_rows(const DenseMatrix& m) {
    DenseMatrix out(m.rows, m.cols);
    for (std::size_t i = 0; i < m.rows; ++i) {
        const double* mi = m.row(i);
        double* oi = out.row(i);
        double mx = mi[0];
        for (std::size_t j = 1; j < m.cols; ++j) mx = std::max(mx, mi[j]);
        double s = 0.0;
        for (std::size_t j = 0; j < m.cols; ++j) {
            oi[j] = std::exp(mi[j] - mx);
            s += oi[j];
        }
        for (std::size_t j = 0; j < m.cols; ++j) oi[j] /= s;
    }
    return out;
}

inline constexpr double kLogFloor = 1e-12;

// Total cross-entropy of row-stochastic predictions against (possibly soft)
// row-stochastic targets: -sum over rows in `row_set` of sum_k t*log(p + 1e-12).
inline double cross_entropy_soft(const DenseMatrix& pred_probs, const DenseMatrix& target_probs,
                                 const std::vector<std::size_t>& row_set) {
    if (!pred_probs.same_shape(target_probs))
        throw std::invalid_argument("cross_entropy_soft: shape mismatch");
    double loss = 0.0;
    for (std::size_t n : row_set) {
        if (n >= pred_probs.rows) throw std::out_of_range("cross_entropy_soft: row out of range");
        const double* p = pred_probs.row(n);
        const double* t = target_probs.row(n);
        for (std::size_t k = 0; k < pred_probs.cols; ++k) {
            if (t[k] != 0.0) loss -= t[k] * std::log(p[k] + kLogFloor);
        }
    }
    return loss;
}

// Argmax with lowest-index tie-break, for deterministic predictions.
inline std::size_t argmax_row(const DenseMatrix& m, std::size_t i) {
    const double* mi = m.row(i);
    std::size_t best = 0;
    for (std::size_t j = 1; j < m.cols; ++j)
        if (mi[j] > mi[best]) best = j;
    return best;
}

}  // namespace nclab
