#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "nclab/matrix.hpp"
#include "nclab/rng.hpp"

using namespace nclab;

namespace {

// Brute-force oracle: materialize the sparse operand and multiply densely.
DenseMatrix dense_product(const SparseMatrix& a, const DenseMatrix& b) {
    DenseMatrix ad = a.to_dense();
    DenseMatrix c(ad.rows, b.cols);
    for (std::size_t i = 0; i < ad.rows; ++i)
        for (std::size_t j = 0; j < ad.cols; ++j)
            for (std::size_t k = 0; k < b.cols; ++k) c(i, k) += ad(i, j) * b(j, k);
    return c;
}

SparseMatrix random_sparse(std::size_t r, std::size_t c, double density, RngStream& rng) {
    std::vector<std::tuple<std::size_t, std::size_t, double>> t;
    for (std::size_t i = 0; i < r; ++i)
        for (std::size_t j = 0; j < c; ++j)
            if (rng.next_double() < density) t.emplace_back(i, j, rng.uniform(-2.0, 2.0));
    return SparseMatrix::from_triplets(r, c, t);
}

DenseMatrix random_dense(std::size_t r, std::size_t c, RngStream& rng) {
    DenseMatrix m(r, c);
    for (double& x : m.v) x = rng.uniform(-2.0, 2.0);
    return m;
}

double max_abs_diff(const DenseMatrix& a, const DenseMatrix& b) {
    REQUIRE(a.rows == b.rows);
    REQUIRE(a.cols == b.cols);
    double m = 0.0;
    for (std::size_t i = 0; i < a.v.size(); ++i) m = std::max(m, std::abs(a.v[i] - b.v[i]));
    return m;
}

}  // namespace

TEST_CASE("spmm identity and zero") {
    RngStream rng(7);
    DenseMatrix b = random_dense(2, 3, rng);
    CHECK(max_abs_diff(spmm(SparseMatrix::identity(2), b), b) == 0.0);

    SparseMatrix zero(2, 2);
    DenseMatrix z = spmm(zero, b);
    for (double x : z.v) CHECK(x == 0.0);
}

TEST_CASE("spmm matches dense oracle on a random 5x5 instance") {
    RngStream rng(11);
    SparseMatrix a = random_sparse(5, 5, 0.3, rng);
    DenseMatrix b = random_dense(5, 3, rng);
    CHECK(max_abs_diff(spmm(a, b), dense_product(a, b)) < 1e-12);
}

TEST_CASE("spmm matches dense oracle on many random instances") {
    RngStream rng(13);
    for (int trial = 0; trial < 30; ++trial) {
        std::size_t r = 1 + rng.next_index(12), m = 1 + rng.next_index(12), c = 1 + rng.next_index(6);
        SparseMatrix a = random_sparse(r, m, 0.4, rng);
        DenseMatrix b = random_dense(m, c, rng);
        DenseMatrix got = spmm(a, b);
        DenseMatrix want = dense_product(a, b);
        for (std::size_t i = 0; i < got.v.size(); ++i) {
            double denom = std::max(std::abs(want.v[i]), 1.0);
            CHECK(std::abs(got.v[i] - want.v[i]) / denom < 1e-12);
        }
    }
}

TEST_CASE("spmm rejects mismatched dimensions") {
    SparseMatrix a(2, 3);
    DenseMatrix b(2, 2);
    CHECK_THROWS_AS(spmm(a, b), std::invalid_argument);
}

TEST_CASE("spmm_transposed matches transpose oracle") {
    RngStream rng(17);
    SparseMatrix a = random_sparse(6, 4, 0.5, rng);
    DenseMatrix b = random_dense(6, 3, rng);
    DenseMatrix got = spmm_transposed(a, b);
    DenseMatrix ad = a.to_dense();
    DenseMatrix want(4, 3);
    for (std::size_t i = 0; i < 6; ++i)
        for (std::size_t j = 0; j < 4; ++j)
            for (std::size_t k = 0; k < 3; ++k) want(j, k) += ad(i, j) * b(i, k);
    CHECK(max_abs_diff(got, want) < 1e-12);
}

TEST_CASE("dense matmul variants agree with naive loops") {
    RngStream rng(19);
    DenseMatrix a = random_dense(4, 5, rng), b = random_dense(5, 3, rng);
    DenseMatrix ab = matmul(a, b);
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0;
            for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * b(j, k);
            CHECK(ab(i, k) == Catch::Approx(s).margin(1e-12));
        }
    DenseMatrix at = random_dense(5, 4, rng);
    DenseMatrix tn = matmul_tn(at, b);  // at^T (4x5) * b (5x3)
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0;
            for (std::size_t j = 0; j < 5; ++j) s += at(j, i) * b(j, k);
            CHECK(tn(i, k) == Catch::Approx(s).margin(1e-12));
        }
    DenseMatrix bt = random_dense(3, 5, rng);
    DenseMatrix nt = matmul_nt(a, bt);  // a (4x5) * bt^T (5x3)
    for (std::size_t i = 0; i < 4; ++i)
        for (std::size_t k = 0; k < 3; ++k) {
            double s = 0;
            for (std::size_t j = 0; j < 5; ++j) s += a(i, j) * bt(k, j);
            CHECK(nt(i, k) == Catch::Approx(s).margin(1e-12));
        }
}

TEST_CASE("from_triplets sorts, merges duplicates and drops zeros") {
    SparseMatrix m = SparseMatrix::from_triplets(
        2, 3, {{1, 2, 1.0}, {0, 1, 2.0}, {0, 1, 3.0}, {1, 0, 4.0}, {0, 2, 1.0}, {0, 2, -1.0}});
    REQUIRE(m.nnz() == 3);
    DenseMatrix d = m.to_dense();
    CHECK(d(0, 1) == 5.0);
    CHECK(d(0, 2) == 0.0);
    CHECK(d(1, 0) == 4.0);
    CHECK(d(1, 2) == 1.0);
    // strictly increasing column indices within each row
    for (std::size_t i = 0; i < m.rows; ++i)
        for (std::size_t p = m.row_ptr[i] + 1; p < m.row_ptr[i + 1]; ++p)
            CHECK(m.col[p - 1] < m.col[p]);
}

TEST_CASE("l1_row_normalize") {
    SparseMatrix m = SparseMatrix::from_triplets(3, 4, {{0, 0, 1.0}, {0, 2, 1.0},
                                                        {2, 0, 2.0}, {2, 1, 1.0}, {2, 2, 1.0}});
    SparseMatrix n = l1_row_normalize(m);
    DenseMatrix d = n.to_dense();
    CHECK(d(0, 0) == 0.5);
    CHECK(d(0, 2) == 0.5);
    for (std::size_t j = 0; j < 4; ++j) CHECK(d(1, j) == 0.0);  // all-zero row untouched
    CHECK(d(2, 0) == 0.5);
    CHECK(d(2, 1) == 0.25);
    CHECK(d(2, 2) == 0.25);
    SparseMatrix neg = SparseMatrix::from_triplets(1, 1, {{0, 0, -1.0}});
    CHECK_THROWS_AS(l1_row_normalize(neg), std::invalid_argument);
}

TEST_CASE("softmax_rows closed forms and stability") {
    DenseMatrix m(3, 2);
    m(0, 0) = 0;
    m(0, 1) = 0;
    m(1, 0) = 1000;
    m(1, 1) = 0;
    m(2, 0) = 1;
    m(2, 1) = 2;
    DenseMatrix s = softmax_rows(m);
    CHECK(s(0, 0) == Catch::Approx(0.5).margin(1e-12));
    CHECK(s(1, 0) == Catch::Approx(1.0).margin(1e-12));
    CHECK(s(1, 1) == Catch::Approx(0.0).margin(1e-12));
    const double e = std::exp(1.0);
    CHECK(s(2, 0) == Catch::Approx(1.0 / (1.0 + e)).margin(1e-12));
    CHECK(s(2, 1) == Catch::Approx(e / (1.0 + e)).margin(1e-12));

    DenseMatrix u(2, 3);
    u(0, 0) = 0;
    u(0, 1) = 0;
    u(0, 2) = 0;
    DenseMatrix su = softmax_rows(u);
    for (std::size_t j = 0; j < 3; ++j) CHECK(su(0, j) == Catch::Approx(1.0 / 3).margin(1e-12));
}

TEST_CASE("softmax rows sum to one for extreme magnitudes") {
    RngStream rng(23);
    DenseMatrix m(50, 5);
    for (double& x : m.v) x = rng.uniform(-1e6, 1e6);
    DenseMatrix s = softmax_rows(m);
    for (std::size_t i = 0; i < s.rows; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < s.cols; ++j) {
            sum += s(i, j);
            CHECK(s(i, j) >= 0.0);
        }
        CHECK(std::abs(sum - 1.0) < 1e-9);
    }
}

TEST_CASE("cross_entropy_soft closed forms") {
    DenseMatrix onehot(1, 2);
    onehot(0, 0) = 1.0;
    CHECK(cross_entropy_soft(onehot, onehot, {0}) == Catch::Approx(0.0).margin(1e-9));

    DenseMatrix half(1, 2);
    half(0, 0) = 0.5;
    half(0, 1) = 0.5;
    CHECK(cross_entropy_soft(half, onehot, {0}) == Catch::Approx(std::log(2.0)).margin(1e-9));

    DenseMatrix uni(1, 4);
    for (std::size_t j = 0; j < 4; ++j) uni(0, j) = 0.25;
    CHECK(cross_entropy_soft(uni, uni, {0}) == Catch::Approx(std::log(4.0)).margin(1e-9));

    CHECK_THROWS_AS(cross_entropy_soft(uni, uni, {5}), std::out_of_range);
}

TEST_CASE("argmax tie-break picks the lowest index") {
    DenseMatrix m(1, 3);
    m(0, 0) = 1.0;
    m(0, 1) = 1.0;
    m(0, 2) = 0.5;
    CHECK(argmax_row(m, 0) == 0);
}
