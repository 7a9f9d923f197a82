#include <catch2/catch_amalgamated.hpp>

#include <numeric>

#include "nclab/splits.hpp"

using namespace nclab;

namespace {

NodeData labeled_data(const std::vector<std::size_t>& class_sizes) {
    NodeData d;
    d.num_classes = static_cast<int>(class_sizes.size());
    for (std::size_t c = 0; c < class_sizes.size(); ++c)
        for (std::size_t i = 0; i < class_sizes[c]; ++i) d.labels.push_back(static_cast<int>(c));
    d.features = SparseMatrix(d.labels.size(), 1);
    return d;
}

std::vector<std::size_t> class_histogram(const std::vector<std::size_t>& nodes, const NodeData& d) {
    std::vector<std::size_t> h(d.num_classes, 0);
    for (std::size_t n : nodes) ++h[d.labels[n]];
    return h;
}

}  // namespace

TEST_CASE("largest-remainder apportionment") {
    // class proportions 50/30/20 of 60 -> 30/18/12
    CHECK(detail::apportion({500, 300, 200}, 60) == std::vector<std::size_t>{30, 18, 12});
    CHECK(detail::apportion({60, 40}, 10) == std::vector<std::size_t>{6, 4});
    // remainders decide: 7/3 of 3 -> quotas 2.1/0.9 -> 2/1
    CHECK(detail::apportion({7, 3}, 3) == std::vector<std::size_t>{2, 1});
    CHECK_THROWS_AS(detail::apportion({2, 2}, 10), std::invalid_argument);
    // totals always add up on random inputs
    RngStream rng(1);
    for (int t = 0; t < 50; ++t) {
        std::vector<std::size_t> counts;
        std::size_t m = 0;
        for (int c = 0; c < 2 + static_cast<int>(rng.next_index(6)); ++c) {
            counts.push_back(1 + rng.next_index(50));
            m += counts.back();
        }
        std::size_t total = rng.next_index(m + 1);
        auto out = detail::apportion(counts, total);
        CHECK(std::accumulate(out.begin(), out.end(), std::size_t{0}) == total);
        for (std::size_t c = 0; c < counts.size(); ++c) CHECK(out[c] <= counts[c]);
    }
}

TEST_CASE("exactly divisible folds: 100 nodes, classes 60/40, k=10") {
    NodeData d = labeled_data({60, 40});
    RngStream rng(2);
    SplitSet ss = make_folds(d, 10, rng);
    REQUIRE(ss.folds.size() == 10);
    for (const auto& fold : ss.folds) {
        auto h = class_histogram(fold, d);
        CHECK(h[0] == 6);
        CHECK(h[1] == 4);
    }
    // 81/9/10 exactly
    for (const auto& sp : ss.splits) {
        CHECK(sp.test.size() == 10);
        CHECK(sp.valid.size() == 9);
        CHECK(sp.in_train.size() == 81);
    }
    CHECK(validate_splits(ss, d).empty());
}

TEST_CASE("folds partition the labeled nodes and stay stratified within one") {
    RngStream rng(3);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<std::size_t> sizes;
        int k = 3 + static_cast<int>(rng.next_index(8));
        for (int c = 0; c < 2 + static_cast<int>(rng.next_index(5)); ++c)
            sizes.push_back(k + rng.next_index(60));
        NodeData d = labeled_data(sizes);
        RngStream fold_rng(100 + trial);
        SplitSet ss = make_folds(d, k, fold_rng);

        std::vector<std::uint8_t> seen(d.node_count(), 0);
        std::size_t covered = 0;
        for (const auto& fold : ss.folds)
            for (std::size_t n : fold) {
                CHECK_FALSE(seen[n]);
                seen[n] = 1;
                ++covered;
            }
        CHECK(covered == d.node_count());

        // per-class fold counts differ by at most one (counting oracle)
        for (int c = 0; c < d.num_classes; ++c) {
            std::size_t lo = SIZE_MAX, hi = 0;
            for (const auto& fold : ss.folds) {
                auto h = class_histogram(fold, d);
                lo = std::min(lo, h[c]);
                hi = std::max(hi, h[c]);
            }
            CHECK(hi - lo <= 1);
        }
        CHECK(validate_splits(ss, d).empty());
    }
}

TEST_CASE("unlabeled nodes never enter folds") {
    NodeData d = labeled_data({30, 30});
    d.labels[5] = kUnlabeled;
    d.labels[35] = kUnlabeled;
    RngStream rng(4);
    SplitSet ss = make_folds(d, 5, rng);
    std::size_t covered = 0;
    for (const auto& fold : ss.folds) {
        covered += fold.size();
        for (std::size_t n : fold) CHECK(d.labels[n] != kUnlabeled);
    }
    CHECK(covered == 58);
}

TEST_CASE("a category smaller than k is rejected") {
    NodeData d = labeled_data({30, 4});
    RngStream rng(5);
    CHECK_THROWS_AS(make_folds(d, 10, rng), std::invalid_argument);
}

TEST_CASE("sparse sets: sizes, histograms and membership") {
    NodeData d = labeled_data({250, 150, 100});  // proportions 50/30/20
    RngStream rng(6);
    SplitSet ss = make_folds(d, 5, rng);
    make_sparse_sets(ss, d, rng);
    CHECK(ss.warnings.empty());
    for (const auto& sp : ss.splits) {
        REQUIRE(sp.sparse_balanced.size() == 60);    // 20*K
        REQUIRE(sp.sparse_stratified.size() == 60);  // 20*K
        auto hb = class_histogram(sp.sparse_balanced, d);
        for (std::size_t c = 0; c < 3; ++c) CHECK(hb[c] == 20);
        // stratified counts follow the in-train proportions by largest remainder
        auto hs = class_histogram(sp.sparse_stratified, d);
        auto in_train_h = class_histogram(sp.in_train, d);
        auto expect = detail::apportion(in_train_h, 60);
        CHECK(hs == expect);
        for (std::size_t n : sp.sparse_balanced)
            CHECK(std::binary_search(sp.in_train.begin(), sp.in_train.end(), n));
        for (std::size_t n : sp.sparse_stratified)
            CHECK(std::binary_search(sp.in_train.begin(), sp.in_train.end(), n));
    }
    CHECK(validate_splits(ss, d).empty());

    // near-even proportions: stratified counts land on 30/18/12 for 50/30/20
    auto h0 = class_histogram(ss.splits[0].in_train, d);
    auto expect0 = detail::apportion(h0, 60);
    const double total = static_cast<double>(h0[0] + h0[1] + h0[2]);
    for (std::size_t c = 0; c < 3; ++c)
        CHECK(std::abs(static_cast<double>(expect0[c]) - 60.0 * h0[c] / total) < 1.0);
}

TEST_CASE("balanced variant refuses when a class is too small, stratified proceeds") {
    NodeData d = labeled_data({200, 18});  // class 1 cannot give 20 per in-train
    RngStream rng(7);
    SplitSet ss = make_folds(d, 3, rng);
    make_sparse_sets(ss, d, rng);
    CHECK_FALSE(ss.warnings.empty());
    for (const auto& sp : ss.splits) {
        CHECK(sp.sparse_balanced.empty());
        CHECK(sp.sparse_stratified.size() == 40);
        CHECK_THROWS_AS(train_rows(sp, TrainVariant::SparseBalanced), std::invalid_argument);
        CHECK(train_rows(sp, TrainVariant::SparseStratified).size() == 40);
        CHECK(&train_rows(sp, TrainVariant::Dense) == &sp.in_train);
    }
}

TEST_CASE("split construction is deterministic and JSON round-trips") {
    NodeData d = labeled_data({120, 80, 100});
    RngStream r1(8), r2(8);
    SplitSet a = make_folds(d, 4, r1);
    make_sparse_sets(a, d, r1);
    SplitSet b = make_folds(d, 4, r2);
    make_sparse_sets(b, d, r2);
    REQUIRE(a.splits.size() == b.splits.size());
    for (std::size_t i = 0; i < a.splits.size(); ++i) {
        CHECK(a.splits[i].in_train == b.splits[i].in_train);
        CHECK(a.splits[i].valid == b.splits[i].valid);
        CHECK(a.splits[i].test == b.splits[i].test);
        CHECK(a.splits[i].sparse_balanced == b.splits[i].sparse_balanced);
        CHECK(a.splits[i].sparse_stratified == b.splits[i].sparse_stratified);
    }

    a.seed = 8;
    SplitSet c = splits_from_json(splits_to_json(a));
    CHECK(c.seed == a.seed);
    CHECK(c.k == a.k);
    CHECK(c.folds == a.folds);
    for (std::size_t i = 0; i < a.splits.size(); ++i) {
        CHECK(c.splits[i].in_train == a.splits[i].in_train);
        CHECK(c.splits[i].sparse_stratified == a.splits[i].sparse_stratified);
    }
}

TEST_CASE("validator catches planted violations") {
    NodeData d = labeled_data({60, 40});
    RngStream rng(9);
    SplitSet ss = make_folds(d, 5, rng);
    CHECK(validate_splits(ss, d).empty());

    SplitSet broken = ss;
    broken.splits[0].valid.push_back(broken.splits[0].test[0]);  // overlap
    CHECK_FALSE(validate_splits(broken, d).empty());

    SplitSet dup = ss;
    dup.folds[0].push_back(dup.folds[1][0]);
    CHECK_FALSE(validate_splits(dup, d).empty());
}

TEST_CASE("variant names round-trip") {
    for (TrainVariant v :
         {TrainVariant::Dense, TrainVariant::SparseBalanced, TrainVariant::SparseStratified})
        CHECK(train_variant_from_name(train_variant_name(v)) == v);
    CHECK_THROWS_AS(train_variant_from_name("bogus"), std::invalid_argument);
}
