#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nclab/graph.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// One train/valid/test split plus its two sparse train variants.
struct FoldSplit {
    std::vector<std::size_t> in_train;
    std::vector<std::size_t> valid;
    std::vector<std::size_t> test;
    std::vector<std::size_t> sparse_balanced;    // 20 per class; empty when infeasible
    std::vector<std::size_t> sparse_stratified;  // 20*K, largest-remainder proportions
};

struct SplitSet {
    std::uint64_t seed = 0;
    int k = 0;
    std::vector<std::vector<std::size_t>> folds;
    std::vector<FoldSplit> splits;
    std::vector<std::string> warnings;
};

enum class TrainVariant { Dense, SparseBalanced, SparseStratified };

inline std::string train_variant_name(TrainVariant v) {
    switch (v) {
        case TrainVariant::Dense: return "dense";
        case TrainVariant::SparseBalanced: return "sparse-balanced";
        case TrainVariant::SparseStratified: return "sparse-stratified";
    }
    return "?";
}

inline TrainVariant train_variant_from_name(const std::string& s) {
    if (s == "dense") return TrainVariant::Dense;
    if (s == "sparse-balanced") return TrainVariant::SparseBalanced;
    if (s == "sparse-stratified") return TrainVariant::SparseStratified;
    throw std::invalid_argument("unknown train variant '" + s + "'");
}

inline const std::vector<std::size_t>& train_rows(const FoldSplit& s, TrainVariant v) {
    switch (v) {
        case TrainVariant::Dense: return s.in_train;
        case TrainVariant::SparseBalanced:
            if (s.sparse_balanced.empty())
                throw std::invalid_argument(
                    "sparse-balanced train set unavailable (a category has fewer than 20 "
                    "in-train nodes)");
            return s.sparse_balanced;
        case TrainVariant::SparseStratified: return s.sparse_stratified;
    }
    throw std::logic_error("unreachable");
}

namespace detail {

// Largest-remainder apportionment of `total` over the given class counts.
// Ties on the remainder break toward the lower class index.
inline std::vector<std::size_t> apportion(const std::vector<std::size_t>& class_counts,
                                          std::size_t total) {
    const std::size_t m = std::accumulate(class_counts.begin(), class_counts.end(), std::size_t{0});
    if (total > m) throw std::invalid_argument("apportion: total exceeds population");
    const std::size_t k = class_counts.size();
    std::vector<std::size_t> out(k, 0);
    std::vector<std::pair<double, std::size_t>> remainders;  // (-frac, class)
    std::size_t assigned = 0;
    for (std::size_t c = 0; c < k; ++c) {
        const double quota =
            static_cast<double>(total) * static_cast<double>(class_counts[c]) / static_cast<double>(m);
        out[c] = static_cast<std::size_t>(std::floor(quota));
        assigned += out[c];
        remainders.emplace_back(-(quota - std::floor(quota)), c);
    }
    std::sort(remainders.begin(), remainders.end());
    for (std::size_t i = 0; assigned < total; ++i) {
        const std::size_t c = remainders[i % k].second;
        if (out[c] < class_counts[c]) {
            ++out[c];
            ++assigned;
        }
    }
    return out;
}

inline std::vector<std::vector<std::size_t>> group_by_class(const NodeData& d,
                                                            const std::vector<std::size_t>& nodes) {
    std::vector<std::vector<std::size_t>> groups(d.num_classes);
    for (std::size_t n : nodes) {
        const int y = d.labels[n];
        if (y != kUnlabeled) groups[static_cast<std::size_t>(y)].push_back(n);
    }
    return groups;
}

inline void sort_ids(std::vector<std::size_t>& v) { std::sort(v.begin(), v.end()); }

}  // namespace detail

// Splits the labeled nodes into k disjoint stratified folds and derives one
// train/valid/test triple per fold: test is the fold, the rest splits 90/10
// (stratified, largest remainder) into in-train and validation, giving the
// 81/9/10 overall ratio when sizes divide evenly.
inline SplitSet make_folds(const NodeData& d, int k, RngStream& rng) {
    if (k < 2) throw std::invalid_argument("make_folds: k must be at least 2");
    SplitSet ss;
    ss.k = k;
    ss.folds.assign(k, {});

    auto groups = detail::group_by_class(d, d.labeled_nodes());
    for (std::size_t c = 0; c < groups.size(); ++c) {
        if (groups[c].size() < static_cast<std::size_t>(k))
            throw std::invalid_argument("make_folds: category " + std::to_string(c) + " has " +
                                        std::to_string(groups[c].size()) + " nodes, fewer than k=" +
                                        std::to_string(k));
        rng.shuffle(groups[c]);
        // spread the remainder over a random subset of folds so no fold
        // systematically collects the extras
        std::vector<std::size_t> fold_order(k);
        std::iota(fold_order.begin(), fold_order.end(), 0);
        rng.shuffle(fold_order);
        const std::size_t base = groups[c].size() / k;
        const std::size_t extra = groups[c].size() % k;
        std::size_t at = 0;
        for (std::size_t fi = 0; fi < static_cast<std::size_t>(k); ++fi) {
            const std::size_t take = base + (fi < extra ? 1 : 0);
            auto& fold = ss.folds[fold_order[fi]];
            fold.insert(fold.end(), groups[c].begin() + at, groups[c].begin() + at + take);
            at += take;
        }
    }
    for (auto& f : ss.folds) detail::sort_ids(f);

    ss.splits.resize(k);
    for (int i = 0; i < k; ++i) {
        FoldSplit& sp = ss.splits[i];
        sp.test = ss.folds[i];
        std::vector<std::size_t> train_all;
        for (int j = 0; j < k; ++j)
            if (j != i) train_all.insert(train_all.end(), ss.folds[j].begin(), ss.folds[j].end());

        auto train_groups = detail::group_by_class(d, train_all);
        std::vector<std::size_t> class_counts(train_groups.size());
        for (std::size_t c = 0; c < train_groups.size(); ++c) class_counts[c] = train_groups[c].size();
        const auto total_valid = static_cast<std::size_t>(
            std::llround(0.1 * static_cast<double>(train_all.size())));
        auto valid_counts = detail::apportion(class_counts, total_valid);
        for (std::size_t c = 0; c < train_groups.size(); ++c) {
            auto picked = rng.sample_without_replacement(train_groups[c], valid_counts[c]);
            sp.valid.insert(sp.valid.end(), picked.begin(), picked.end());
            std::sort(picked.begin(), picked.end());
            for (std::size_t node : train_groups[c])
                if (!std::binary_search(picked.begin(), picked.end(), node))
                    sp.in_train.push_back(node);
        }
        detail::sort_ids(sp.valid);
        detail::sort_ids(sp.in_train);
    }
    return ss;
}

// Adds the two sparse train subsets to every split. The balanced variant needs
// 20 nodes of each category inside in-train; when some split cannot satisfy
// that, its balanced set stays empty and a warning is recorded. The stratified
// variant always proceeds with 20*K nodes apportioned by largest remainder.
inline void make_sparse_sets(SplitSet& ss, const NodeData& d, RngStream& rng,
                             std::size_t per_class = 20) {
    const auto k_classes = static_cast<std::size_t>(d.num_classes);
    const std::size_t total = per_class * k_classes;
    for (std::size_t i = 0; i < ss.splits.size(); ++i) {
        FoldSplit& sp = ss.splits[i];
        auto groups = detail::group_by_class(d, sp.in_train);

        bool balanced_ok = true;
        for (const auto& g : groups) balanced_ok &= g.size() >= per_class;
        if (balanced_ok) {
            for (auto& g : groups) {
                auto picked = rng.sample_without_replacement(g, per_class);
                sp.sparse_balanced.insert(sp.sparse_balanced.end(), picked.begin(), picked.end());
            }
            detail::sort_ids(sp.sparse_balanced);
        } else {
            ss.warnings.push_back("split " + std::to_string(i) +
                                  ": a category has fewer than " + std::to_string(per_class) +
                                  " in-train nodes; sparse-balanced variant unavailable");
        }

        if (sp.in_train.size() < total)
            throw std::invalid_argument("make_sparse_sets: in-train smaller than 20*K");
        std::vector<std::size_t> class_counts(groups.size());
        for (std::size_t c = 0; c < groups.size(); ++c) class_counts[c] = groups[c].size();
        auto counts = detail::apportion(class_counts, total);
        for (std::size_t c = 0; c < groups.size(); ++c) {
            auto picked = rng.sample_without_replacement(groups[c], counts[c]);
            sp.sparse_stratified.insert(sp.sparse_stratified.end(), picked.begin(), picked.end());
        }
        detail::sort_ids(sp.sparse_stratified);
    }
}

// Structural validation of a SplitSet against its dataset. Returns the list
// of violated invariants (empty means the set is sound).
inline std::vector<std::string> validate_splits(const SplitSet& ss, const NodeData& d,
                                                std::size_t per_class = 20) {
    std::vector<std::string> problems;
    auto labeled = d.labeled_nodes();
    const std::size_t total_labeled = labeled.size();

    // folds partition the labeled nodes
    std::vector<std::uint8_t> seen(d.node_count(), 0);
    std::size_t covered = 0;
    for (const auto& fold : ss.folds)
        for (std::size_t n : fold) {
            if (seen[n]) problems.push_back("node " + std::to_string(n) + " appears in two folds");
            seen[n] = 1;
            ++covered;
        }
    if (covered != total_labeled) problems.push_back("folds do not cover all labeled nodes");

    // per-class fold counts differ by at most one
    for (int c = 0; c < d.num_classes; ++c) {
        std::size_t lo = SIZE_MAX, hi = 0;
        for (const auto& fold : ss.folds) {
            std::size_t cnt = 0;
            for (std::size_t n : fold) cnt += d.labels[n] == c;
            lo = std::min(lo, cnt);
            hi = std::max(hi, cnt);
        }
        if (hi - lo > 1)
            problems.push_back("class " + std::to_string(c) + " fold counts spread " +
                               std::to_string(hi - lo));
    }

    for (std::size_t i = 0; i < ss.splits.size(); ++i) {
        const FoldSplit& sp = ss.splits[i];
        auto tag = [&](const std::string& m) { problems.push_back("split " + std::to_string(i) + ": " + m); };

        std::vector<std::uint8_t> mark(d.node_count(), 0);
        for (std::size_t n : sp.in_train) mark[n] |= 1;
        for (std::size_t n : sp.valid) {
            if (mark[n]) tag("valid overlaps in-train");
            mark[n] |= 2;
        }
        for (std::size_t n : sp.test) {
            if (mark[n]) tag("test overlaps train/valid");
            mark[n] |= 4;
        }
        if (sp.in_train.size() + sp.valid.size() + sp.test.size() != total_labeled)
            tag("split does not cover the labeled nodes");

        // 81/9/10 where divisible: valid is 10% of train rounded
        const std::size_t train_total = sp.in_train.size() + sp.valid.size();
        const auto expect_valid =
            static_cast<std::size_t>(std::llround(0.1 * static_cast<double>(train_total)));
        if (sp.valid.size() != expect_valid) tag("validation size violates the 90/10 inner split");

        if (!sp.sparse_balanced.empty()) {
            if (sp.sparse_balanced.size() != per_class * static_cast<std::size_t>(d.num_classes))
                tag("sparse-balanced size is not 20*K");
            std::vector<std::size_t> hist(d.num_classes, 0);
            for (std::size_t n : sp.sparse_balanced) {
                ++hist[d.labels[n]];
                if (!std::binary_search(sp.in_train.begin(), sp.in_train.end(), n))
                    tag("sparse-balanced node outside in-train");
            }
            for (std::size_t c = 0; c < hist.size(); ++c)
                if (hist[c] != per_class) tag("sparse-balanced class " + std::to_string(c) + " != 20");
        }
        if (!sp.sparse_stratified.empty()) {
            if (sp.sparse_stratified.size() != per_class * static_cast<std::size_t>(d.num_classes))
                tag("sparse-stratified size is not 20*K");
            auto groups = detail::group_by_class(d, sp.in_train);
            std::vector<std::size_t> class_counts(groups.size());
            for (std::size_t c = 0; c < groups.size(); ++c) class_counts[c] = groups[c].size();
            auto expect = detail::apportion(class_counts,
                                            per_class * static_cast<std::size_t>(d.num_classes));
            std::vector<std::size_t> hist(d.num_classes, 0);
            for (std::size_t n : sp.sparse_stratified) {
                ++hist[d.labels[n]];
                if (!std::binary_search(sp.in_train.begin(), sp.in_train.end(), n))
                    tag("sparse-stratified node outside in-train");
            }
            for (std::size_t c = 0; c < hist.size(); ++c)
                if (hist[c] != expect[c])
                    tag("sparse-stratified class " + std::to_string(c) + " count " +
                        std::to_string(hist[c]) + " != largest-remainder " + std::to_string(expect[c]));
        }
    }
    return problems;
}

inline nlohmann::json splits_to_json(const SplitSet& ss) {
    nlohmann::json j;
    j["seed"] = ss.seed;
    j["k"] = ss.k;
    j["folds"] = ss.folds;
    j["splits"] = nlohmann::json::array();
    for (const auto& sp : ss.splits)
        j["splits"].push_back({{"in_train", sp.in_train},
                               {"valid", sp.valid},
                               {"test", sp.test},
                               {"sparse_balanced", sp.sparse_balanced},
                               {"sparse_stratified", sp.sparse_stratified}});
    if (!ss.warnings.empty()) j["warnings"] = ss.warnings;
    return j;
}

inline SplitSet splits_from_json(const nlohmann::json& j) {
    SplitSet ss;
    ss.seed = j.at("seed").get<std::uint64_t>();
    ss.k = j.at("k").get<int>();
    ss.folds = j.at("folds").get<std::vector<std::vector<std::size_t>>>();
    for (const auto& e : j.at("splits")) {
        FoldSplit sp;
        sp.in_train = e.at("in_train").get<std::vector<std::size_t>>();
        sp.valid = e.at("valid").get<std::vector<std::size_t>>();
        sp.test = e.at("test").get<std::vector<std::size_t>>();
        sp.sparse_balanced = e.at("sparse_balanced").get<std::vector<std::size_t>>();
        sp.sparse_stratified = e.at("sparse_stratified").get<std::vector<std::size_t>>();
        ss.splits.push_back(std::move(sp));
    }
    if (j.contains("warnings")) ss.warnings = j.at("warnings").get<std::vector<std::string>>();
    return ss;
}

}  // namespace nclab
