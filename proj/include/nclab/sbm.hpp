#pragma once

#include <cstddef>
#include <stdexcept>
#include <tuple>
#include <utility>
#include <vector>

#include "nclab/graph.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// Feature model for synthetic graphs: feature space is carved into one band
// per class; a node turns on features from its own band with p_signal and the
// remaining features with p_noise. Shrinking the gap weakens the features.
struct SbmFeatureConfig {
    std::size_t num_features = 32;
    double p_signal = 0.3;
    double p_noise = 0.05;
};

// Stochastic block model with per-block labels. Edge (u,v) appears with
// probability intra_p when the blocks match and inter_p otherwise, so
// assortativity is tunable from strongly assortative to random mixing.
inline std::pair<SparseGraph, NodeData> generate_sbm(const std::vector<std::size_t>& block_sizes,
                                                     double intra_p, double inter_p,
                                                     const SbmFeatureConfig& fc, RngStream& rng) {
    if (intra_p < 0.0 || intra_p > 1.0 || inter_p < 0.0 || inter_p > 1.0)
        throw std::invalid_argument("generate_sbm: edge probabilities must be in [0,1]");
    if (block_sizes.empty()) throw std::invalid_argument("generate_sbm: no blocks");

    std::size_t n = 0;
    for (std::size_t b : block_sizes) n += b;
    const std::size_t k = block_sizes.size();
    if (fc.num_features < k)
        throw std::invalid_argument("generate_sbm: need at least one feature per class");

    NodeData d;
    d.num_classes = static_cast<int>(k);
    d.labels.resize(n);
    {
        std::size_t at = 0;
        for (std::size_t b = 0; b < k; ++b)
            for (std::size_t i = 0; i < block_sizes[b]; ++i) d.labels[at++] = static_cast<int>(b);
    }

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    for (std::size_t u = 0; u < n; ++u)
        for (std::size_t v = u + 1; v < n; ++v)
            if (rng.bernoulli(d.labels[u] == d.labels[v] ? intra_p : inter_p))
                edges.emplace_back(u, v);
    SparseGraph g = SparseGraph::from_edges(n, edges);

    const std::size_t band = fc.num_features / k;  // leftover columns are pure noise
    std::vector<std::tuple<std::size_t, std::size_t, double>> feat;
    for (std::size_t u = 0; u < n; ++u) {
        const std::size_t band_lo = static_cast<std::size_t>(d.labels[u]) * band;
        const std::size_t band_hi = band_lo + band;
        for (std::size_t f = 0; f < fc.num_features; ++f) {
            const double p = (f >= band_lo && f < band_hi) ? fc.p_signal : fc.p_noise;
            if (rng.bernoulli(p)) feat.emplace_back(u, f, 1.0);
        }
    }
    d.features = l1_row_normalize(SparseMatrix::from_triplets(n, fc.num_features, std::move(feat)));
    return {std::move(g), std::move(d)};
}

}  // namespace nclab
