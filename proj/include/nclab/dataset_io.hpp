#pragma once

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"
#include "nclab/graph.hpp"

namespace nclab {

// Input problems that should surface as exit code 2 at the CLI.
struct DatasetError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct LoadReport {
    std::size_t raw_edge_lines = 0;     // directed lines as written on disk
    std::size_t self_loops_dropped = 0;
    std::size_t duplicate_edges = 0;    // directed duplicates after symmetrization
    std::vector<std::string> warnings;
};

struct Dataset {
    std::string name;
    SparseGraph graph;
    NodeData data;
    LoadReport report;
};

namespace detail {

inline std::ifstream open_or_fail(const std::filesystem::path& p) {
    std::ifstream f(p);
    if (!f) throw DatasetError("cannot open " + p.string());
    return f;
}

// Parses whitespace-separated integer fields; complains with the line number.
inline std::vector<long long> parse_fields(const std::string& line, std::size_t expect,
                                           const std::string& file, std::size_t lineno) {
    std::istringstream ss(line);
    std::vector<long long> out;
    long long x;
    while (ss >> x) out.push_back(x);
    std::string rest;
    if (!ss.eof() && (ss.clear(), ss >> rest))
        throw DatasetError(file + ":" + std::to_string(lineno) + ": malformed line '" + line + "'");
    if (out.size() != expect)
        throw DatasetError(file + ":" + std::to_string(lineno) + ": expected " +
                           std::to_string(expect) + " fields, got " + std::to_string(out.size()));
    return out;
}

template <typename Fn>
inline void for_each_line(const std::filesystem::path& p, Fn&& fn) {
    std::ifstream f = open_or_fail(p);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(f, line)) {
        ++lineno;
        if (line.empty() || line.find_first_not_of(" \t\r") == std::string::npos) continue;
        fn(line, lineno);
    }
}

}  // namespace detail

// Loads a dataset directory: nodes.tsv, features.tsv, edges.tsv, labels.tsv,
// meta.json. Directed edges are symmetrized, duplicates and self-loops are
// dropped, and features are binarized then L1-row-normalized.
inline Dataset load_dataset(const std::filesystem::path& dir) {
    namespace fs = std::filesystem;
    Dataset ds;

    nlohmann::json meta;
    {
        std::ifstream f = detail::open_or_fail(dir / "meta.json");
        try {
            f >> meta;
        } catch (const nlohmann::json::exception& e) {
            throw DatasetError((dir / "meta.json").string() + ": " + e.what());
        }
    }
    for (const char* key : {"num_nodes", "num_features", "num_classes"})
        if (!meta.contains(key))
            throw DatasetError((dir / "meta.json").string() + ": missing field '" + key + "'");
    const std::size_t n = meta.at("num_nodes").get<std::size_t>();
    const std::size_t num_features = meta.at("num_features").get<std::size_t>();
    const int num_classes = meta.at("num_classes").get<int>();
    ds.name = meta.value("name", dir.filename().string());

    // nodes.tsv must list 0..n-1 in order.
    {
        std::size_t seen = 0;
        detail::for_each_line(dir / "nodes.tsv", [&](const std::string& line, std::size_t lineno) {
            auto f = detail::parse_fields(line, 1, "nodes.tsv", lineno);
            if (f[0] < 0 || static_cast<std::size_t>(f[0]) != seen)
                throw DatasetError("nodes.tsv:" + std::to_string(lineno) +
                                   ": node ids must be contiguous starting at 0");
            ++seen;
        });
        if (seen != n)
            throw DatasetError("nodes.tsv lists " + std::to_string(seen) + " nodes, meta.json says " +
                               std::to_string(n));
    }

    std::vector<std::tuple<std::size_t, std::size_t, double>> feat;
    detail::for_each_line(dir / "features.tsv", [&](const std::string& line, std::size_t lineno) {
        auto f = detail::parse_fields(line, 2, "features.tsv", lineno);
        if (f[0] < 0 || static_cast<std::size_t>(f[0]) >= n)
            throw DatasetError("features.tsv:" + std::to_string(lineno) + ": node id out of range");
        if (f[1] < 0 || static_cast<std::size_t>(f[1]) >= num_features)
            throw DatasetError("features.tsv:" + std::to_string(lineno) + ": feature id out of range");
        // Binarize: any recorded presence becomes 1 (duplicates collapse below).
        feat.emplace_back(static_cast<std::size_t>(f[0]), static_cast<std::size_t>(f[1]), 1.0);
    });
    std::sort(feat.begin(), feat.end());
    feat.erase(std::unique(feat.begin(), feat.end()), feat.end());

    std::vector<std::pair<std::size_t, std::size_t>> edges;
    detail::for_each_line(dir / "edges.tsv", [&](const std::string& line, std::size_t lineno) {
        auto f = detail::parse_fields(line, 2, "edges.tsv", lineno);
        if (f[0] < 0 || f[1] < 0 || static_cast<std::size_t>(f[0]) >= n ||
            static_cast<std::size_t>(f[1]) >= n)
            throw DatasetError("edges.tsv:" + std::to_string(lineno) + ": dangling edge endpoint");
        ds.report.raw_edge_lines += 1;
        const auto u = static_cast<std::size_t>(f[0]), v = static_cast<std::size_t>(f[1]);
        if (u == v) {
            ds.report.self_loops_dropped += 1;
            return;
        }
        edges.emplace_back(u, v);
    });

    ds.data.labels.assign(n, kUnlabeled);
    detail::for_each_line(dir / "labels.tsv", [&](const std::string& line, std::size_t lineno) {
        auto f = detail::parse_fields(line, 2, "labels.tsv", lineno);
        if (f[0] < 0 || static_cast<std::size_t>(f[0]) >= n)
            throw DatasetError("labels.tsv:" + std::to_string(lineno) + ": node id out of range");
        if (f[1] != kUnlabeled && (f[1] < 0 || f[1] >= num_classes))
            throw DatasetError("labels.tsv:" + std::to_string(lineno) + ": label id " +
                               std::to_string(f[1]) + " outside [0, " + std::to_string(num_classes) +
                               ")");
        ds.data.labels[static_cast<std::size_t>(f[0])] = static_cast<int>(f[1]);
    });

    ds.graph = SparseGraph::from_edges(n, edges);
    {
        // Directed duplicates: raw symmetrized pair count minus what survived.
        const std::size_t kept = ds.graph.adj.size();
        const std::size_t submitted = edges.size() * 2;
        ds.report.duplicate_edges = submitted > kept ? submitted - kept : 0;
    }
    if (ds.report.self_loops_dropped > 0)
        ds.report.warnings.push_back("dropped " + std::to_string(ds.report.self_loops_dropped) +
                                     " self-loop(s)");
    if (ds.report.duplicate_edges > 0)
        ds.report.warnings.push_back("collapsed " + std::to_string(ds.report.duplicate_edges) +
                                     " duplicate directed edge(s)");

    ds.data.num_classes = num_classes;
    SparseMatrix binary = SparseMatrix::from_triplets(n, num_features, std::move(feat));
    ds.data.features = l1_row_normalize(binary);
    return ds;
}

// Writes a dataset back out in the same directory format. Feature entries are
// emitted as presence pairs, so load(save(x)) reproduces x exactly.
inline void save_dataset(const std::filesystem::path& dir, const SparseGraph& g, const NodeData& d,
                         const std::string& name) {
    namespace fs = std::filesystem;
    fs::create_directories(dir);
    {
        std::ofstream f(dir / "nodes.tsv");
        for (std::size_t i = 0; i < g.node_count; ++i) f << i << "\n";
    }
    {
        std::ofstream f(dir / "features.tsv");
        for (std::size_t i = 0; i < d.features.rows; ++i)
            for (std::size_t p = d.features.row_ptr[i]; p < d.features.row_ptr[i + 1]; ++p)
                f << i << "\t" << d.features.col[p] << "\n";
    }
    {
        std::ofstream f(dir / "edges.tsv");
        for (const auto& [u, v] : g.undirected_edges()) f << u << "\t" << v << "\n";
    }
    {
        std::ofstream f(dir / "labels.tsv");
        for (std::size_t i = 0; i < d.labels.size(); ++i) f << i << "\t" << d.labels[i] << "\n";
    }
    {
        nlohmann::json meta{{"num_nodes", g.node_count},
                            {"num_features", d.features.cols},
                            {"num_classes", d.num_classes},
                            {"name", name}};
        std::ofstream f(dir / "meta.json");
        f << meta.dump(2) << "\n";
    }
}

}  // namespace nclab
