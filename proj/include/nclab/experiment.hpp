#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "nclab/fair_eval.hpp"

namespace nclab {

constexpr const char* kToolVersion = "nclab 0.1.0";

// Everything needed to reproduce a pipeline stage, mirrored one-to-one by the
// CLI flags. The seed is mandatory: there is no wall-clock fallback.
struct ExperimentConfig {
    std::string dataset;
    std::string model = "gcn";
    std::string variant = "dense";
    int k = 10;
    int r = 20;
    std::uint64_t seed = 0;
    int strategy = 1;
    int workers = 0;  // 0 = all hardware threads
    bool reduced_grid = false;
    std::string out = ".";
    SearchBudget budget;
    int em_loops = 10;
    int epochs_per_phase = 100;
    double tau = 0.1;
    std::string anneal = "sharpen";
};

inline nlohmann::json config_to_json(const ExperimentConfig& c) {
    return {{"dataset", c.dataset},
            {"model", c.model},
            {"variant", c.variant},
            {"k", c.k},
            {"r", c.r},
            {"seed", c.seed},
            {"strategy", c.strategy},
            {"workers", c.workers},
            {"reduced_grid", c.reduced_grid},
            {"out", c.out},
            {"budget",
             {{"population", c.budget.population},
              {"generations", c.budget.generations},
              {"mutation_p", c.budget.mutation_p},
              {"runs_per_config", c.budget.runs_per_config}}},
            {"em_loops", c.em_loops},
            {"epochs_per_phase", c.epochs_per_phase},
            {"tau", c.tau},
            {"anneal", c.anneal}};
}

inline void config_merge_json(ExperimentConfig& c, const nlohmann::json& j) {
    c.dataset = j.value("dataset", c.dataset);
    c.model = j.value("model", c.model);
    c.variant = j.value("variant", c.variant);
    c.k = j.value("k", c.k);
    c.r = j.value("r", c.r);
    c.seed = j.value("seed", c.seed);
    c.strategy = j.value("strategy", c.strategy);
    c.workers = j.value("workers", c.workers);
    c.reduced_grid = j.value("reduced_grid", c.reduced_grid);
    c.out = j.value("out", c.out);
    if (j.contains("budget")) {
        const auto& b = j.at("budget");
        c.budget.population = b.value("population", c.budget.population);
        c.budget.generations = b.value("generations", c.budget.generations);
        c.budget.mutation_p = b.value("mutation_p", c.budget.mutation_p);
        c.budget.runs_per_config = b.value("runs_per_config", c.budget.runs_per_config);
    }
    c.em_loops = j.value("em_loops", c.em_loops);
    c.epochs_per_phase = j.value("epochs_per_phase", c.epochs_per_phase);
    c.tau = j.value("tau", c.tau);
    c.anneal = j.value("anneal", c.anneal);
}

inline GmnnConfig gmnn_from_config(const ExperimentConfig& c) {
    GmnnConfig g;
    g.em_loops = c.em_loops;
    g.epochs_per_phase = c.epochs_per_phase;
    g.tau = c.tau;
    if (c.anneal == "sharpen")
        g.anneal = AnnealMode::Sharpen;
    else if (c.anneal == "sample")
        g.anneal = AnnealMode::Sample;
    else
        throw std::invalid_argument("anneal must be 'sharpen' or 'sample'");
    return g;
}

// FNV-1a over raw bytes; cheap content fingerprint for provenance chains.
inline std::string fnv1a_hex(const std::string& bytes) {
    std::uint64_t h = 1469598103934665603ULL;
    for (unsigned char b : bytes) {
        h ^= b;
        h *= 1099511628211ULL;
    }
    std::ostringstream ss;
    ss << std::hex << h;
    return ss.str();
}

inline std::string file_hash(const std::filesystem::path& p) {
    std::ifstream f(p, std::ios::binary);
    if (!f) return "missing";
    std::ostringstream ss;
    ss << f.rdbuf();
    return fnv1a_hex(ss.str());
}

// Fingerprint of a dataset directory: hash of the per-file hashes.
inline std::string dataset_hash(const std::filesystem::path& dir) {
    std::string acc;
    for (const char* f : {"meta.json", "nodes.tsv", "features.tsv", "edges.tsv", "labels.tsv"})
        acc += std::string(f) + ":" + file_hash(dir / f) + ";";
    return fnv1a_hex(acc);
}

// Provenance block embedded in every artifact: the full configuration plus
// content hashes of the inputs the stage consumed.
inline nlohmann::json provenance(const ExperimentConfig& cfg,
                                 const std::vector<std::pair<std::string, std::string>>& inputs) {
    nlohmann::json j;
    j["tool"] = kToolVersion;
    j["config"] = config_to_json(cfg);
    j["inputs"] = nlohmann::json::object();
    for (const auto& [name, hash] : inputs) j["inputs"][name] = hash;
    return j;
}

// A stage is a no-op when its artifact already exists with an identical
// provenance block.
inline bool artifact_up_to_date(const std::filesystem::path& path, const nlohmann::json& prov) {
    std::ifstream f(path);
    if (!f) return false;
    nlohmann::json existing;
    try {
        f >> existing;
    } catch (...) {
        return false;
    }
    return existing.contains("provenance") && existing["provenance"] == prov;
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
    std::ofstream f(path);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << j.dump(2) << "\n";
}

inline nlohmann::json read_json(const std::filesystem::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    nlohmann::json j;
    f >> j;
    return j;
}

}  // namespace nclab
