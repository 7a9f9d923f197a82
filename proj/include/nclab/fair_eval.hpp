#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"
#include "nclab/evo.hpp"
#include "nclab/gmnn.hpp"
#include "nclab/parallel.hpp"
#include "nclab/splits.hpp"
#include "nclab/stats.hpp"

namespace nclab {

// "mlp" | "gcn" | "fagcn" | "gmnn-gcn" | "gmnn-fagcn"
struct ModelSpec {
    bool gmnn = false;
    ModelKind base = ModelKind::Gcn;

    std::string name() const { return (gmnn ? "gmnn-" : "") + model_kind_name(base); }

    static ModelSpec parse(const std::string& s) {
        ModelSpec m;
        std::string rest = s;
        if (rest.rfind("gmnn-", 0) == 0) {
            m.gmnn = true;
            rest = rest.substr(5);
        }
        m.base = model_kind_from_name(rest);
        if (m.gmnn && m.base == ModelKind::Mlp)
            throw std::invalid_argument("gmnn requires a graph base model (gcn or fagcn)");
        return m;
    }
};

struct SearchBudget {
    std::size_t population = 100;
    int generations = 10;
    double mutation_p = 0.05;
    int runs_per_config = 1;  // >1 averages fitness over several seeds
};

struct SelectionResult {
    int split = 0;
    HyperConfig alpha;
    double val_acc = 0.0;
    std::size_t evaluated = 0;
    int beta_strategy = 1;
    HyperConfig beta;
};

// Read-only dataset bundle threaded through selection and assessment.
struct EvalContext {
    const SparseGraph* graph = nullptr;
    const NodeData* data = nullptr;
    const GraphCache* cache = nullptr;
};

namespace seedpath {
// salts separating the RNG trees of the pipeline stages
constexpr std::uint64_t kSelect = 0x5e1ec7;
constexpr std::uint64_t kBeta = 0xbe7a;
constexpr std::uint64_t kAssess = 0xa55e55;
}  // namespace seedpath

inline ModelInputs base_inputs(const EvalContext& ctx) {
    return ModelInputs{&ctx.data->features, &ctx.cache->adj_norm, ctx.graph};
}

// Hyperparameter selection for one split: evolutionary search over the grid,
// fitness being the validation accuracy of a training run on the split's
// train variant. Test labels stay behind the guard for the whole search.
inline SelectionResult model_select(ModelKind kind, const EvalContext& ctx, const SplitSet& ss,
                                    int split, TrainVariant variant, const GridSchema& grid,
                                    const SearchBudget& budget, std::uint64_t master_seed,
                                    int workers = 1) {
    const FoldSplit& fold = ss.splits.at(split);
    const GuardedLabels guard(ctx.data->labels, fold.test);
    const EmSplit es{train_rows(fold, variant), fold.valid};
    const ModelInputs inputs = base_inputs(ctx);
    const int num_classes = ctx.data->num_classes;

    auto fitness = [&](const GridPoint& point) {
        const HyperConfig cfg = decode_config(grid, point);
        double acc = 0.0;
        for (int run = 0; run < budget.runs_per_config; ++run) {
            const std::uint64_t seed = RngStream::derive_seed(
                master_seed, {seedpath::kSelect, static_cast<std::uint64_t>(split),
                              point_hash(point), static_cast<std::uint64_t>(run)});
            BaseRunResult r = run_base_training(kind, cfg, inputs, es, guard, num_classes,
                                                TrainSettings{}, seed, nullptr);
            acc += r.outcome.val_acc_at_best;
        }
        return acc / budget.runs_per_config;
    };

    EvoParams ep;
    ep.population = budget.population;
    ep.generations = budget.generations;
    ep.mutation_p = budget.mutation_p;
    ep.workers = workers;
    RngStream rng = RngStream::derive(master_seed, {seedpath::kSelect, static_cast<std::uint64_t>(split)});
    EvoResult evo = evolve(grid, fitness, ep, rng);

    SelectionResult sel;
    sel.split = split;
    sel.alpha = decode_config(grid, evo.best);
    sel.val_acc = evo.best_fitness;
    sel.evaluated = evo.archive.size();
    sel.beta = sel.alpha;
    return sel;
}

// Hyperparameters for the label-conditional network, chosen by one of three
// strategies: reuse alpha, use the published constant, or run a short
// evolutionary search whose fitness is the network's validation accuracy
// after three EM loops with alpha held fixed.
inline HyperConfig select_beta(const HyperConfig& alpha, int strategy, ModelKind base,
                               const EvalContext& ctx, const SplitSet& ss, int split,
                               TrainVariant variant, std::uint64_t master_seed, int workers = 1,
                               std::size_t* evaluated = nullptr) {
    if (strategy == 1) return alpha;
    if (strategy == 2) {
        HyperConfig beta;
        beta.hidden_dim = 16;
        beta.input_dropout = 0.5;
        beta.dropout = 0.5;
        beta.learning_rate = 0.05;
        beta.l2 = 5e-4;
        beta.epsilon = alpha.epsilon;  // only meaningful for a fagcn base
        return beta;
    }
    if (strategy != 3) throw std::invalid_argument("beta strategy must be 1, 2 or 3");

    GridSchema grid = default_grid(base, false);
    grid.values[0] = {8, 16};  // hidden_dim restricted
    const FoldSplit& fold = ss.splits.at(split);
    const GuardedLabels guard(ctx.data->labels, fold.test);
    const EmSplit es{train_rows(fold, variant), fold.valid};

    auto fitness = [&](const GridPoint& point) {
        GmnnConfig cfg;
        cfg.alpha = alpha;
        cfg.beta = decode_config(grid, point);
        cfg.base = base;
        cfg.em_loops = 3;
        const std::uint64_t seed = RngStream::derive_seed(
            master_seed, {seedpath::kBeta, static_cast<std::uint64_t>(split), point_hash(point)});
        GmnnState st = em_train(*ctx.graph, *ctx.cache, ctx.data->features, es, guard,
                                ctx.data->num_classes, cfg, seed, nullptr);
        // validation accuracy of the label-conditional network after the loops
        for (auto it = st.history.rbegin(); it != st.history.rend(); ++it)
            if (it->network == "p_phi") return it->val_acc;
        return 0.0;
    };

    EvoParams ep;
    ep.population = 40;
    ep.generations = 3;
    ep.workers = workers;
    RngStream rng = RngStream::derive(master_seed, {seedpath::kBeta, static_cast<std::uint64_t>(split)});
    EvoResult evo = evolve(grid, fitness, ep, rng);
    if (evaluated) *evaluated = evo.archive.size();
    return decode_config(grid, evo.best);
}

struct RunRecord {
    int split = 0;
    int run = 0;
    bool failed = false;
    std::string error;
    double acc = std::numeric_limits<double>::quiet_NaN();  // base-model test accuracy
    // gmnn quantities (test accuracy of the selected phases)
    double baseline = std::numeric_limits<double>::quiet_NaN();
    double p_phi = std::numeric_limits<double>::quiet_NaN();
    double q_theta = std::numeric_limits<double>::quiet_NaN();
    double best = std::numeric_limits<double>::quiet_NaN();
    std::vector<PhaseRecord> history;
};

struct QuantityAggregate {
    std::string name;
    std::vector<double> split_means;  // one entry per split (NaN if all runs failed)
    double mean = std::numeric_limits<double>::quiet_NaN();       // over all k*r runs
    double std_over_runs = std::numeric_limits<double>::quiet_NaN();
    double std_over_splits = std::numeric_limits<double>::quiet_NaN();
};

struct AssessmentReport {
    std::string model;
    std::string variant;
    int k = 0;
    int r = 0;
    std::uint64_t seed = 0;
    std::vector<RunRecord> records;
    std::vector<QuantityAggregate> aggregates;
    // gmnn: one-sided paired t-test of "best" against "baseline" split means
    bool has_ttest = false;
    TTestResult ttest;
    std::string stars;
    std::vector<std::string> warnings;
};

namespace detail {

inline QuantityAggregate aggregate_quantity(const std::string& name,
                                            const std::vector<RunRecord>& records, int k,
                                            double RunRecord::*field) {
    QuantityAggregate agg;
    agg.name = name;
    agg.split_means.assign(k, std::numeric_limits<double>::quiet_NaN());
    std::vector<double> all;
    for (int j = 0; j < k; ++j) {
        std::vector<double> vals;
        for (const auto& rec : records)
            if (rec.split == j && !rec.failed && std::isfinite(rec.*field)) vals.push_back(rec.*field);
        if (!vals.empty()) {
            agg.split_means[j] = mean(vals);
            all.insert(all.end(), vals.begin(), vals.end());
        }
    }
    if (!all.empty()) {
        agg.mean = mean(all);
        agg.std_over_runs = stddev(all);
        std::vector<double> finite_means;
        for (double m : agg.split_means)
            if (std::isfinite(m)) finite_means.push_back(m);
        if (!finite_means.empty()) agg.std_over_splits = stddev(finite_means);
    }
    return agg;
}

}  // namespace detail

// Model assessment: r independent training runs per split with the split's
// selected hyperparameters, evaluated on the held-out fold. (split, run) jobs
// are independent; every job derives its own RNG stream, so the report is
// identical no matter how many workers execute it. Failed runs are recorded,
// excluded from the aggregates, and surfaced as warnings.
inline AssessmentReport assess(const ModelSpec& spec, const EvalContext& ctx, const SplitSet& ss,
                               const std::vector<SelectionResult>& selections, int r,
                               std::uint64_t master_seed, TrainVariant variant,
                               const GmnnConfig& gmnn_defaults = {}, int workers = 1) {
    if (static_cast<int>(selections.size()) != ss.k)
        throw std::invalid_argument("assess: need one selection per split");
    AssessmentReport rep;
    rep.model = spec.name();
    rep.variant = train_variant_name(variant);
    rep.k = ss.k;
    rep.r = r;
    rep.seed = master_seed;
    rep.records.resize(static_cast<std::size_t>(ss.k) * r);

    // per-split immutable state, shared by the worker threads
    std::vector<GuardedLabels> guards;
    std::vector<EmSplit> esplits;
    guards.reserve(ss.k);
    for (int j = 0; j < ss.k; ++j) {
        guards.emplace_back(ctx.data->labels, ss.splits[j].test);
        esplits.push_back({train_rows(ss.splits[j], variant), ss.splits[j].valid});
    }
    const ModelInputs inputs = base_inputs(ctx);

    detail::parallel_run(rep.records.size(), workers, [&](std::size_t idx) {
        const int j = static_cast<int>(idx) / r;
        const int run = static_cast<int>(idx) % r;
        RunRecord rec;
        rec.split = j;
        rec.run = run;
        const std::uint64_t run_seed = RngStream::derive_seed(
            master_seed, {seedpath::kAssess, static_cast<std::uint64_t>(j),
                          static_cast<std::uint64_t>(run)});
        const TestEval test{&ss.splits[j].test, &ctx.data->labels};
        try {
            if (!spec.gmnn) {
                BaseRunResult br =
                    run_base_training(spec.base, selections[j].alpha, inputs, esplits[j], guards[j],
                                      ctx.data->num_classes, TrainSettings{}, run_seed, &test);
                rec.acc = br.test_acc;
            } else {
                GmnnConfig cfg = gmnn_defaults;
                cfg.alpha = selections[j].alpha;
                cfg.beta = selections[j].beta;
                cfg.base = spec.base;
                GmnnState st = em_train(*ctx.graph, *ctx.cache, ctx.data->features, esplits[j],
                                        guards[j], ctx.data->num_classes, cfg, run_seed, &test);
                rec.baseline = st.baseline_test_acc;
                rec.p_phi = st.p_phi_test_acc;
                rec.q_theta = st.q_theta_test_acc;
                rec.best = st.best_test_acc;
                rec.history = std::move(st.history);
            }
        } catch (const std::exception& e) {
            rec.failed = true;
            rec.error = e.what();
        }
        rep.records[idx] = std::move(rec);
    });

    for (const auto& rec : rep.records)
        if (rec.failed)
            rep.warnings.push_back("split " + std::to_string(rec.split) + " run " +
                                   std::to_string(rec.run) + " failed: " + rec.error);

    if (!spec.gmnn) {
        rep.aggregates.push_back(detail::aggregate_quantity("acc", rep.records, ss.k, &RunRecord::acc));
    } else {
        rep.aggregates.push_back(
            detail::aggregate_quantity("baseline", rep.records, ss.k, &RunRecord::baseline));
        rep.aggregates.push_back(
            detail::aggregate_quantity("p_phi", rep.records, ss.k, &RunRecord::p_phi));
        rep.aggregates.push_back(
            detail::aggregate_quantity("q_theta", rep.records, ss.k, &RunRecord::q_theta));
        rep.aggregates.push_back(detail::aggregate_quantity("best", rep.records, ss.k, &RunRecord::best));
        const auto& base_agg = rep.aggregates[0];
        const auto& best_agg = rep.aggregates[3];
        std::vector<double> before, after;
        for (int j = 0; j < ss.k; ++j)
            if (std::isfinite(base_agg.split_means[j]) && std::isfinite(best_agg.split_means[j])) {
                before.push_back(base_agg.split_means[j]);
                after.push_back(best_agg.split_means[j]);
            }
        if (after.size() >= 2) {
            rep.ttest = paired_t_test(after, before);
            rep.stars = significance_stars(rep.ttest.p);
            rep.has_ttest = true;
        }
    }
    return rep;
}

// --- JSON forms -----------------------------------------------------------

inline nlohmann::json hyper_to_json(const HyperConfig& c) {
    return {{"hidden_dim", c.hidden_dim}, {"input_dropout", c.input_dropout},
            {"dropout", c.dropout},       {"learning_rate", c.learning_rate},
            {"l2", c.l2},                 {"epsilon", c.epsilon}};
}

inline HyperConfig hyper_from_json(const nlohmann::json& j) {
    HyperConfig c;
    c.hidden_dim = j.at("hidden_dim").get<int>();
    c.input_dropout = j.at("input_dropout").get<double>();
    c.dropout = j.at("dropout").get<double>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.l2 = j.at("l2").get<double>();
    c.epsilon = j.value("epsilon", 0.0);
    return c;
}

inline nlohmann::json selection_to_json(const SelectionResult& s) {
    return {{"split", s.split},
            {"alpha", hyper_to_json(s.alpha)},
            {"val_acc", s.val_acc},
            {"evaluated", s.evaluated},
            {"beta_strategy", s.beta_strategy},
            {"beta", hyper_to_json(s.beta)}};
}

inline SelectionResult selection_from_json(const nlohmann::json& j) {
    SelectionResult s;
    s.split = j.at("split").get<int>();
    s.alpha = hyper_from_json(j.at("alpha"));
    s.val_acc = j.at("val_acc").get<double>();
    s.evaluated = j.at("evaluated").get<std::size_t>();
    s.beta_strategy = j.at("beta_strategy").get<int>();
    s.beta = hyper_from_json(j.at("beta"));
    return s;
}

inline nlohmann::json report_to_json(const AssessmentReport& rep) {
    nlohmann::json j;
    j["model"] = rep.model;
    j["variant"] = rep.variant;
    j["k"] = rep.k;
    j["r"] = rep.r;
    j["seed"] = rep.seed;
    auto num = [](double x) {
        return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr);
    };
    j["records"] = nlohmann::json::array();
    for (const auto& rec : rep.records) {
        nlohmann::json rj{{"split", rec.split}, {"run", rec.run}, {"failed", rec.failed}};
        if (rec.failed) rj["error"] = rec.error;
        if (std::isfinite(rec.acc)) rj["acc"] = rec.acc;
        if (std::isfinite(rec.best)) {
            rj["baseline"] = num(rec.baseline);
            rj["p_phi"] = num(rec.p_phi);
            rj["q_theta"] = num(rec.q_theta);
            rj["best"] = num(rec.best);
        }
        j["records"].push_back(std::move(rj));
    }
    j["aggregates"] = nlohmann::json::array();
    for (const auto& agg : rep.aggregates) {
        nlohmann::json aj{{"name", agg.name},
                          {"mean", num(agg.mean)},
                          {"std_over_runs", num(agg.std_over_runs)},
                          {"std_over_splits", num(agg.std_over_splits)}};
        aj["split_means"] = nlohmann::json::array();
        for (double m : agg.split_means) aj["split_means"].push_back(num(m));
        j["aggregates"].push_back(std::move(aj));
    }
    if (rep.has_ttest) {
        j["ttest"] = {{"t", num(rep.ttest.t)},
                      {"p", rep.ttest.p},
                      {"df", rep.ttest.df},
                      {"degenerate", rep.ttest.degenerate},
                      {"stars", rep.stars}};
    }
    if (!rep.warnings.empty()) j["warnings"] = rep.warnings;
    return j;
}

inline AssessmentReport report_from_json(const nlohmann::json& j) {
    AssessmentReport rep;
    rep.model = j.at("model").get<std::string>();
    rep.variant = j.at("variant").get<std::string>();
    rep.k = j.at("k").get<int>();
    rep.r = j.at("r").get<int>();
    rep.seed = j.at("seed").get<std::uint64_t>();
    auto num = [](const nlohmann::json& v) {
        return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>();
    };
    for (const auto& rj : j.at("records")) {
        RunRecord rec;
        rec.split = rj.at("split").get<int>();
        rec.run = rj.at("run").get<int>();
        rec.failed = rj.at("failed").get<bool>();
        if (rj.contains("error")) rec.error = rj.at("error").get<std::string>();
        if (rj.contains("acc")) rec.acc = rj.at("acc").get<double>();
        if (rj.contains("best")) {
            rec.baseline = num(rj.at("baseline"));
            rec.p_phi = num(rj.at("p_phi"));
            rec.q_theta = num(rj.at("q_theta"));
            rec.best = num(rj.at("best"));
        }
        rep.records.push_back(std::move(rec));
    }
    for (const auto& aj : j.at("aggregates")) {
        QuantityAggregate agg;
        agg.name = aj.at("name").get<std::string>();
        agg.mean = num(aj.at("mean"));
        agg.std_over_runs = num(aj.at("std_over_runs"));
        agg.std_over_splits = num(aj.at("std_over_splits"));
        for (const auto& m : aj.at("split_means")) agg.split_means.push_back(num(m));
        rep.aggregates.push_back(std::move(agg));
    }
    if (j.contains("ttest")) {
        rep.has_ttest = true;
        rep.ttest.t = num(j.at("ttest").at("t"));
        rep.ttest.p = j.at("ttest").at("p").get<double>();
        rep.ttest.df = j.at("ttest").at("df").get<int>();
        rep.ttest.degenerate = j.at("ttest").at("degenerate").get<bool>();
        rep.stars = j.at("ttest").at("stars").get<std::string>();
    }
    if (j.contains("warnings")) rep.warnings = j.at("warnings").get<std::vector<std::string>>();
    return rep;
}

}  // namespace nclab
