#pragma once

#include <algorithm>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

#include "nclab/models.hpp"
#include "nclab/parallel.hpp"
#include "nclab/rng.hpp"

namespace nclab {

// Discrete hyperparameter grid: named fields, each with its list of values.
// A grid point is one value index per field.
struct GridSchema {
    std::vector<std::string> names;
    std::vector<std::vector<double>> values;

    std::size_t num_fields() const { return names.size(); }

    std::size_t size() const {
        std::size_t s = 1;
        for (const auto& v : values) s *= v.size();
        return s;
    }

    void add(const std::string& name, std::vector<double> vals) {
        if (vals.empty()) throw std::invalid_argument("grid field '" + name + "' is empty");
        names.push_back(name);
        values.push_back(std::move(vals));
    }
};

using GridPoint = std::vector<int>;

inline GridPoint random_point(const GridSchema& g, RngStream& rng) {
    GridPoint p(g.num_fields());
    for (std::size_t f = 0; f < g.num_fields(); ++f)
        p[f] = static_cast<int>(rng.next_index(g.values[f].size()));
    return p;
}

inline std::uint64_t point_hash(const GridPoint& p) {
    std::uint64_t h = 1469598103934665603ULL;
    for (int x : p) {
        h ^= static_cast<std::uint64_t>(x) + 0x9e3779b97f4a7c15ULL;
        h *= 1099511628211ULL;
    }
    return h;
}

// Default search spaces. The reduced space pins hidden dimension and L2 and
// narrows learning rate and epsilon, for large datasets where the full grid
// is unaffordable.
inline GridSchema default_grid(ModelKind kind, bool reduced = false) {
    GridSchema g;
    if (!reduced) {
        g.add("hidden_dim", {8, 16, 32, 64});
        g.add("input_dropout", {0.2, 0.4, 0.6, 0.8});
        g.add("dropout", {0.2, 0.4, 0.6, 0.8});
        g.add("learning_rate", {1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4});
        g.add("l2", {1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5});
        if (kind == ModelKind::Fagcn)
            g.add("epsilon", {0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9});
    } else {
        g.add("hidden_dim", {64});
        g.add("input_dropout", {0.2, 0.4, 0.6, 0.8});
        g.add("dropout", {0.2, 0.4, 0.6, 0.8});
        g.add("learning_rate", {1e-1, 5e-2});
        g.add("l2", {1e-5});
        if (kind == ModelKind::Fagcn) g.add("epsilon", {0.7, 0.8, 0.9});
    }
    return g;
}

inline HyperConfig decode_config(const GridSchema& g, const GridPoint& p) {
    if (p.size() != g.num_fields()) throw std::invalid_argument("decode_config: point/schema mismatch");
    HyperConfig c;
    for (std::size_t f = 0; f < g.num_fields(); ++f) {
        const double v = g.values[f][static_cast<std::size_t>(p[f])];
        const std::string& n = g.names[f];
        if (n == "hidden_dim")
            c.hidden_dim = static_cast<int>(v);
        else if (n == "input_dropout")
            c.input_dropout = v;
        else if (n == "dropout")
            c.dropout = v;
        else if (n == "learning_rate")
            c.learning_rate = v;
        else if (n == "l2")
            c.l2 = v;
        else if (n == "epsilon")
            c.epsilon = v;
        else
            throw std::invalid_argument("decode_config: unknown field '" + n + "'");
    }
    return c;
}

// Child with two distinct pivots a < b drawn from {0..F}: fields in [a, b)
// come from parent 2, the rest from parent 1.
inline GridPoint crossover_with_pivots(const GridPoint& p1, const GridPoint& p2, std::size_t a,
                                       std::size_t b) {
    if (p1.size() != p2.size()) throw std::invalid_argument("crossover: parent size mismatch");
    GridPoint child = p1;
    for (std::size_t f = a; f < b && f < child.size(); ++f) child[f] = p2[f];
    return child;
}

inline GridPoint two_pivot_crossover(const GridPoint& p1, const GridPoint& p2, RngStream& rng) {
    const std::size_t positions = p1.size() + 1;
    std::size_t a = rng.next_index(positions);
    std::size_t b = rng.next_index(positions - 1);
    if (b >= a)
        ++b;  // distinct
    if (a > b) std::swap(a, b);
    return crossover_with_pivots(p1, p2, a, b);
}

// Two independent draws proportional to fitness. Accuracies are nonnegative
// already; negative fitness values are shifted up front. An all-zero weight
// vector falls back to uniform sampling.
inline std::pair<std::size_t, std::size_t> fitness_proportional_sample(
    const std::vector<double>& fitness, RngStream& rng) {
    if (fitness.empty()) throw std::invalid_argument("fitness_proportional_sample: empty selection");
    double lo = *std::min_element(fitness.begin(), fitness.end());
    const double shift = lo < 0.0 ? -lo + 1e-12 : 0.0;
    std::vector<double> w(fitness.size());
    double total = 0.0;
    for (std::size_t i = 0; i < fitness.size(); ++i) {
        w[i] = fitness[i] + shift;
        total += w[i];
    }
    auto draw = [&]() -> std::size_t {
        if (total <= 0.0) return rng.next_index(fitness.size());
        double x = rng.next_double() * total;
        for (std::size_t i = 0; i < w.size(); ++i) {
            x -= w[i];
            if (x < 0.0) return i;
        }
        return w.size() - 1;
    };
    return {draw(), draw()};
}

struct EvalRecord {
    GridPoint point;
    double fitness = -std::numeric_limits<double>::infinity();
    int generation = 0;
    bool failed = false;
};

struct EvoParams {
    std::size_t population = 100;
    int generations = 10;
    double mutation_p = 0.05;
    std::size_t select_min = 2;
    std::size_t select_max = 50;
    int workers = 1;
};

struct EvoResult {
    GridPoint best;
    double best_fitness = -std::numeric_limits<double>::infinity();
    std::vector<EvalRecord> archive;  // every evaluated configuration
};

// Evolutionary grid search. Keeps a population of distinct configurations;
// each generation evaluates the newcomers, keeps the members scoring strictly
// above the population mean (clamped to [select_min, select_max]), and refills
// with mutated crossovers of fitness-proportionally sampled survivors. Only
// never-seen configurations enter the population. A failing fitness evaluation
// scores -inf and is logged rather than aborting the search.
inline EvoResult evolve(const GridSchema& grid,
                        const std::function<double(const GridPoint&)>& fitness_fn,
                        const EvoParams& ep, RngStream& rng) {
    if (grid.num_fields() == 0) throw std::invalid_argument("evolve: empty schema");
    const std::size_t grid_size = grid.size();
    const std::size_t pop_size = std::min(ep.population, grid_size);

    EvoResult res;
    std::map<GridPoint, std::size_t> seen;  // point -> archive index

    std::vector<GridPoint> population;
    auto try_add = [&](const GridPoint& p) {
        if (seen.count(p)) return false;
        seen.emplace(p, SIZE_MAX);  // reserved; archive index assigned at evaluation
        population.push_back(p);
        return true;
    };

    // initial population: random distinct points
    std::size_t attempts = 0;
    while (population.size() < pop_size && attempts < 200 * pop_size) {
        try_add(random_point(grid, rng));
        ++attempts;
    }
    // tiny grids: enumerate whatever remains
    if (population.size() < pop_size) {
        GridPoint p(grid.num_fields(), 0);
        while (population.size() < pop_size) {
            try_add(p);
            std::size_t f = 0;
            while (f < p.size()) {
                if (++p[f] < static_cast<int>(grid.values[f].size())) break;
                p[f++] = 0;
            }
            if (f == p.size()) break;
        }
    }

    std::vector<double> pop_fitness(population.size(), 0.0);
    std::vector<bool> evaluated(population.size(), false);

    for (int gen = 1; gen <= ep.generations; ++gen) {
        // evaluate newcomers (parallelizable: fitness_fn must be pure)
        std::vector<std::size_t> todo;
        for (std::size_t i = 0; i < population.size(); ++i)
            if (!evaluated[i]) todo.push_back(i);
        std::vector<EvalRecord> fresh(todo.size());
        detail::parallel_run(todo.size(), ep.workers, [&](std::size_t t) {
            EvalRecord rec;
            rec.point = population[todo[t]];
            rec.generation = gen;
            try {
                rec.fitness = fitness_fn(rec.point);
            } catch (const std::exception&) {
                rec.failed = true;
            }
            fresh[t] = rec;
        });
        for (std::size_t t = 0; t < todo.size(); ++t) {
            seen[fresh[t].point] = res.archive.size();
            pop_fitness[todo[t]] = fresh[t].fitness;
            evaluated[todo[t]] = true;
            res.archive.push_back(std::move(fresh[t]));
        }

        if (gen == ep.generations || res.archive.size() >= grid_size) break;

        // selection: strictly above the mean of the finite scores
        double sum = 0.0;
        std::size_t finite = 0;
        for (double f : pop_fitness)
            if (std::isfinite(f)) {
                sum += f;
                ++finite;
            }
        const double avg = finite > 0 ? sum / static_cast<double>(finite) : 0.0;
        std::vector<std::size_t> order(population.size());
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return pop_fitness[a] > pop_fitness[b]; });
        std::vector<std::size_t> selected;
        for (std::size_t i : order)
            if (std::isfinite(pop_fitness[i]) && pop_fitness[i] > avg) selected.push_back(i);
        const std::size_t want = std::clamp(selected.size(), ep.select_min,
                                            std::min(ep.select_max, population.size()));
        selected.clear();
        for (std::size_t i : order) {
            if (!std::isfinite(pop_fitness[i])) break;
            selected.push_back(i);
            if (selected.size() == want) break;
        }
        if (selected.empty()) selected.push_back(order[0]);

        // survivors carry over unchanged; children refill the population
        std::vector<GridPoint> next;
        std::vector<double> next_fitness;
        std::vector<bool> next_eval;
        for (std::size_t i : selected) {
            next.push_back(population[i]);
            next_fitness.push_back(pop_fitness[i]);
            next_eval.push_back(true);
        }
        std::vector<double> sel_fitness;
        for (std::size_t i : selected) sel_fitness.push_back(pop_fitness[i]);

        population = std::move(next);
        pop_fitness = std::move(next_fitness);
        std::vector<bool> eval_flags = std::move(next_eval);

        std::size_t stall = 0;
        while (population.size() < pop_size && stall < 500 * pop_size) {
            auto [i1, i2] = fitness_proportional_sample(sel_fitness, rng);
            GridPoint child = two_pivot_crossover(population[i1], population[i2], rng);
            for (std::size_t f = 0; f < child.size(); ++f)
                if (rng.next_double() < ep.mutation_p)
                    child[f] = static_cast<int>(rng.next_index(grid.values[f].size()));
            if (seen.count(child)) {
                ++stall;
                continue;
            }
            seen.emplace(child, SIZE_MAX);
            population.push_back(std::move(child));
            pop_fitness.push_back(0.0);
            eval_flags.push_back(false);
            stall = 0;
        }
        // crossover space exhausted: top up with random unseen points
        attempts = 0;
        while (population.size() < pop_size && attempts < 200 * pop_size) {
            GridPoint p = random_point(grid, rng);
            if (!seen.count(p)) {
                seen.emplace(p, SIZE_MAX);
                population.push_back(std::move(p));
                pop_fitness.push_back(0.0);
                eval_flags.push_back(false);
            }
            ++attempts;
        }
        evaluated = std::move(eval_flags);
    }

    for (const auto& rec : res.archive) {
        if (!rec.failed && rec.fitness > res.best_fitness) {
            res.best_fitness = rec.fitness;
            res.best = rec.point;
        }
    }
    if (res.best.empty() && !res.archive.empty()) res.best = res.archive.front().point;
    return res;
}

}  // namespace nclab
