#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "nclab/evo.hpp"

using namespace nclab;

namespace {

GridSchema small_schema() {
    GridSchema g;
    g.add("hidden_dim", {8, 16, 32, 64});
    g.add("input_dropout", {0.2, 0.4, 0.6, 0.8});
    g.add("dropout", {0.2, 0.4, 0.6, 0.8});
    g.add("learning_rate", {1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4});
    g.add("l2", {1e-1, 5e-2, 1e-2, 5e-3, 1e-3, 5e-4, 1e-4, 5e-5, 1e-5});
    return g;
}

}  // namespace

TEST_CASE("grid schema sizes and decode") {
    GridSchema g = default_grid(ModelKind::Gcn);
    CHECK(g.size() == 4032);  // 4*4*4*7*9
    GridSchema gf = default_grid(ModelKind::Fagcn);
    CHECK(gf.size() == 4032 * 9);
    GridSchema gr = default_grid(ModelKind::Fagcn, true);
    CHECK(gr.size() == 1 * 4 * 4 * 2 * 1 * 3);

    HyperConfig c = decode_config(g, {0, 1, 2, 3, 4});
    CHECK(c.hidden_dim == 8);
    CHECK(c.input_dropout == 0.4);
    CHECK(c.dropout == 0.6);
    CHECK(c.learning_rate == 5e-3);
    CHECK(c.l2 == 1e-3);
}

TEST_CASE("two-pivot crossover worked example") {
    // parents [8,0.2,0.4,1e-2,1e-3] x [64,0.8,0.6,1e-4,1e-5], pivots (1,3)
    GridSchema g = small_schema();
    GridPoint p1{0, 0, 1, 2, 4};
    GridPoint p2{3, 3, 2, 6, 8};
    GridPoint child = crossover_with_pivots(p1, p2, 1, 3);
    HyperConfig c = decode_config(g, child);
    CHECK(c.hidden_dim == 8);
    CHECK(c.input_dropout == 0.8);
    CHECK(c.dropout == 0.6);
    CHECK(c.learning_rate == 1e-2);
    CHECK(c.l2 == 1e-3);
}

TEST_CASE("crossover boundary cases") {
    GridPoint p1{0, 0, 0, 0, 0}, p2{1, 2, 3, 4, 5};
    CHECK(crossover_with_pivots(p1, p2, 0, 5) == p2);
    CHECK(crossover_with_pivots(p1, p2, 0, 0) == p1);
    RngStream rng(11);
    CHECK(two_pivot_crossover(p1, p1, rng) == p1);
}

TEST_CASE("every child field comes from exactly one parent, all pivot pairs") {
    GridPoint p1{0, 0, 0, 0, 0}, p2{1, 1, 1, 1, 1};
    for (std::size_t a = 0; a <= 5; ++a)
        for (std::size_t b = a; b <= 5; ++b) {
            GridPoint child = crossover_with_pivots(p1, p2, a, b);
            for (std::size_t f = 0; f < 5; ++f) {
                const bool inside = f >= a && f < b;
                CHECK(child[f] == (inside ? p2[f] : p1[f]));
            }
        }
}

TEST_CASE("drawn pivots are distinct and cover the full range") {
    RngStream rng(12);
    GridPoint p1{0, 0, 0, 0, 0}, p2{1, 1, 1, 1, 1};
    bool saw_all_p2 = false, saw_all_p1 = false;
    for (int t = 0; t < 2000; ++t) {
        GridPoint child = two_pivot_crossover(p1, p2, rng);
        int ones = 0;
        for (int x : child) ones += x;
        // distinct pivots guarantee the child is never "no segment at all"
        // impossible: [a,b) with a<b always has length >= 1
        CHECK(ones >= 1);
        saw_all_p2 |= (ones == 5);
        saw_all_p1 |= (ones == 1);
    }
    CHECK(saw_all_p2);  // pivots (0,5)
    CHECK(saw_all_p1);
}

TEST_CASE("fitness-proportional sampling frequencies") {
    RngStream rng(13);
    // single member is both parents
    auto [a, b] = fitness_proportional_sample({0.7}, rng);
    CHECK(a == 0);
    CHECK(b == 0);

    // [1,3]: the second member is drawn with probability 3/4
    std::size_t hits = 0;
    const int n = 100000;
    for (int t = 0; t < n; ++t) {
        auto [i, j] = fitness_proportional_sample({1.0, 3.0}, rng);
        hits += (i == 1);
    }
    const double freq = static_cast<double>(hits) / n;
    CHECK(freq > 0.73);
    CHECK(freq < 0.77);

    // all-equal (and all-zero) fall back to uniform
    hits = 0;
    for (int t = 0; t < n; ++t) {
        auto [i, j] = fitness_proportional_sample({0.0, 0.0}, rng);
        hits += (i == 1);
    }
    const double freq0 = static_cast<double>(hits) / n;
    CHECK(freq0 > 0.48);
    CHECK(freq0 < 0.52);

    CHECK_THROWS_AS(fitness_proportional_sample({}, rng), std::invalid_argument);
}

TEST_CASE("negative fitness values are shifted positive before sampling") {
    RngStream rng(14);
    std::size_t second = 0;
    const int n = 50000;
    for (int t = 0; t < n; ++t) {
        auto [i, j] = fitness_proportional_sample({-2.0, -1.0}, rng);
        second += (i == 1);
    }
    // weights become ~[0, 1]: the second member should dominate
    CHECK(static_cast<double>(second) / n > 0.95);
}

TEST_CASE("singleton grid returns its only configuration after one evaluation") {
    GridSchema g;
    g.add("hidden_dim", {16});
    g.add("learning_rate", {0.01});
    int evals = 0;
    RngStream rng(15);
    EvoResult res = evolve(
        g, [&](const GridPoint&) { ++evals; return 0.5; }, EvoParams{}, rng);
    CHECK(evals == 1);
    CHECK(res.archive.size() == 1);
    CHECK(decode_config(g, res.best).hidden_dim == 16);
}

TEST_CASE("archive holds no duplicates and stays on the grid") {
    GridSchema g = small_schema();
    RngStream rng(16);
    EvoParams ep;
    ep.population = 30;
    ep.generations = 5;
    EvoResult res = evolve(
        g, [&](const GridPoint& p) { return static_cast<double>(p[0] + p[3]); }, ep, rng);
    std::set<GridPoint> seen;
    for (const auto& rec : res.archive) {
        CHECK(seen.insert(rec.point).second);
        REQUIRE(rec.point.size() == g.num_fields());
        for (std::size_t f = 0; f < g.num_fields(); ++f) {
            CHECK(rec.point[f] >= 0);
            CHECK(rec.point[f] < static_cast<int>(g.values[f].size()));
        }
    }
    CHECK(res.archive.size() <= 30 * 5);
}

TEST_CASE("search is reproducible under a fixed seed") {
    GridSchema g = small_schema();
    auto fitness = [](const GridPoint& p) {
        double s = 0;
        for (std::size_t f = 0; f < p.size(); ++f) s += std::sin(3.1 * p[f] + f);
        return s;
    };
    EvoParams ep;
    ep.population = 25;
    ep.generations = 4;
    RngStream r1(17), r2(17);
    EvoResult a = evolve(g, fitness, ep, r1);
    EvoResult b = evolve(g, fitness, ep, r2);
    CHECK(a.best == b.best);
    REQUIRE(a.archive.size() == b.archive.size());
    for (std::size_t i = 0; i < a.archive.size(); ++i) {
        CHECK(a.archive[i].point == b.archive[i].point);
        CHECK(a.archive[i].fitness == b.archive[i].fitness);
    }
}

TEST_CASE("a failing evaluation is logged and skipped, not fatal") {
    GridSchema g = small_schema();
    RngStream rng(18);
    EvoParams ep;
    ep.population = 10;
    ep.generations = 3;
    EvoResult res = evolve(
        g,
        [&](const GridPoint& p) -> double {
            if (p[0] == 0) throw std::runtime_error("diverged");
            return static_cast<double>(p[0]);
        },
        ep, rng);
    bool saw_failure = false;
    for (const auto& rec : res.archive) saw_failure |= rec.failed;
    CHECK(saw_failure);
    CHECK(res.best_fitness > 0.0);
    CHECK(decode_config(g, res.best).hidden_dim > 8);
}

TEST_CASE("monotone fitness: the optimum is found well within budget") {
    GridSchema g = small_schema();  // |grid| = 4032
    // strictly monotone in every field; unique optimum at all-max indices
    auto fitness = [&](const GridPoint& p) {
        double s = 0.0;
        for (std::size_t f = 0; f < p.size(); ++f)
            s += static_cast<double>(p[f] + 1) / static_cast<double>(g.values[f].size());
        return s;
    };
    GridPoint optimum;
    for (const auto& vals : g.values) optimum.push_back(static_cast<int>(vals.size()) - 1);

    int found = 0;
    for (int seed = 0; seed < 10; ++seed) {
        RngStream rng(1000 + seed);
        EvoResult res = evolve(g, fitness, EvoParams{}, rng);
        CHECK(res.archive.size() <= 1000);
        if (res.best == optimum) ++found;
    }
    CHECK(found >= 9);
}
