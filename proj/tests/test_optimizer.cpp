#include <gtest/gtest.h>

#include <map>

#include "mici/datagen.hpp"
#include "mici/optimizer.hpp"
#include "test_util.hpp"

using namespace mici;
using mici::testing::brute_valid;
using mici::testing::random_bagset;
using mici::testing::random_measure;

namespace {

UsageCounts counts_3_1() {
    BagSet set{2, {}};
    Bag& b = set.add_bag("a", 1.0);
    for (int i = 0; i < 3; ++i) b.add_instance(std::vector<double>{0.9, 0.1});
    b.add_instance(std::vector<double>{0.1, 0.9});
    return usage_counts(set);
}

OptimizerConfig small_config(std::uint64_t seed, int iterations = 200) {
    OptimizerConfig c;
    c.population = 10;
    c.max_iterations = iterations;
    c.seed = seed;
    return c;
}

}  // namespace

TEST(MutationPlanTest, FollowsUsageProportions) {
    const MutationPlan plan(counts_3_1());
    Rng rng(1);
    std::map<Subset, int> hits;
    const int n = 100000;
    for (int i = 0; i < n; ++i) ++hits[plan.pick_element(rng)];
    EXPECT_EQ(hits.size(), 2u);
    EXPECT_NEAR(hits[0b01] / static_cast<double>(n), 0.75, 0.01);
    EXPECT_NEAR(hits[0b10] / static_cast<double>(n), 0.25, 0.01);
    EXPECT_EQ(hits.count(0b11), 0u);
}

TEST(MutationPlanTest, UniformWhenCountsZero) {
    const MutationPlan plan(UsageCounts(3));
    Rng rng(2);
    std::map<Subset, int> hits;
    const int n = 70000;
    for (int i = 0; i < n; ++i) ++hits[plan.pick_element(rng)];
    EXPECT_EQ(hits.size(), 6u);
    for (const auto& [s, c] : hits) {
        EXPECT_LT(s, 0b111u);
        EXPECT_NEAR(c / static_cast<double>(n), 1.0 / 6.0, 0.01);
    }
}

TEST(MutationPlanTest, VisitOrderByCount) {
    const MutationPlan plan(counts_3_1());
    ASSERT_EQ(plan.visit_order().size(), 2u);
    EXPECT_EQ(plan.visit_order()[0], 0b01u);
    EXPECT_EQ(plan.visit_order()[1], 0b10u);
}

TEST(Mutation, SmallChangesOneElement) {
    Rng rng(3);
    const MutationPlan plan(counts_3_1());
    const auto g = build_measure(2, {0.3, 0.4, 1.0});
    int g1 = 0, g2 = 0;
    for (int i = 0; i < 4000; ++i) {
        const auto h = mutate_small(g, plan, rng);
        const bool c1 = h[0b01] != g[0b01], c2 = h[0b10] != g[0b10];
        ASSERT_FALSE(c1 && c2);
        ASSERT_EQ(h[0b11], 1.0);
        g1 += c1;
        g2 += c2;
    }
    EXPECT_NEAR(g1 / 4000.0, 0.75, 0.03);
    EXPECT_NEAR(g2 / 4000.0, 0.25, 0.03);
}

TEST(Mutation, LargeOnTwoSourcesStaysMonotone) {
    Rng rng(4);
    const MutationPlan plan(counts_3_1());
    auto g = build_measure(2, {0.3, 0.4, 1.0});
    for (int i = 0; i < 1000; ++i) {
        g = mutate_large(g, plan, rng);
        ASSERT_TRUE(brute_valid(2, g.dense()));
    }
}

TEST(Mutation, ValidIntervalPicksWidest) {
    // g1 in [0, 0.95] (width 0.95), g2 and g12 pinned tighter
    const auto g = build_measure(3, {0.05, 0.85, 0.95, 0.85, 0.95, 0.95, 1.0});
    std::vector<double> widths;
    for (Subset s = 1; s < 7; ++s) widths.push_back(valid_interval(g, s).width());
    const auto widest = static_cast<Subset>(std::max_element(widths.begin(), widths.end()) - widths.begin() + 1);
    ASSERT_EQ(widest, 0b001u);
    Rng rng(5);
    for (int i = 0; i < 50; ++i) {
        const auto h = mutate_valid_interval(g, rng);
        for (Subset s = 2; s < 7; ++s) EXPECT_EQ(h[s], g[s]);
        EXPECT_TRUE(valid_interval(g, 1).contains(h[1]));
    }
}

TEST(Mutation, PinnedLatticeUnchanged) {
    // singletons always have room down to g(empty) = 0, so only the
    // one-source lattice is fully pinned
    const auto g = max_measure(1);
    Rng rng(6);
    EXPECT_EQ(mutate_valid_interval(g, rng), g);
    EXPECT_EQ(mutate_valid_interval_all(g, rng), g);
}

TEST(Mutation, CountsOfWrongSizeRejected) {
    Rng rng(7);
    EXPECT_THROW(mutate_small(max_measure(3), UsageCounts(2), rng), Error);
    EXPECT_THROW(mutate_large(max_measure(3), UsageCounts(2), rng), Error);
}

TEST(MutationProperty, FuzzedMutationsStayValid) {
    Rng rng(8);
    for (int trial = 0; trial < 400; ++trial) {
        const int m = 2 + trial % 4;
        const BagSet set = random_bagset(m, 4, 5, rng);
        const MutationPlan plan(usage_counts(set));
        auto a = random_measure(m, rng), b = a, c = a, d = a;
        for (int step = 0; step < 50; ++step) {
            a = mutate_small(a, plan, rng);
            b = mutate_large(b, plan, rng);
            c = mutate_valid_interval(c, rng);
            d = mutate_valid_interval_all(d, rng);
            ASSERT_TRUE(brute_valid(m, a.dense()));
            ASSERT_TRUE(brute_valid(m, b.dense()));
            ASSERT_TRUE(brute_valid(m, c.dense()));
            ASSERT_TRUE(brute_valid(m, d.dense()));
        }
    }
}

TEST(Selection, ElitesAreBestInOrder) {
    Rng rng(9);
    const std::vector<double> obj{0.5, 0.1, 0.9, 0.3, 0.2, 0.8, 0.7, 0.05};
    const auto idx = select_survivors(obj, 4, rng);
    ASSERT_EQ(idx.size(), 4u);
    EXPECT_EQ(idx[0], 7u);
    EXPECT_EQ(idx[1], 1u);
    std::vector<std::size_t> sorted = idx;
    std::sort(sorted.begin(), sorted.end());
    EXPECT_EQ(std::unique(sorted.begin(), sorted.end()), sorted.end());
}

TEST(Selection, EqualObjectivesTieBreakAndUniformRest) {
    Rng rng(10);
    const std::vector<double> obj(8, 0.4);
    std::map<std::size_t, int> hits;
    const int n = 40000;
    for (int i = 0; i < n; ++i) {
        const auto idx = select_survivors(obj, 4, rng);
        ASSERT_EQ(idx[0], 0u);
        ASSERT_EQ(idx[1], 1u);
        ++hits[idx[2]];
        ++hits[idx[3]];
    }
    EXPECT_EQ(hits.size(), 6u);
    for (std::size_t i = 2; i < 8; ++i) EXPECT_NEAR(hits[i] / (2.0 * n), 1.0 / 6.0, 0.01);
}

TEST(Selection, WorstIsRarelyKept) {
    Rng rng(11);
    const std::vector<double> obj{0.0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 1.0};
    int kept = 0;
    for (int i = 0; i < 5000; ++i) {
        const auto idx = select_survivors(obj, 4, rng);
        kept += std::count(idx.begin(), idx.end(), std::size_t{7});
    }
    EXPECT_LT(kept, 5);
}

TEST(Selection, SizeMismatch) {
    Rng rng(12);
    EXPECT_THROW(select_survivors(std::vector<double>(7, 0.0), 4, rng), Error);
    EXPECT_THROW(select_survivors(std::vector<double>(6, 0.0), 3, rng), Error);
}

TEST(Config, Validation) {
    auto bad = [](auto edit) {
        OptimizerConfig c;
        edit(c);
        EXPECT_THROW(c.validate(), Error);
    };
    bad([](OptimizerConfig& c) { c.population = 7; });
    bad([](OptimizerConfig& c) { c.population = 0; });
    bad([](OptimizerConfig& c) { c.max_iterations = -1; });
    bad([](OptimizerConfig& c) { c.fitness_threshold = 0.0; });
    bad([](OptimizerConfig& c) { c.small_mutation_rate = 1.5; });
    bad([](OptimizerConfig& c) { c.threads = 0; });
    EXPECT_NO_THROW(OptimizerConfig{}.validate());
}

TEST(Train, ZeroIterationsReturnsBestInitial) {
    const BagSet set = separable_toy_set(3, 4, 3, 1);
    auto c = small_config(5, 0);
    const auto model = train(set, ObjectiveSpec::min_max(), c);
    EXPECT_EQ(model.iterations_run, 0);
    ASSERT_EQ(model.trace.size(), 1u);
    double best = 1e300;
    for (std::size_t p = 0; p < 10; ++p) {
        Rng rng = derive_stream(5, 0, p);
        best = std::min(best, minmax_objective(init_measure(3, InitMode::CoinFlip, rng), set));
    }
    EXPECT_EQ(model.best_objective, best);
    EXPECT_EQ(minmax_objective(model.best_measure, set), best);
}

TEST(Train, DeterministicAndThreadIndependent) {
    Rng rng(13);
    const BagSet set = random_bagset(4, 10, 6, rng);
    auto c = small_config(77);
    const auto a = train(set, ObjectiveSpec::min_max(), c);
    const auto b = train(set, ObjectiveSpec::min_max(), c);
    c.threads = 4;
    const auto d = train(set, ObjectiveSpec::min_max(), c);
    EXPECT_TRUE(a.same_result(b));
    EXPECT_TRUE(a.same_result(d));
    c.seed = 78;
    EXPECT_FALSE(a.same_result(train(set, ObjectiveSpec::min_max(), c)));
}

TEST(Train, TraceNonIncreasingAndConsistent) {
    Rng rng(14);
    for (const auto& spec : {ObjectiveSpec::min_max(), ObjectiveSpec::generalized_mean(10, -10),
                             ObjectiveSpec::noisy_or(1.0, 0.1)}) {
        const BagSet set = random_bagset(3, 8, 5, rng);
        for (const Sampler s : {Sampler::MeasureElement, Sampler::ValidInterval}) {
            auto c = small_config(3);
            c.sampler = s;
            const auto model = train(set, spec, c);
            for (std::size_t t = 1; t < model.trace.size(); ++t) ASSERT_LE(model.trace[t], model.trace[t - 1]);
            EXPECT_EQ(model.trace.back(), model.best_objective);
            EXPECT_EQ(evaluate_objective(spec, model.best_measure, set), model.best_objective);
            EXPECT_EQ(model.trace.size(), static_cast<std::size_t>(model.iterations_run) + 1);
        }
    }
}

TEST(Train, StopsAfterStallWindow) {
    const BagSet set = separable_toy_set(3, 4, 3, 2);
    auto c = small_config(6, 5000);
    c.stall_window = 20;
    const auto model = train(set, ObjectiveSpec::min_max(), c);
    ASSERT_TRUE(model.converged);
    ASSERT_GE(model.trace.size(), 21u);
    const std::size_t n = model.trace.size();
    EXPECT_LE(model.trace[n - 21] - model.trace[n - 1], c.fitness_threshold);
    if (n > 21) EXPECT_GT(model.trace[n - 22] - model.trace[n - 2], c.fitness_threshold);
}

TEST(Train, Errors) {
    OptimizerConfig c = small_config(1);
    EXPECT_THROW(train(BagSet{3, {}}, ObjectiveSpec::min_max(), c), Error);
    BagSet reg{2, {}};
    reg.add_bag("a", 0.5).add_instance(std::vector<double>{0.1, 0.2});
    EXPECT_THROW(train(reg, ObjectiveSpec::min_max(), c), Error);
    EXPECT_NO_THROW(train(reg, ObjectiveSpec::regression(), c));
}

// Exhaustive grid over two-source measures at 0.01 resolution: a near-zero
// optimum exists on the separable toy set, and training finds one.
TEST(Train, SeparableToyMatchesGridOracle) {
    const BagSet set = separable_toy_set(5, 5, 2, 3);
    double grid_best = 1e300;
    for (int i = 0; i <= 100; ++i) {
        for (int j = 0; j <= 100; ++j) {
            const auto g = build_measure(2, {i / 100.0, j / 100.0, 1.0});
            grid_best = std::min(grid_best, minmax_objective(g, set));
        }
    }
    EXPECT_LT(grid_best, 0.05);
    OptimizerConfig c;
    c.seed = 3;
    const auto model = train(set, ObjectiveSpec::min_max(), c);
    EXPECT_LT(model.best_objective, 0.05);
    EXPECT_LE(model.best_objective, grid_best + 1e-3);
}

TEST(SamplerNames, RoundTrip) {
    EXPECT_EQ(parse_sampler("me"), Sampler::MeasureElement);
    EXPECT_EQ(parse_sampler("vi"), Sampler::ValidInterval);
    EXPECT_FALSE(parse_sampler("x").has_value());
}
