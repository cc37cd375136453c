#include <gtest/gtest.h>

#include <cmath>

#include "mici/choquet.hpp"
#include "mici/objectives.hpp"
#include "test_util.hpp"

using namespace mici;
using mici::testing::random_bagset;
using mici::testing::random_measure;

namespace {

constexpr int kM = 3;

// A constant instance integrates to its value under any measure, so bags can
// be written directly in terms of CI values.
BagSet ci_bags(std::initializer_list<std::pair<double, std::vector<double>>> bags) {
    BagSet set{kM, {}};
    int k = 0;
    for (const auto& [label, cis] : bags) {
        Bag& b = set.add_bag("b" + std::to_string(k++), label);
        for (const double c : cis) b.add_instance(std::vector<double>(kM, c));
    }
    return set;
}

const FuzzyMeasure& any_measure() {
    static const FuzzyMeasure g = build_measure(kM, {0.2, 0.5, 0.6, 0.1, 0.7, 0.8, 1.0});
    return g;
}

std::vector<std::vector<double>> bag_cis(const FuzzyMeasure& g, const BagSet& set) {
    std::vector<std::vector<double>> out;
    for (const Bag& b : set.bags) {
        out.emplace_back();
        for (std::size_t i = 0; i < b.size(); ++i) out.back().push_back(choquet_integral(g, b.instance(i)));
    }
    return out;
}

// Direct power-mean evaluation without the log domain.
double naive_genmean(const FuzzyMeasure& g, const BagSet& set, double p1, double p2) {
    const auto cis = bag_cis(g, set);
    double total = 0.0;
    for (std::size_t b = 0; b < set.size(); ++b) {
        const bool neg = set.bags[b].label == 0.0;
        const double p = neg ? p1 : p2;
        double acc = 0.0;
        for (const double c : cis[b]) acc += std::pow(neg ? c * c : (c - 1.0) * (c - 1.0), p);
        total += std::pow(acc / static_cast<double>(cis[b].size()), 1.0 / p);
    }
    return total;
}

}  // namespace

TEST(MinMax, PerfectBagsContributeZero) {
    EXPECT_EQ(minmax_objective(any_measure(), ci_bags({{0.0, {0.0, 0.0, 0.0}}})), 0.0);
    EXPECT_EQ(minmax_objective(any_measure(), ci_bags({{1.0, {1.0, 0.3, 0.1}}})), 0.0);
}

TEST(MinMax, HandEvaluated) {
    const auto set = ci_bags({{1.0, {0.6, 0.9}}, {0.0, {0.2, 0.4}}});
    EXPECT_NEAR(minmax_objective(any_measure(), set), 0.17, 1e-15);
}

TEST(MinMax, ZeroExactlyWhenBagsSatisfied) {
    BagSet set{2, {}};
    set.add_bag("n", 0.0).add_instance(std::vector<double>{0.0, 0.7});
    set.add_bag("p", 1.0).add_instance(std::vector<double>{1.0, 0.2});
    const auto zero_cond = build_measure(2, {1.0, 0.0, 1.0});
    EXPECT_EQ(minmax_objective(zero_cond, set), 0.0);
    EXPECT_GT(minmax_objective(build_measure(2, {0.5, 0.5, 1.0}), set), 0.0);
}

TEST(MinMax, RejectsNonBinaryLabels) {
    try {
        minmax_objective(any_measure(), ci_bags({{0.5, {0.1}}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::NonBinaryLabel);
    }
}

TEST(GeneralizedMean, ArithmeticMeanCase) {
    EXPECT_NEAR(genmean_objective(any_measure(), ci_bags({{0.0, {0.2, 0.4}}}), 1.0, -1.0), 0.1, 1e-14);
}

TEST(GeneralizedMean, PerfectPositiveBagIsZero) {
    for (const double p2 : {-1.0, -10.0, -50.0}) {
        EXPECT_NEAR(genmean_objective(any_measure(), ci_bags({{1.0, {1.0, 1.0}}}), 10.0, p2), 0.0, 1e-20);
    }
}

TEST(GeneralizedMean, PerfectInstanceDominatesPositiveBag) {
    const double v = genmean_objective(any_measure(), ci_bags({{1.0, {1.0, 0.2, 0.3}}}), 10.0, -10.0);
    EXPECT_LT(v, 1e-20);
}

TEST(GeneralizedMean, InvalidExponents) {
    for (const auto& [p1, p2] : std::vector<std::pair<double, double>>{{0.5, -10}, {10, -0.5}, {-1, 1}}) {
        try {
            genmean_objective(any_measure(), ci_bags({{0.0, {0.2}}}), p1, p2);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidExponent);
        }
    }
}

TEST(GeneralizedMean, HandlesUnderflowRegime) {
    // CI^20 underflows naively for tiny CI; log domain still returns a finite value.
    const double v = genmean_objective(any_measure(), ci_bags({{0.0, {1e-30, 2e-30}}}), 10.0, -10.0);
    EXPECT_GT(v, 0.0);
    EXPECT_LT(v, 1e-58);
    EXPECT_EQ(genmean_objective(any_measure(), ci_bags({{0.0, {0.0, 0.0}}}), 10.0, -10.0), 0.0);
}

TEST(GeneralizedMeanProperty, LogDomainMatchesNaive) {
    Rng rng(21);
    for (int trial = 0; trial < 500; ++trial) {
        BagSet set{3, {}};
        for (int b = 0; b < 6; ++b) {
            Bag& bag = set.add_bag("b" + std::to_string(b), b % 2);
            for (int i = 0; i < 4; ++i) {
                bag.add_instance(std::vector<double>{uniform(rng, 0.3, 0.8), uniform(rng, 0.3, 0.8),
                                                     uniform(rng, 0.3, 0.8)});
            }
        }
        const auto g = random_measure(3, rng);
        for (const auto& [p1, p2] : std::vector<std::pair<double, double>>{{1, -1}, {5, -5}, {10, -10}}) {
            const double fast = genmean_objective(g, set, p1, p2);
            ASSERT_NEAR(fast, naive_genmean(g, set, p1, p2), 1e-9 * std::max(1.0, fast));
        }
    }
}

// J_G with (p, -p) and bag size N lies within classical power-mean bounds of J_M:
// max^2 N^(-1/p) <= negative term <= max^2, min d^2 <= positive term <= min d^2 N^(1/p).
TEST(GeneralizedMeanProperty, PowerMeanBoundsAroundMinMax) {
    Rng rng(22);
    for (int trial = 0; trial < 1000; ++trial) {
        const int m = 2 + trial % 4;
        const BagSet set = random_bagset(m, 6, 10, rng);
        const auto g = random_measure(m, rng);
        const double p = 50.0;
        const auto cis = bag_cis(g, set);
        double lo = 0.0, hi = 0.0;
        for (std::size_t b = 0; b < set.size(); ++b) {
            const double n = static_cast<double>(cis[b].size());
            if (set.bags[b].label == 0.0) {
                const double mx = *std::max_element(cis[b].begin(), cis[b].end());
                lo += mx * mx * std::pow(n, -1.0 / p);
                hi += mx * mx;
            } else {
                double best = 1.0;
                for (const double c : cis[b]) best = std::min(best, (1.0 - c) * (1.0 - c));
                lo += best;
                hi += best * std::pow(n, 1.0 / p);
            }
        }
        const double jg = genmean_objective(g, set, p, -p);
        ASSERT_GE(jg, lo - 1e-12);
        ASSERT_LE(jg, hi + 1e-12);
    }
}

TEST(GeneralizedMeanProperty, SingletonBagsEqualMinMax) {
    Rng rng(23);
    for (int trial = 0; trial < 300; ++trial) {
        const BagSet set = random_bagset(4, 8, 1, rng);
        const auto g = random_measure(4, rng);
        ASSERT_NEAR(genmean_objective(g, set, 50.0, -50.0), minmax_objective(g, set), 1e-12);
    }
}

TEST(NoisyOr, KernelAtZero) {
    const double v = noisyor_objective(any_measure(), ci_bags({{0.0, {0.0}}}), 1.0, 0.1);
    EXPECT_NEAR(v, -std::log(1.0 - std::exp(-5.0)), 1e-15);
    EXPECT_NEAR(v, 0.00676, 1e-5);
}

TEST(NoisyOr, NegativeAtKernelCentreIsFloored) {
    const double v = noisyor_objective(any_measure(), ci_bags({{0.0, {1.0}}}), 1.0, 0.1);
    EXPECT_NEAR(v, -std::log(1e-12), 1e-9);
}

TEST(NoisyOr, PositiveHitHasNoPenalty) {
    EXPECT_NEAR(noisyor_objective(any_measure(), ci_bags({{1.0, {1.0, 0.1}}}), 1.0, 0.1), 0.0, 1e-15);
}

TEST(NoisyOr, InvalidVariance) {
    for (const double s2 : {0.0, -1.0}) {
        try {
            noisyor_objective(any_measure(), ci_bags({{0.0, {0.1}}}), 1.0, s2);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.code(), ErrorCode::InvalidVariance);
        }
    }
}

TEST(Micir, PrimaryInstanceBag) {
    EXPECT_EQ(micir_objective(any_measure(), ci_bags({{0.6, {0.3, 0.6}}})), 0.0);
    EXPECT_NEAR(micir_objective(any_measure(), ci_bags({{0.6, {0.3, 0.7}}})), 0.01, 1e-15);
    EXPECT_EQ(micir_objective(any_measure(), BagSet{3, {}}), 0.0);
}

TEST(Micir, LabelRange) {
    try {
        micir_objective(any_measure(), ci_bags({{1.5, {0.3}}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), ErrorCode::LabelOutOfRange);
    }
}

TEST(Reconstruct, SplitsNegativeBags) {
    BagSet set{2, {}};
    Bag& n = set.add_bag("n", 0.0);
    for (int i = 0; i < 5; ++i) n.add_instance(std::vector<double>{0.1 * i, 0.0});
    set.add_bag("p1", 1.0).add_instance(std::vector<double>{1.0, 1.0});
    set.add_bag("p2", 1.0).add_instance(std::vector<double>{0.9, 1.0});
    const BagSet out = reconstruct_bags_for_classification(set);
    ASSERT_EQ(out.size(), 7u);
    int negatives = 0;
    for (const Bag& b : out.bags) {
        if (b.label == 0.0) {
            ++negatives;
            EXPECT_EQ(b.size(), 1u);
        }
    }
    EXPECT_EQ(negatives, 5);
    EXPECT_EQ(out.num_instances(), set.num_instances());
}

TEST(Reconstruct, NoNegativesIsIdentity) {
    Rng rng(24);
    BagSet set = random_bagset(3, 4, 4, rng);
    for (Bag& b : set.bags) b.label = 1.0;
    EXPECT_EQ(reconstruct_bags_for_classification(set), set);
}

TEST(Reconstruct, SingletonNegativeKept) {
    BagSet set{2, {}};
    set.add_bag("n", 0.0).add_instance(std::vector<double>{0.2, 0.3});
    const BagSet out = reconstruct_bags_for_classification(set);
    ASSERT_EQ(out.size(), 1u);
    EXPECT_EQ(out.bags[0].size(), 1u);
    EXPECT_EQ(out.bags[0].label, 0.0);
}

TEST(ReconstructProperty, MicirOnReconstructedBags) {
    Rng rng(25);
    for (int trial = 0; trial < 300; ++trial) {
        const BagSet set = random_bagset(3, 6, 5, rng);
        const auto g = random_measure(3, rng);
        const auto cis = bag_cis(g, set);
        double expected = 0.0;
        for (std::size_t b = 0; b < set.size(); ++b) {
            if (set.bags[b].label == 0.0) {
                for (const double c : cis[b]) expected += c * c;
            } else {
                double best = 1.0;
                for (const double c : cis[b]) best = std::min(best, (c - 1.0) * (c - 1.0));
                expected += best;
            }
        }
        ASSERT_NEAR(micir_objective(g, reconstruct_bags_for_classification(set)), expected, 1e-12);
    }
}

TEST(ObjectiveProperty, Deterministic) {
    Rng rng(26);
    const BagSet set = random_bagset(4, 10, 6, rng);
    const auto g = random_measure(4, rng);
    for (const auto& spec : {ObjectiveSpec::min_max(), ObjectiveSpec::generalized_mean(10, -10),
                             ObjectiveSpec::noisy_or(1.0, 0.1)}) {
        EXPECT_EQ(evaluate_objective(spec, g, set), evaluate_objective(spec, g, set));
    }
}

TEST(ObjectiveKindNames, RoundTrip) {
    for (const auto k : {ObjectiveKind::MinMax, ObjectiveKind::GeneralizedMean, ObjectiveKind::NoisyOr,
                         ObjectiveKind::Regression}) {
        EXPECT_EQ(parse_objective_kind(to_string(k)), k);
    }
    EXPECT_FALSE(parse_objective_kind("bogus").has_value());
}
