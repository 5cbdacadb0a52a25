#include "emuchain/decision.hpp"
#include "emuchain/error.hpp"

#include "fixtures.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <set>

using namespace emuchain;

namespace {

FunctionOutcomeSource normal_source(std::function<double(double)> mean, std::function<double(double)> sd) {
    return FunctionOutcomeSource({"y"}, [=](std::span<const double> d, std::size_t n, std::uint64_t seed) {
        Rng r(seed);
        RowMatrix out(static_cast<Eigen::Index>(n), 1);
        for (std::size_t i = 0; i < n; ++i) out(static_cast<Eigen::Index>(i), 0) = mean(d[0]) + sd(d[0]) * r.normal();
        return out;
    });
}

DecisionSet line(std::size_t n) {
    RowMatrix c(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) c(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i) / static_cast<double>(std::max<std::size_t>(n - 1, 1));
    return DecisionSet(InputSpace({{"d", 0.0, 1.0, true}}), c);
}

}  // namespace

TEST(ExpectedUtility, ZeroVarianceIsExact) {
    const auto src = normal_source([](double d) { return 3.0 * d + 1.0; }, [](double) { return 0.0; });
    const auto e = expected_utility(src, UtilitySpec::linear(), std::vector<double>{0.5}, 100, 1);
    EXPECT_EQ(e.mean, 2.5);
    EXPECT_EQ(e.standard_error, 0.0);
}

TEST(ExpectedUtility, LinearGaussianChain) {
    const auto c = fixtures::linear_gaussian_chain();
    const GraphOutcomeSource src(c.graph, c.exogenous, {});
    const auto e = expected_utility(src, UtilitySpec::linear(), std::vector<double>{}, 50000, 4);
    EXPECT_LT(std::abs(e.mean - 3.0), 4.0 * e.standard_error);
}

TEST(ExpectedUtility, JensenOnMeanPreservingSpread) {
    const auto src = normal_source([](double) { return 1.0; }, [](double d) { return d; });
    const auto u = UtilitySpec::negative_exponential(1.0);
    const auto narrow = expected_utility(src, u, std::vector<double>{0.1}, 100000, 5);
    const auto wide = expected_utility(src, u, std::vector<double>{1.0}, 100000, 5);
    EXPECT_LT(wide.mean, narrow.mean);
}

TEST(ExpectedUtility, ReportsOffendingSample) {
    const auto src = normal_source([](double) { return -5.0; }, [](double) { return 0.0; });
    try {
        expected_utility(src, UtilitySpec::log_shifted(1.0), std::vector<double>{0.0}, 3, 1);
        FAIL();
    } catch (const InvalidArgument& e) {
        EXPECT_NE(std::string(e.what()).find("sample 0"), std::string::npos);
    }
}

TEST(StagedRejection, DisjointBoundsRejectAtStageOne) {
    // Estimates with se 1/6 give k = 3 bounds [0, 1] and [2, 3].
    const DecisionEvaluator ev = [](std::span<const double> d, std::size_t) {
        return Estimate{d[0] < 0.5 ? 0.5 : 2.5, 1.0 / 6.0};
    };
    const auto r = staged_rejection(line(2), ev);
    EXPECT_EQ(r.set.status[0], 1u);
    EXPECT_TRUE(r.set.active(1));
    EXPECT_EQ(r.best, 1u);
}

TEST(StagedRejection, OverlappingBoundsKeepBoth) {
    const DecisionEvaluator ev = [](std::span<const double> d, std::size_t) {
        return Estimate{d[0] < 0.5 ? 0.5 : 1.0, 0.5};
    };
    const auto r = staged_rejection(line(2), ev);
    EXPECT_TRUE(r.set.active(0));
    EXPECT_TRUE(r.set.active(1));
}

TEST(StagedRejection, KeepsAtLeastOneSurvivor) {
    const DecisionEvaluator ev = [](std::span<const double> d, std::size_t) { return Estimate{-d[0], 0.0}; };
    const auto r = staged_rejection(line(30), ev);
    EXPECT_FALSE(r.set.active_indices().empty());
    EXPECT_TRUE(r.set.active(0));
}

TEST(StagedRejection, QuadraticSurfaceKeepsArgmax) {
    for (std::uint64_t s = 0; s < 100; ++s) {
        Rng rng(s);
        const double c = rng.uniform(0.1, 0.9);
        const auto src = normal_source([=](double d) { return -4.0 * (d - c) * (d - c); }, [](double) { return 0.5; });
        const auto set = line(101);
        std::size_t argmax = 0;
        for (std::size_t i = 0; i < 101; ++i) {
            if (std::abs(set.decision(i)[0] - c) < std::abs(set.decision(argmax)[0] - c)) argmax = i;
        }
        const auto r = staged_rejection(set, make_utility_evaluator(src, UtilitySpec::linear(), 200, s));
        EXPECT_TRUE(r.set.active(argmax)) << "seed " << s;
    }
}

TEST(StagedRejection, BudgetBelowBasisIsRejected) {
    StagedOptions o;
    o.budget = 1;
    const DecisionEvaluator ev = [](std::span<const double>, std::size_t) { return Estimate{}; };
    EXPECT_THROW(staged_rejection(line(5), ev, o), InvalidArgument);
}

TEST(Pareto, SingleCandidate) {
    const DecisionEvaluator ev = [](std::span<const double>, std::size_t) { return Estimate{1.0, 0.0}; };
    const auto r = pareto_front(line(1), {ev}, {Orientation::maximize});
    EXPECT_EQ(r.boundary, std::vector<std::size_t>{0});
}

TEST(Pareto, CostBenefitExample) {
    RowMatrix c(3, 2);
    c << 1, 1, 2, 3, 3, 3;  // (cost, benefit)
    const DecisionSet set(InputSpace({{"cost", 0.0, 4.0}, {"benefit", 0.0, 4.0}}), c);
    const DecisionEvaluator cost = [](std::span<const double> d, std::size_t) { return Estimate{d[0], 0.0}; };
    const DecisionEvaluator benefit = [](std::span<const double> d, std::size_t) { return Estimate{d[1], 0.0}; };
    const auto r = pareto_front(set, {cost, benefit}, {Orientation::minimize, Orientation::maximize});
    EXPECT_EQ(r.boundary, (std::vector<std::size_t>{0, 1}));
    EXPECT_EQ(r.dominated_count, 1u);
    EXPECT_EQ(r.coordinates(1, 0), 2.0);
    EXPECT_EQ(r.coordinates(1, 1), 3.0);
}

TEST(Pareto, DominanceDefinition) {
    EXPECT_TRUE(dominates(std::vector<double>{2, 3}, std::vector<double>{2, 2}));
    EXPECT_FALSE(dominates(std::vector<double>{2, 2}, std::vector<double>{2, 2}));
    EXPECT_FALSE(dominates(std::vector<double>{3, 1}, std::vector<double>{2, 2}));
}

TEST(Pareto, NonDominatedMatchesOracle) {
    for (std::uint64_t s = 0; s < 50; ++s) {
        Rng rng(s);
        RowMatrix v(40, 3);
        std::vector<oracle::Vec> rows;
        for (Eigen::Index i = 0; i < 40; ++i) {
            // Coarse values so ties and duplicates occur.
            for (Eigen::Index k = 0; k < 3; ++k) v(i, k) = static_cast<double>(rng.index(6));
            rows.push_back({v(i, 0), v(i, 1), v(i, 2)});
        }
        EXPECT_EQ(non_dominated(v), oracle::non_dominated(rows));
    }
}

TEST(Pareto, NoisyEvaluationsStillContainBoundary) {
    // Near-boundary set always includes the boundary.
    Rng rng(9);
    RowMatrix c(30, 1);
    for (Eigen::Index i = 0; i < 30; ++i) c(i, 0) = rng.uniform();
    const DecisionSet set(InputSpace({{"d", 0.0, 1.0, true}}), c);
    const DecisionEvaluator a = [](std::span<const double> d, std::size_t) { return Estimate{d[0], 0.01}; };
    const DecisionEvaluator b = [](std::span<const double> d, std::size_t) { return Estimate{1.0 - d[0] * d[0], 0.01}; };
    const auto r = pareto_front(set, {a, b}, {Orientation::maximize, Orientation::maximize});
    const std::set<std::size_t> near(r.near_boundary.begin(), r.near_boundary.end());
    for (std::size_t i : r.boundary) EXPECT_TRUE(near.count(i));
}

TEST(RiskProfile, DegenerateSystem) {
    const auto src = normal_source([](double) { return 7.0; }, [](double) { return 0.0; });
    const auto p = risk_profile(src, std::vector<double>{0.0}, 100, 1);
    for (double q : p.summary[0].quantiles) EXPECT_EQ(q, 7.0);
    EXPECT_EQ(p.summary[0].variance, 0.0);
}

TEST(RiskProfile, StandardNormalQuantiles) {
    const auto src = normal_source([](double) { return 0.0; }, [](double) { return 1.0; });
    const std::size_t n = 100000;
    const auto p = risk_profile(src, std::vector<double>{0.0}, n, 2, {{"y", 0.0}});
    // Quantile standard error sqrt(p(1-p)/n) / phi(z).
    const double se = std::sqrt(0.05 * 0.95 / static_cast<double>(n)) / 0.10313564;
    EXPECT_NEAR(p.summary[0].quantiles[0], -1.6448536, 4.0 * se);
    EXPECT_NEAR(p.summary[0].quantiles[4], 1.6448536, 4.0 * se);
    EXPECT_NEAR(p.summary[0].probability_below, 0.5, 4.0 * 0.5 / std::sqrt(static_cast<double>(n)));
}

TEST(Stakeholders, CommonSurvivorsAreTheIntersection) {
    const auto set = line(41);
    const DecisionEvaluator left = [](std::span<const double> d, std::size_t) { return Estimate{-std::pow(d[0] - 0.3, 2), 0.001}; };
    const DecisionEvaluator right = [](std::span<const double> d, std::size_t) { return Estimate{-std::pow(d[0] - 0.35, 2), 0.001}; };
    const auto cmp = compare_stakeholders(set, {{"a", left}, {"b", right}});
    ASSERT_EQ(cmp.survivors.size(), 2u);
    std::vector<std::size_t> expect;
    std::set_intersection(cmp.survivors[0].begin(), cmp.survivors[0].end(), cmp.survivors[1].begin(),
                          cmp.survivors[1].end(), std::back_inserter(expect));
    EXPECT_EQ(cmp.common, expect);
}
