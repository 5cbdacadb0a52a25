#include "emuchain/chain.hpp"
#include "emuchain/error.hpp"
#include "emuchain/stats.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace emuchain;
using fixtures::exact_emulator;

namespace {

std::vector<double> column(const RowMatrix& m, Eigen::Index c) {
    return {m.col(c).begin(), m.col(c).end()};
}

}  // namespace

TEST(Chain, IdentityChainPassesValueThrough) {
    const InputSpace s({{"x", 0.0, 10.0}});
    auto id = [](std::span<const double> p) { return p[0]; };
    ModelNode a{"a", {exact_emulator(s, "x", id)}, DiscrepancySpec::zero({"x"}), {{"x", ExogenousRef{"x0"}}}};
    ModelNode b{"b", {exact_emulator(s, "y", id)}, DiscrepancySpec::zero({"y"}), {{"x", UpstreamRef{"a", "x"}}}};
    ExogenousSpec exo;
    exo.inputs["x0"] = FixedValue{4.0};
    const auto r = propagate(ModelGraph({a, b}), exo, {}, 50, 1);
    EXPECT_EQ(r.columns, std::vector<std::string>{"b.y"});
    for (Eigen::Index i = 0; i < 50; ++i) EXPECT_NEAR(r.samples(i, 0), 4.0, 1e-12);
}

TEST(Chain, DeterministicAndThreadIndependent) {
    const auto c = fixtures::linear_gaussian_chain();
    const auto a = propagate(c.graph, c.exogenous, {}, 5000, 77);
    PropagateOptions po;
    po.threads = 4;
    EXPECT_EQ(a.samples, propagate(c.graph, c.exogenous, {}, 5000, 77).samples);
    EXPECT_EQ(a.samples, propagate(c.graph, c.exogenous, {}, 5000, 77, po).samples);
    EXPECT_NE(a.samples, propagate(c.graph, c.exogenous, {}, 5000, 78).samples);
}

TEST(Chain, RejectsCycles) {
    const InputSpace s({{"u", -1.0, 1.0}});
    auto id = [](std::span<const double> p) { return p[0]; };
    ModelNode a{"a", {exact_emulator(s, "o", id)}, DiscrepancySpec::zero({"o"}), {{"u", UpstreamRef{"b", "o"}}}};
    ModelNode b{"b", {exact_emulator(s, "o", id)}, DiscrepancySpec::zero({"o"}), {{"u", UpstreamRef{"a", "o"}}}};
    EXPECT_THROW(ModelGraph({a, b}), InvalidArgument);
}

TEST(Chain, RejectsUnboundAndUnknownInputs) {
    const InputSpace s({{"u", -1.0, 1.0}, {"v", -1.0, 1.0}});
    auto f = [](std::span<const double> p) { return p[0] + p[1]; };
    ModelNode a{"a", {exact_emulator(s, "o", f)}, DiscrepancySpec::zero({"o"}), {{"u", ConstantValue{0.0}}}};
    EXPECT_THROW(ModelGraph({a}), InvalidArgument);
    a.bindings.push_back({"w", ConstantValue{0.0}});
    EXPECT_THROW(ModelGraph({a}), InvalidArgument);
}

TEST(Chain, MissingExogenousOrDecision) {
    const auto c = fixtures::linear_gaussian_chain();
    EXPECT_THROW(propagate(c.graph, {}, {}, 10, 1), InvalidArgument);
}

// Exact emulators of quadratic-span functions reproduce direct composition.
TEST(Chain, CompositionSoundness) {
    const InputSpace s1({{"x", -2.0, 2.0}});
    const InputSpace s2({{"y", -1.0, 5.0}, {"z", 0.0, 1.0}});
    auto f1 = [](std::span<const double> p) { return p[0] * p[0] + 0.5 * p[0]; };
    auto f2 = [](std::span<const double> p) { return 1.5 * p[0] - 3.0 * p[1] * p[0] + 0.25; };
    ModelNode n1{"n1", {exact_emulator(s1, "y", f1, TrendBasis::quadratic)}, DiscrepancySpec::zero({"y"}),
                 {{"x", ExogenousRef{"x"}}}};
    ModelNode n2{"n2", {exact_emulator(s2, "w", f2, TrendBasis::quadratic, 15)}, DiscrepancySpec::zero({"w"}),
                 {{"y", UpstreamRef{"n1", "y"}}, {"z", ExogenousRef{"z"}}}};
    Rng rng(3);
    EmpiricalTable t{{"x", "z"}, RowMatrix(1000, 2), true};
    for (Eigen::Index i = 0; i < 1000; ++i) t.rows.row(i) << rng.uniform(-2.0, 2.0), rng.uniform();
    ExogenousSpec exo;
    exo.tables.push_back(t);
    const auto r = propagate(ModelGraph({n1, n2}), exo, {}, 1000, 9);
    for (Eigen::Index i = 0; i < 1000; ++i) {
        const double y = f1(std::vector<double>{t.rows(i, 0)});
        const double w = f2(std::vector<double>{y, t.rows(i, 1)});
        ASSERT_NEAR(r.samples(i, 0), w, 1e-8);
    }
}

// Propagating the upstream node alone, freezing its samples and feeding
// them downstream reproduces the full-graph terminal distribution.
TEST(Chain, Modularity) {
    const auto full = fixtures::linear_gaussian_chain();
    const std::size_t n = 100000;
    const auto whole = propagate(full.graph, full.exogenous, {}, n, 11);

    const ModelGraph upstream({full.graph.node("node1")});
    const auto part = propagate(upstream, full.exogenous, {}, n, 12);
    ModelNode down = full.graph.node("node2");
    down.bindings = {{"y1", ExogenousRef{"y1"}}};
    ExogenousSpec frozen;
    frozen.tables.push_back({{"y1"}, part.samples, true});
    const auto staged = propagate(ModelGraph({down}), frozen, {}, n, 13);

    const double ks = ks_statistic(column(whole.samples, 0), column(staged.samples, 0));
    EXPECT_LT(ks, 1.358 * std::sqrt(2.0 / static_cast<double>(n)));
}

TEST(Chain, DiscrepancyDrawsIndependentAcrossNodes) {
    const auto c = fixtures::linear_gaussian_chain();
    PropagateOptions po;
    po.keep_trace = true;
    const std::size_t n = 100000;
    const auto r = propagate(c.graph, c.exogenous, {}, n, 21, po);
    const auto a = column(r.trace.at("node1").discrepancy, 0);
    const auto b = column(r.trace.at("node2").discrepancy, 0);
    const double ma = mean(a), mb = mean(b);
    double cov = 0.0;
    for (std::size_t i = 0; i < n; ++i) cov += (a[i] - ma) * (b[i] - mb);
    cov /= static_cast<double>(n - 1);
    const double corr = cov / std::sqrt(sample_variance(a) * sample_variance(b));
    EXPECT_LT(std::abs(corr), 4.0 / std::sqrt(static_cast<double>(n)));
}

TEST(Chain, ZeroingDiscrepancyNeverIncreasesVariance) {
    const auto c = fixtures::linear_gaussian_chain(1.0, 0.7);
    for (const char* node : {"node1", "node2"}) {
        const auto quiet = c.graph.with_discrepancy(node, DiscrepancySpec::zero({node == std::string("node1") ? "y1" : "y2"}));
        double full = 0.0, reduced = 0.0;
        for (std::uint64_t seed = 0; seed < 20; ++seed) {
            full += fixtures::column_variance(propagate(c.graph, c.exogenous, {}, 2000, seed).samples, 0);
            reduced += fixtures::column_variance(propagate(quiet, c.exogenous, {}, 2000, seed).samples, 0);
        }
        EXPECT_LE(reduced, full) << node;
    }
}

namespace {

// y1 = 2x + d + noise, y2 = y1 + 3 + noise: terminal mean d + 3.
ModelGraph decision_chain(double sd) {
    const InputSpace s1({{"x", -8.0, 8.0}, {"d", -3.0, 3.0, true}});
    const InputSpace s2({{"y1", -30.0, 30.0}});
    ModelNode n1{"node1", {exact_emulator(s1, "y1", [](std::span<const double> p) { return 2.0 * p[0] + p[1]; })},
                 sd > 0 ? fixtures::absolute_noise("y1", sd) : DiscrepancySpec::zero({"y1"}),
                 {{"x", ExogenousRef{"x"}}, {"d", DecisionRef{"d"}}}};
    ModelNode n2{"node2", {exact_emulator(s2, "y2", [](std::span<const double> p) { return p[0] + 3.0; })},
                 sd > 0 ? fixtures::absolute_noise("y2", sd) : DiscrepancySpec::zero({"y2"}),
                 {{"y1", UpstreamRef{"node1", "y1"}}}};
    return ModelGraph({n1, n2});
}

DesignSet decision_grid(std::size_t n) {
    RowMatrix p(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) p(static_cast<Eigen::Index>(i), 0) = -2.0 + 4.0 * static_cast<double>(i) / static_cast<double>(n - 1);
    return DesignSet(InputSpace({{"d", -3.0, 3.0, true}}), p);
}

}  // namespace

TEST(CombinedEmulation, DeterministicGraph) {
    ExogenousSpec exo;
    exo.inputs["x"] = FixedValue{0.5};
    const auto grid = decision_grid(7);
    const auto ce = emulate_combined(decision_chain(0.0), exo, grid, 30, 1);
    for (std::size_t i = 0; i < grid.runs(); ++i) {
        EXPECT_NEAR(ce.mean.predict(grid.point(i)).mean, grid.point(i)[0] + 4.0, 1e-8);
        EXPECT_NEAR(ce.log_variance.predict(grid.point(i)).mean, std::log(variance_floor), 1e-6);
    }
}

TEST(CombinedEmulation, HeldOutDecisionMean) {
    ExogenousSpec exo;
    exo.inputs["x"] = NormalDistribution{0.0, 1.0};
    const std::size_t n_inner = 2000;
    const auto ce = emulate_combined(decision_chain(1.0), exo, decision_grid(9), n_inner, 2);
    const std::vector<double> d{0.37};
    const auto p = ce.mean.predict(d);
    const double mc_se = std::sqrt(6.0 / static_cast<double>(n_inner));
    EXPECT_LT(std::abs(p.mean - 3.37), 4.0 * std::sqrt(mc_se * mc_se + p.variance));
    EXPECT_NEAR(std::exp(ce.log_variance.predict(d).mean), 6.0, 1.0);
}

TEST(CombinedEmulation, Preconditions) {
    ExogenousSpec exo;
    exo.inputs["x"] = FixedValue{0.0};
    EXPECT_THROW(emulate_combined(decision_chain(1.0), exo, decision_grid(2).rows({0}), 100, 1), InvalidArgument);
    EXPECT_THROW(emulate_combined(decision_chain(1.0), exo, decision_grid(5), 10, 1), InvalidArgument);
}
