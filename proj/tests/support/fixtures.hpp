#pragma once

#include "emuchain/chain.hpp"
#include "emuchain/design.hpp"
#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"

#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace fixtures {

using namespace emuchain;

// Regression-only emulator reproducing f exactly when f lies in the trend
// span: zero residual variance and nugget.
inline std::shared_ptr<const Emulator> exact_emulator(const InputSpace& space, const std::string& output,
                                                      const std::function<double(std::span<const double>)>& f,
                                                      TrendBasis trend = TrendBasis::linear, std::size_t n = 12,
                                                      std::uint64_t seed = 7) {
    const auto design = latin_hypercube(space, n, seed);
    Eigen::VectorXd y(static_cast<Eigen::Index>(n));
    for (std::size_t i = 0; i < n; ++i) y(static_cast<Eigen::Index>(i)) = f(design.point(i));
    ResidualProcessSpec r;
    r.variance = 0.0;
    r.correlation_lengths.assign(space.size(), 1.0);
    return std::make_shared<const Emulator>(space, design.points(), y, output, trend, r);
}

inline DiscrepancySpec absolute_noise(const std::string& output, double sd) {
    return DiscrepancySpec::external_only({output}, ExternalMode::absolute, {sd});
}

// node1: y1 = 2x + d1, node2: y2 = y1 + 3 + d2; d1, d2, x standard normal.
// Terminal mean 3, variance 4 + 1 + 1 = 6.
struct LinearChain {
    ModelGraph graph;
    ExogenousSpec exogenous;
};

inline LinearChain linear_gaussian_chain(double sd1 = 1.0, double sd2 = 1.0) {
    const InputSpace s1({{"x", -8.0, 8.0}});
    const InputSpace s2({{"y1", -30.0, 30.0}});
    ModelNode n1{"node1",
                 {exact_emulator(s1, "y1", [](std::span<const double> p) { return 2.0 * p[0]; })},
                 sd1 > 0 ? absolute_noise("y1", sd1) : DiscrepancySpec::zero({"y1"}),
                 {{"x", ExogenousRef{"x"}}}};
    ModelNode n2{"node2",
                 {exact_emulator(s2, "y2", [](std::span<const double> p) { return p[0] + 3.0; })},
                 sd2 > 0 ? absolute_noise("y2", sd2) : DiscrepancySpec::zero({"y2"}),
                 {{"y1", UpstreamRef{"node1", "y1"}}}};
    LinearChain c{ModelGraph({n1, n2}), {}};
    c.exogenous.inputs["x"] = NormalDistribution{0.0, 1.0};
    return c;
}

inline double column_mean(const RowMatrix& m, Eigen::Index c) { return m.col(c).mean(); }

inline double column_variance(const RowMatrix& m, Eigen::Index c) {
    const double mu = m.col(c).mean();
    return (m.col(c).array() - mu).square().sum() / static_cast<double>(m.rows() - 1);
}

}  // namespace fixtures
