#include "emuchain/calibration.hpp"
#include "emuchain/error.hpp"

#include "fixtures.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace emuchain;

namespace {

const InputSpace unit1({{"x", 0.0, 1.0}});

std::shared_ptr<const Emulator> identity_emulator(const std::string& out = "y") {
    return fixtures::exact_emulator(unit1, out, [](std::span<const double> p) { return p[0]; });
}

DesignSet grid(std::size_t n) {
    RowMatrix p(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) p(static_cast<Eigen::Index>(i), 0) = static_cast<double>(i) / static_cast<double>(n - 1);
    return DesignSet(unit1, p);
}

}  // namespace

TEST(Implausibility, ZeroWhenObservationEqualsMean) {
    const auto em = identity_emulator();
    const std::vector<double> x{0.3};
    EXPECT_EQ(implausibility(*em, DiscrepancySpec::zero({"y"}), {"y", em->predict(x).mean, 1.0}, x), 0.0);
}

TEST(Implausibility, InfiniteWithNoVariance) {
    const auto em = identity_emulator();
    const std::vector<double> x{0.3};
    EXPECT_TRUE(std::isinf(implausibility(*em, DiscrepancySpec::zero({"y"}), {"y", 1.0, 0.0}, x)));
}

TEST(Implausibility, RejectsMismatchedOutput) {
    const auto em = identity_emulator();
    const std::vector<double> x{0.3};
    EXPECT_THROW(implausibility(*em, DiscrepancySpec::zero({"y"}), {"z", 1.0, 1.0}, x), InvalidArgument);
}

TEST(HistoryMatch, NeedsObservations) {
    EXPECT_THROW(history_match({identity_emulator()}, DiscrepancySpec::zero({"y"}), {}, grid(5)), InvalidArgument);
}

TEST(HistoryMatch, CutoffZeroKeepsOnlyExactMatches) {
    const auto rs = history_match({identity_emulator()}, DiscrepancySpec::zero({"y"}), {{"y", 0.3333, 0.01}}, grid(11), 0.0);
    EXPECT_EQ(rs.retained_count(), 0u);
    EXPECT_FALSE(rs.notes.empty());
}

TEST(HistoryMatch, RetainsIntervalAroundObservation) {
    const auto rs = history_match({identity_emulator()}, DiscrepancySpec::zero({"y"}), {{"y", 0.5, 0.01}}, grid(101), 3.0);
    for (std::size_t i = 0; i < 101; ++i) {
        const double x = static_cast<double>(i) / 100.0;
        if (std::abs(x - 0.5) < 0.299) {
            EXPECT_TRUE(rs.retained[i]) << x;
        } else if (std::abs(x - 0.5) > 0.301) {
            EXPECT_FALSE(rs.retained[i]) << x;
        }
    }
}

TEST(Forecast, SingleRetainedPointWithoutVariance) {
    const auto em = identity_emulator();
    RowMatrix p(1, 1);
    p << 0.42;
    const auto rs = history_match({em}, DiscrepancySpec::zero({"y"}), {{"y", 0.42, 0.01}}, DesignSet(unit1, p));
    const auto f = forecast({em}, DiscrepancySpec::zero({"y"}), rs, 100, 3);
    for (Eigen::Index i = 0; i < f.rows(); ++i) EXPECT_EQ(f(i, 0), em->predict(std::vector<double>{0.42}).mean);
}

TEST(Forecast, ConditionalMeanOfLinearModel) {
    const auto em = identity_emulator();
    const auto disc = DiscrepancySpec::external_only({"y"}, ExternalMode::absolute, {0.05});
    const auto rs = history_match({em}, disc, {{"y", 0.4, 0.0}}, grid(1001));
    // Retained x is symmetric about 0.4, so the forecast mean is 0.4.
    const std::size_t n = 20000;
    const auto f = forecast({em}, disc, rs, n, 5);
    const double m = f.col(0).mean();
    const double sd = std::sqrt((f.col(0).array() - m).square().sum() / static_cast<double>(n - 1));
    EXPECT_LT(std::abs(m - 0.4), 4.0 * sd / std::sqrt(static_cast<double>(n)));
    EXPECT_EQ(f, forecast({em}, disc, rs, n, 5));
}

TEST(Inflation, AtLeastOneAndSolvesUnitMeanSquare) {
    auto e1 = identity_emulator("y1");
    auto e2 = fixtures::exact_emulator(unit1, "y2", [](std::span<const double> p) { return 2.0 * p[0]; });
    const auto disc = DiscrepancySpec::external_only({"y1", "y2"}, ExternalMode::absolute, {1.0, 1.0});
    const std::vector<double> x{0.5};
    EXPECT_EQ(calibrate_external_inflation({e1, e2}, disc, {{"y1", 0.6, 0.0}, {"y2", 0.9, 0.0}}, x), 1.0);
    const double s = calibrate_external_inflation({e1, e2}, disc, {{"y1", 3.5, 0.0}, {"y2", 4.0, 0.0}}, x);
    EXPECT_NEAR(s, 3.0, 1e-8);
}
