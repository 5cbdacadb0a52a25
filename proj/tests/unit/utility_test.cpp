#include "emuchain/error.hpp"
#include "emuchain/utility.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace emuchain;

TEST(Utility, LinearGambleIsWeightedSum) {
    const double r1 = 7.0, r2 = -3.0;
    const Gamble g{{{{r1}, 0.6}, {{r2}, 0.4}}};
    EXPECT_DOUBLE_EQ(utility_of_gamble(UtilitySpec::linear(), g), 0.6 * r1 + 0.4 * r2);
}

TEST(Utility, GambleBExpectedPayoff) {
    const Gamble b{{{{20.0}, 0.1}, {{-1.0}, 0.9}}};
    EXPECT_EQ(utility_of_gamble(UtilitySpec::linear(), b), 1.1);
}

TEST(Utility, RiskAverseFormsPreferTheSureThing) {
    const Gamble a{{{{0.0}, 1.0}}};
    const Gamble b{{{{20.0}, 0.1}, {{-1.0}, 0.9}}};
    EXPECT_GT(utility_of_gamble(UtilitySpec::log_shifted(2.0), a), utility_of_gamble(UtilitySpec::log_shifted(2.0), b));
    EXPECT_GT(utility_of_gamble(UtilitySpec::negative_exponential(1.0), a),
              utility_of_gamble(UtilitySpec::negative_exponential(1.0), b));
}

TEST(Utility, LogShiftedDomain) {
    EXPECT_THROW(UtilitySpec::log_shifted(2.0)(-2.0), InvalidArgument);
    EXPECT_DOUBLE_EQ(UtilitySpec::log_shifted(2.0)(0.0), std::log(2.0));
}

TEST(Utility, NegativeExponentialForm) {
    const auto u = UtilitySpec::negative_exponential(0.5);
    EXPECT_NEAR(u(2.0), (1.0 - std::exp(-1.0)) / 0.5, 1e-15);
    EXPECT_TRUE(u.strictly_concave());
    EXPECT_FALSE(UtilitySpec::linear().strictly_concave());
}

TEST(Utility, TabulatedInterpolatesAndExtrapolates) {
    AttributeUtility a;
    a.form = UtilityForm::tabulated;
    a.table_x = {0.0, 1.0, 3.0};
    a.table_u = {0.0, 2.0, 3.0};
    const UtilitySpec u({a});
    EXPECT_DOUBLE_EQ(u(0.5), 1.0);
    EXPECT_DOUBLE_EQ(u(2.0), 2.5);
    EXPECT_DOUBLE_EQ(u(-1.0), -2.0);
    EXPECT_DOUBLE_EQ(u(5.0), 4.0);
    a.table_u = {0.0, 2.0, 1.0};
    EXPECT_THROW(UtilitySpec({a}), InvalidArgument);
}

TEST(Utility, MinimizeSenseOrientsReward) {
    AttributeUtility benefit, cost;
    benefit.attribute = "benefit";
    cost.attribute = "cost";
    cost.sense = Sense::minimize;
    const UtilitySpec u({benefit, cost});
    EXPECT_DOUBLE_EQ(u(std::vector<double>{10.0, 4.0}), 6.0);
}

TEST(Utility, AffineTransform) {
    const auto u = UtilitySpec::log_shifted(3.0);
    const auto v = u.affine(2.0, -1.0);
    for (double r : {-2.5, 0.0, 4.0}) EXPECT_NEAR(v(r), 2.0 * u(r) - 1.0, 1e-14);
    EXPECT_THROW(u.affine(0.0, 1.0), InvalidArgument);
}

TEST(Utility, Validation) {
    AttributeUtility a, b;
    a.attribute = b.attribute = "a";
    EXPECT_THROW(UtilitySpec({a, b}), InvalidArgument);
    a.weight = 0.0;
    EXPECT_THROW(UtilitySpec({a}), InvalidArgument);
    EXPECT_THROW(UtilitySpec::negative_exponential(0.0), InvalidArgument);
    EXPECT_THROW(UtilitySpec({AttributeUtility{}}, -1.0), InvalidArgument);
}

TEST(Utility, MonotonicityProbe) {
    EXPECT_NO_THROW(UtilitySpec::log_shifted(1.0).check_monotone(-5.0, 5.0));
    EXPECT_NO_THROW(UtilitySpec::negative_exponential(-0.3).check_monotone(-5.0, 5.0));
}

TEST(Gamble, ProbabilitiesMustSumToOne) {
    const Gamble g{{{{1.0}, 0.5}, {{2.0}, 0.4}}};
    EXPECT_THROW(utility_of_gamble(UtilitySpec::linear(), g), InvalidArgument);
    const Gamble h{{{{1.0}, 0.5}, {{2.0}, 0.5}}};
    EXPECT_EQ(h.expected_reward(), std::vector<double>{1.5});
}
