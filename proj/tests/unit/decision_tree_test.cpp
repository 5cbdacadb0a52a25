#include "emuchain/decision_tree.hpp"
#include "emuchain/error.hpp"
#include "emuchain/io.hpp"

#include <gtest/gtest.h>

#include <filesystem>

using namespace emuchain;

namespace {

TreeNode leaf(double r) { return {TreeNodeKind::leaf, "", {}, {}, {}, {r}}; }
TreeNode decision(std::vector<std::size_t> c) { return {TreeNodeKind::decision, "", std::move(c), {}, {}, {}}; }
TreeNode chance(std::vector<std::size_t> c, std::vector<double> p) {
    return {TreeNodeKind::chance, "", std::move(c), std::move(p), {}, {}};
}

}  // namespace

TEST(DecisionTree, SingleDecision) {
    const DecisionTree t({decision({1, 2, 3}), leaf(2), leaf(5), leaf(3)});
    const auto s = solve_tree(t, UtilitySpec::linear());
    EXPECT_EQ(s.value, 5.0);
    EXPECT_EQ(s.policy.at(0), 1u);
}

TEST(DecisionTree, SingleChance) {
    const DecisionTree t({chance({1, 2}, {0.5, 0.5}), leaf(4), leaf(0)});
    EXPECT_EQ(solve_tree(t, UtilitySpec::linear()).value, 2.0);
}

TEST(DecisionTree, TiesGoToLowestPosition) {
    const DecisionTree t({decision({1, 2}), leaf(3), leaf(3)});
    EXPECT_EQ(solve_tree(t, UtilitySpec::linear()).policy.at(0), 0u);
}

TEST(DecisionTree, UtilityChangesPolicy) {
    // Safe 0 versus the 20 / -1 gamble.
    const DecisionTree t({decision({1, 2}), leaf(0), chance({3, 4}, {0.1, 0.9}), leaf(20), leaf(-1)});
    EXPECT_EQ(solve_tree(t, UtilitySpec::linear()).policy.at(0), 1u);
    EXPECT_EQ(solve_tree(t, UtilitySpec::log_shifted(2.0)).policy.at(0), 0u);
}

TEST(DecisionTree, CorpusExpectations) {
    const auto dir = std::filesystem::path(EMUCHAIN_SOURCE_DIR) / "tests/data/trees";
    std::size_t checked = 0;
    for (const auto& e : std::filesystem::directory_iterator(dir)) {
        if (e.path().extension() != ".json") continue;
        const Json j = read_json(e.path());
        if (!j.contains("expected")) continue;
        const auto s = solve_tree(tree_from_json(j), UtilitySpec::linear());
        EXPECT_EQ(s.value, j["expected"]["value"].get<double>()) << e.path();
        for (const auto& [node, choice] : j["expected"]["policy"].items()) {
            EXPECT_EQ(s.policy.at(std::stoul(node)), choice.get<std::size_t>()) << e.path();
        }
        ++checked;
    }
    EXPECT_GE(checked, 3u);
}

TEST(DecisionTree, StructuralValidation) {
    EXPECT_THROW(DecisionTree({decision({1, 1}), leaf(1)}), InvalidArgument);
    EXPECT_THROW(DecisionTree({decision({1}), leaf(1), leaf(2)}), InvalidArgument);
    EXPECT_THROW(DecisionTree({chance({1, 2}, {0.5, 0.6}), leaf(1), leaf(2)}), InvalidArgument);
    EXPECT_THROW(DecisionTree({decision({}), leaf(1)}), InvalidArgument);
}

TEST(DecisionTree, ValueOfInformation) {
    // Observe the state first: choose the right option in each state.
    const DecisionTree informed({chance({1, 4}, {0.5, 0.5}), decision({2, 3}), leaf(10), leaf(0), decision({5, 6}),
                                 leaf(0), leaf(10)});
    const DecisionTree blind({decision({1, 4}), chance({2, 3}, {0.5, 0.5}), leaf(10), leaf(0), chance({5, 6}, {0.5, 0.5}),
                              leaf(0), leaf(10)});
    EXPECT_EQ(value_of_information(informed, blind, UtilitySpec::linear()), 5.0);
}
