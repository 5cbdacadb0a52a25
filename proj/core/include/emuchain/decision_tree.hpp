#pragma once

#include "emuchain/utility.hpp"

#include <cstddef>
#include <map>
#include <string>
#include <vector>

namespace emuchain {

enum class TreeNodeKind { decision, chance, leaf };

struct TreeNode {
    TreeNodeKind kind = TreeNodeKind::leaf;
    std::string label;
    std::vector<std::size_t> children;
    std::vector<double> probabilities;  // chance nodes
    std::vector<std::string> options;   // decision nodes, optional labels
    std::vector<double> reward;         // leaves
};

// Finite decision tree stored as a node array. Construction checks that every
// node except the root has exactly one parent, that all nodes are reachable,
// and that chance probabilities sum to one.
class DecisionTree {
public:
    DecisionTree(std::vector<TreeNode> nodes, std::size_t root = 0);

    const std::vector<TreeNode>& nodes() const noexcept { return nodes_; }
    const TreeNode& node(std::size_t i) const { return nodes_.at(i); }
    std::size_t root() const noexcept { return root_; }
    std::vector<std::size_t> decision_nodes() const;

private:
    std::vector<TreeNode> nodes_;
    std::size_t root_;
};

struct TreeSolution {
    double value = 0.0;
    std::map<std::size_t, std::size_t> policy;  // decision node -> chosen child position
    std::vector<double> node_values;
};

// Backward induction. Leaves take U(reward), chance nodes the probability
// weighted sum, decision nodes the maximum with ties going to the lowest
// child position.
TreeSolution solve_tree(const DecisionTree& tree, const UtilitySpec& u);

// Root value difference between a tree where information is observed before
// deciding and the same problem without it.
double value_of_information(const DecisionTree& with_information,
                            const DecisionTree& without_information, const UtilitySpec& u);

}  // namespace emuchain
