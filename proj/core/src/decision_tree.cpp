#include "emuchain/decision_tree.hpp"

#include "emuchain/error.hpp"

#include <cmath>
#include <functional>

namespace emuchain {

DecisionTree::DecisionTree(std::vector<TreeNode> nodes, std::size_t root) : nodes_(std::move(nodes)), root_(root) {
    const std::size_t n = nodes_.size();
    if (root_ >= n) throw InvalidArgument("tree root index out of range");
    std::vector<std::size_t> parents(n, 0);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& node = nodes_[i];
        for (std::size_t c : node.children) {
            if (c >= n) throw InvalidArgument("tree node " + std::to_string(i) + " has an out-of-range child");
            ++parents[c];
        }
        switch (node.kind) {
            case TreeNodeKind::leaf:
                if (!node.children.empty()) throw InvalidArgument("leaf " + std::to_string(i) + " has children");
                if (node.reward.empty()) throw InvalidArgument("leaf " + std::to_string(i) + " has no reward");
                for (double r : node.reward) {
                    if (!std::isfinite(r)) throw InvalidArgument("leaf " + std::to_string(i) + " has a non-finite reward");
                }
                break;
            case TreeNodeKind::decision:
                if (node.children.empty()) throw InvalidArgument("decision node " + std::to_string(i) + " has no options");
                if (!node.options.empty() && node.options.size() != node.children.size()) {
                    throw InvalidArgument("decision node " + std::to_string(i) + " option labels do not match children");
                }
                break;
            case TreeNodeKind::chance: {
                if (node.children.empty() || node.probabilities.size() != node.children.size()) {
                    throw InvalidArgument("chance node " + std::to_string(i) + " needs one probability per child");
                }
                double total = 0.0;
                for (double p : node.probabilities) {
                    if (!(p >= 0.0)) throw InvalidArgument("chance node " + std::to_string(i) + " has a negative probability");
                    total += p;
                }
                if (std::abs(total - 1.0) > 1e-12) {
                    throw InvalidArgument("chance node " + std::to_string(i) + " probabilities do not sum to 1");
                }
                break;
            }
        }
    }
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t expected = i == root_ ? 0 : 1;
        if (parents[i] != expected) throw InvalidArgument("tree node " + std::to_string(i) + " must have exactly one parent");
    }
    // One parent each plus full reachability from the root rules out cycles.
    std::vector<bool> seen(n, false);
    std::vector<std::size_t> stack{root_};
    std::size_t count = 0;
    while (!stack.empty()) {
        const std::size_t i = stack.back();
        stack.pop_back();
        if (seen[i]) throw InvalidArgument("tree contains a cycle");
        seen[i] = true;
        ++count;
        for (std::size_t c : nodes_[i].children) stack.push_back(c);
    }
    if (count != n) throw InvalidArgument("tree has nodes unreachable from the root");
}

std::vector<std::size_t> DecisionTree::decision_nodes() const {
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < nodes_.size(); ++i) {
        if (nodes_[i].kind == TreeNodeKind::decision) out.push_back(i);
    }
    return out;
}

TreeSolution solve_tree(const DecisionTree& tree, const UtilitySpec& u) {
    TreeSolution sol;
    sol.node_values.assign(tree.nodes().size(), 0.0);
    std::function<double(std::size_t)> solve = [&](std::size_t i) -> double {
        const auto& node = tree.node(i);
        double v = 0.0;
        switch (node.kind) {
            case TreeNodeKind::leaf:
                v = u(node.reward);
                break;
            case TreeNodeKind::chance:
                for (std::size_t k = 0; k < node.children.size(); ++k) v += node.probabilities[k] * solve(node.children[k]);
                break;
            case TreeNodeKind::decision: {
                std::size_t best = 0;
                for (std::size_t k = 0; k < node.children.size(); ++k) {
                    const double c = solve(node.children[k]);
                    if (k == 0 || c > v) {
                        v = c;
                        best = k;
                    }
                }
                sol.policy[i] = best;
                break;
            }
        }
        sol.node_values[i] = v;
        return v;
    };
    sol.value = solve(tree.root());
    return sol;
}

double value_of_information(const DecisionTree& with_information, const DecisionTree& without_information,
                            const UtilitySpec& u) {
    return solve_tree(with_information, u).value - solve_tree(without_information, u).value;
}

}  // namespace emuchain
