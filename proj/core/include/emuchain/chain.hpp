#pragma once

#include "emuchain/design.hpp"
#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <variant>
#include <vector>

namespace emuchain {

// Where one emulator input of a node gets its value from.
struct UpstreamRef {
    std::string node;
    std::string output;
};
struct ExogenousRef {
    std::string name;
};
struct DecisionRef {
    std::string name;
};
struct ConstantValue {
    double value = 0.0;
};
using BindingSource = std::variant<UpstreamRef, ExogenousRef, DecisionRef, ConstantValue>;

struct Binding {
    std::string input;  // emulator input dimension name
    BindingSource source;
};

// A sub-model: one emulator per output over a common input space, plus the
// structural discrepancy of its outputs.
struct ModelNode {
    std::string name;
    std::vector<std::shared_ptr<const Emulator>> emulators;
    DiscrepancySpec discrepancy;
    std::vector<Binding> bindings;

    std::vector<std::string> output_names() const;
    const InputSpace& input_space() const;
};

// Acyclic graph of model nodes; edges are implied by upstream bindings.
class ModelGraph {
public:
    ModelGraph() = default;
    // Validates bindings and computes the topological order. `terminal` lists
    // "node.output" columns; empty means every output of every sink node.
    explicit ModelGraph(std::vector<ModelNode> nodes, std::vector<std::string> terminal = {});

    const std::vector<ModelNode>& nodes() const noexcept { return nodes_; }
    const ModelNode& node(const std::string& name) const;
    const std::vector<std::size_t>& order() const noexcept { return order_; }
    const std::vector<std::string>& terminal() const noexcept { return terminal_; }

    std::vector<std::string> exogenous_names() const;
    std::vector<std::string> decision_names() const;

    // Copy with one node's discrepancy replaced.
    ModelGraph with_discrepancy(const std::string& node, DiscrepancySpec disc) const;

private:
    std::vector<ModelNode> nodes_;
    std::vector<std::size_t> order_;
    std::vector<std::string> terminal_;
};

struct FixedValue {
    double value = 0.0;
};
struct UniformDistribution {
    double lower = 0.0;
    double upper = 1.0;
};
struct NormalDistribution {
    double mean = 0.0;
    double sd = 1.0;
};
using ExogenousDistribution = std::variant<FixedValue, UniformDistribution, NormalDistribution>;

// Joint empirical sample over several named inputs; one row is used per
// propagated sample, either drawn at random or taken in order (cycling).
struct EmpiricalTable {
    std::vector<std::string> columns;
    RowMatrix rows;
    bool sequential = false;
};

struct ExogenousSpec {
    std::map<std::string, ExogenousDistribution> inputs;
    std::vector<EmpiricalTable> tables;

    bool provides(const std::string& name) const;
};

using DecisionValues = std::map<std::string, double>;

struct NodeTrace {
    RowMatrix model;        // emulator draws, samples x outputs
    RowMatrix discrepancy;  // discrepancy draws, samples x outputs
};

struct PropagationResult {
    std::vector<std::string> columns;
    RowMatrix samples;  // n_samples x terminal outputs
    std::uint64_t seed = 0;
    std::map<std::string, NodeTrace> trace;  // filled when requested
};

struct PropagateOptions {
    std::size_t threads = 1;
    bool keep_trace = false;
};

// Monte Carlo through the graph: per sample, resolve inputs in topological
// order, draw each emulator, add an independent discrepancy draw, feed the
// sum downstream. Sample i uses substreams keyed by (seed, i) only.
PropagationResult propagate(const ModelGraph& graph, const ExogenousSpec& exogenous,
                            const DecisionValues& decisions, std::size_t n_samples,
                            std::uint64_t seed, const PropagateOptions& options = {});

struct CombinedEmulators {
    Emulator mean;
    Emulator log_variance;
};

// Emulates the whole graph as one stochastic model over the decision grid by
// fitting the per-decision sample mean and log sample variance of one
// terminal column.
CombinedEmulators emulate_combined(const ModelGraph& graph, const ExogenousSpec& exogenous,
                                   const DesignSet& decision_grid, std::size_t n_inner,
                                   std::uint64_t seed, const std::string& terminal_column = {},
                                   const FitOptions& fit_options = {});

inline constexpr const char* independence_caveat =
    "Structural discrepancy is treated as independent across models; dependent "
    "discrepancies between sub-models are not represented.";

}  // namespace emuchain
