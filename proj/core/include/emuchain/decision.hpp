#pragma once

#include "emuchain/chain.hpp"
#include "emuchain/design.hpp"
#include "emuchain/emulator.hpp"
#include "emuchain/utility.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace emuchain {

// Anything that can simulate real-world outcomes y(x, d) for a decision.
class OutcomeSource {
public:
    virtual ~OutcomeSource() = default;
    virtual const std::vector<std::string>& attributes() const = 0;
    // n x attributes matrix of outcome draws; depends only on (decision, n, seed).
    virtual RowMatrix sample(std::span<const double> decision, std::size_t n,
                             std::uint64_t seed) const = 0;
};

// Outcomes from propagating a model graph. Decision vectors are ordered by
// `decision_names`.
class GraphOutcomeSource final : public OutcomeSource {
public:
    GraphOutcomeSource(ModelGraph graph, ExogenousSpec exogenous,
                       std::vector<std::string> decision_names, std::size_t threads = 1);

    const std::vector<std::string>& attributes() const override { return graph_.terminal(); }
    RowMatrix sample(std::span<const double> decision, std::size_t n,
                     std::uint64_t seed) const override;

    const ModelGraph& graph() const noexcept { return graph_; }

private:
    ModelGraph graph_;
    ExogenousSpec exogenous_;
    std::vector<std::string> decision_names_;
    std::size_t threads_;
};

using OutcomeSampler =
    std::function<RowMatrix(std::span<const double> decision, std::size_t n, std::uint64_t seed)>;

class FunctionOutcomeSource final : public OutcomeSource {
public:
    FunctionOutcomeSource(std::vector<std::string> attributes, OutcomeSampler sampler)
        : attributes_(std::move(attributes)), sampler_(std::move(sampler)) {}

    const std::vector<std::string>& attributes() const override { return attributes_; }
    RowMatrix sample(std::span<const double> decision, std::size_t n,
                     std::uint64_t seed) const override {
        return sampler_(decision, n, seed);
    }

private:
    std::vector<std::string> attributes_;
    OutcomeSampler sampler_;
};

struct Estimate {
    double mean = 0.0;
    double standard_error = 0.0;
};

// Maps utility attributes onto outcome columns by name. An unnamed single
// attribute binds to the only column.
std::vector<std::size_t> utility_columns(const UtilitySpec& u,
                                         const std::vector<std::string>& attributes);

// Monte Carlo estimate of E[U(y(x, d))] with its standard error.
Estimate expected_utility(const OutcomeSource& source, const UtilitySpec& u,
                          std::span<const double> decision, std::size_t n_samples,
                          std::uint64_t seed);

// Evaluator used by the staged searches; `index` is the candidate's row and
// keys its random substream.
using DecisionEvaluator = std::function<Estimate(std::span<const double> decision, std::size_t index)>;

DecisionEvaluator make_utility_evaluator(const OutcomeSource& source, const UtilitySpec& u,
                                         std::size_t n_samples, std::uint64_t seed);

// Per-attribute expected outcome (identity utility on one column).
DecisionEvaluator make_attribute_evaluator(const OutcomeSource& source, const std::string& attribute,
                                           std::size_t n_samples, std::uint64_t seed);

inline constexpr std::size_t active_status = 0;

// Candidate decisions with rejection bookkeeping. status[i] is 0 while
// active, otherwise the (1-based) stage that rejected it.
struct DecisionSet {
    InputSpace space;
    RowMatrix candidates;
    std::vector<std::size_t> status;

    DecisionSet() = default;
    DecisionSet(InputSpace space, RowMatrix candidates);

    std::size_t size() const noexcept { return static_cast<std::size_t>(candidates.rows()); }
    bool active(std::size_t i) const { return status.at(i) == active_status; }
    std::vector<std::size_t> active_indices() const;
    std::span<const double> decision(std::size_t i) const {
        return {candidates.data() + i * candidates.cols(), static_cast<std::size_t>(candidates.cols())};
    }
};

struct Bounds {
    double mean = 0.0;
    double lower = 0.0;
    double upper = 0.0;
};

struct StagedOptions {
    double k_bound = 3.0;
    std::size_t stages = 4;
    std::size_t budget = 12;  // new evaluations per stage
    FitOptions fit{};
    double near_optimal_fraction = 0.05;
};

struct StageSummary {
    std::size_t stage = 0;
    std::size_t evaluated = 0;
    std::size_t rejected = 0;
    std::size_t active = 0;
    double max_lower = 0.0;
};

struct StagedResult {
    DecisionSet set;
    std::vector<std::optional<Estimate>> evaluations;
    std::vector<Bounds> bounds;  // from the final stage, active candidates only meaningful
    std::vector<StageSummary> stages;
    std::size_t best = 0;      // active candidate with the largest emulated mean
    double best_value = 0.0;
    // Active candidates whose mean is within near_optimal_fraction of the
    // emulated utility range below best_value.
    std::vector<std::size_t> near_optimal;
};

// Emulator-bound staged rejection: each stage evaluates up to `budget` new
// active candidates (farthest-point order), fits a utility emulator to all
// evaluations so far, and rejects any candidate whose upper bound is below
// the largest lower bound. Bounds are mean +- k * sqrt(emulator var + se^2).
StagedResult staged_rejection(DecisionSet candidates, const DecisionEvaluator& evaluator,
                              const StagedOptions& options = {});

enum class Orientation { maximize, minimize };

// a dominates b when a >= b in every coordinate and a > b in at least one
// (both already oriented so larger is better).
bool dominates(std::span<const double> a, std::span<const double> b);

// Indices of rows not dominated by any other row; rows oriented to maximize.
std::vector<std::size_t> non_dominated(const RowMatrix& values);

struct ParetoOptions {
    double k_bound = 3.0;
    std::size_t stages = 3;
    std::size_t budget = 0;  // 0 picks ceil(n / stages)
    FitOptions fit{};
    double near_fraction = 0.05;
};

struct ParetoResult {
    std::vector<std::size_t> boundary;
    RowMatrix coordinates;  // boundary rows x attributes, original orientation
    std::size_t dominated_count = 0;
    std::vector<std::size_t> eliminated;  // removed by bound dominance before evaluation
    std::vector<std::optional<std::vector<Estimate>>> evaluations;
    // Evaluated candidates within near_fraction of each attribute's range of
    // the boundary (epsilon-nondominated), boundary included.
    std::vector<std::size_t> near_boundary;
};

ParetoResult pareto_front(const DecisionSet& candidates,
                          const std::vector<DecisionEvaluator>& evaluators,
                          const std::vector<Orientation>& orientation,
                          const ParetoOptions& options = {});

inline constexpr std::array<double, 5> risk_quantile_levels{0.05, 0.25, 0.50, 0.75, 0.95};

struct AttributeSummary {
    double mean = 0.0;
    double variance = 0.0;
    std::array<double, 5> quantiles{};
    std::optional<double> threshold;
    double probability_below = 0.0;  // P(outcome < threshold) when a threshold is set
};

struct RiskProfile {
    std::vector<double> decision;
    std::vector<std::string> attributes;
    RowMatrix samples;
    std::vector<AttributeSummary> summary;
};

RiskProfile risk_profile(const OutcomeSource& source, std::span<const double> decision,
                         std::size_t n_samples, std::uint64_t seed,
                         const std::map<std::string, double>& thresholds = {});

struct StakeholderComparison {
    std::vector<std::string> stakeholders;
    std::vector<std::vector<std::size_t>> survivors;
    std::vector<std::size_t> common;  // survive under every stakeholder's utility
};

StakeholderComparison compare_stakeholders(
    const DecisionSet& candidates,
    const std::vector<std::pair<std::string, DecisionEvaluator>>& stakeholders,
    const StagedOptions& options = {});

}  // namespace emuchain
