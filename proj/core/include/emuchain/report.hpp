#pragma once

#include "emuchain/decision.hpp"
#include "emuchain/io.hpp"
#include "emuchain/ledger.hpp"

#include <optional>
#include <string>
#include <vector>

namespace emuchain {

struct DecisionSection {
    std::vector<std::string> decision_names;
    StagedResult staged;
    double near_optimal_fraction = 0.05;
    std::vector<std::size_t> profiled;  // candidate index of each risk profile
    std::vector<RiskProfile> profiles;
};

struct ParetoSection {
    std::vector<std::string> decision_names;
    RowMatrix candidates;
    std::vector<std::string> attributes;
    std::vector<Orientation> orientation;
    ParetoResult result;
    double near_fraction = 0.05;
};

struct ReportContent {
    Manifest manifest;
    std::optional<std::uint64_t> seed;
    std::optional<DecisionSection> decisions;
    std::optional<ParetoSection> pareto;
    std::vector<std::string> notes;
};

// Refuses to render without a complete manifest. The output contains no
// timestamps or paths, so equal inputs give byte-identical documents.
Json render_report(const ReportContent& content);

// Plot-data CSVs: one row per (profiled decision, attribute) with the risk
// quantiles, and one row per evaluated Pareto candidate.
std::string quantile_fan_csv(const DecisionSection& section);
std::string pareto_scatter_csv(const ParetoSection& section);

}  // namespace emuchain
