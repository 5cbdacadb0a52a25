#pragma once

#include "emuchain/ledger.hpp"

#include <CLI11.hpp>

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace emuchain::cli {

// What a finished command reports back for its audit record.
struct RunRecord {
    std::vector<std::filesystem::path> inputs;
    std::optional<std::uint64_t> seed;
    std::filesystem::path output;  // empty when the result went to stdout
    std::string stdout_text;
    std::optional<Manifest> manifest;  // newly built manifest to pin in the lock
};

struct Context {
    std::filesystem::path lock;  // empty: next to the primary output
    std::string command_line;
};

using Action = std::function<RunRecord()>;

// Each registers one subcommand and returns the action to run if it is chosen.
void add_design(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_run(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_fit(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_validate(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_discrepancy(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_match(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_forecast(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_propagate(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_decide(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out, const Context& ctx);
void add_pareto(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out, const Context& ctx);
void add_tree(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out);
void add_audit(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out, const Context& ctx);
void add_report(CLI::App& app, std::vector<std::pair<CLI::App*, Action>>& out, const Context& ctx);

// Lock file used for a run that writes `output`.
std::filesystem::path lock_path(const Context& ctx, const std::filesystem::path& output);

}  // namespace emuchain::cli
