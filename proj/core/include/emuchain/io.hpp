#pragma once

#include "emuchain/calibration.hpp"
#include "emuchain/chain.hpp"
#include "emuchain/decision_tree.hpp"
#include "emuchain/design.hpp"
#include "emuchain/discrepancy.hpp"
#include "emuchain/emulator.hpp"
#include "emuchain/ledger.hpp"
#include "emuchain/utility.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace emuchain {

using Json = nlohmann::json;

inline constexpr int format_version = 1;

// Raised when an input file does not exist or cannot be opened. Kept outside
// the Error hierarchy: the CLI treats it as a usage problem.
class FileNotFound : public std::runtime_error {
public:
    explicit FileNotFound(const std::filesystem::path& path)
        : std::runtime_error("cannot open file: " + path.string()), path_(path) {}
    const std::filesystem::path& path() const noexcept { return path_; }

private:
    std::filesystem::path path_;
};

std::string read_text(const std::filesystem::path& path);
// Writes through a temporary file in the same directory and renames it.
void write_text_atomic(const std::filesystem::path& path, std::string_view text);

// Two-space indented dump with a trailing newline; the byte form of every
// JSON artifact.
std::string dump_json(const Json& j);
Json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const Json& j);

// Doubles that may be infinite are stored as numbers when finite and as the
// strings "inf" / "-inf" / "nan" otherwise.
Json number_json(double v);
double number_from_json(const Json& j);

Json json_of(const InputSpace& space);
InputSpace space_from_json(const Json& j);

Json json_of(const RowMatrix& m);
RowMatrix matrix_from_json(const Json& j);

// CSV with "#key=value" comment lines ahead of the header row. Designs carry
// #space (JSON) and #outputs so they round-trip exactly.
std::string design_csv(const DesignSet& design);
DesignSet design_from_csv(std::string_view text, const InputSpace* fallback_space = nullptr);
DesignSet read_design_csv(const std::filesystem::path& path, const InputSpace* fallback_space = nullptr);

std::string matrix_csv(const std::vector<std::string>& columns, const RowMatrix& m);
struct CsvTable {
    std::vector<std::string> columns;
    RowMatrix values;
};
CsvTable table_from_csv(std::string_view text);
CsvTable read_table_csv(const std::filesystem::path& path);

ResidualProcessSpec residual_from_json(const Json& j);
Json json_of(const ResidualProcessSpec& r);

Json json_of(const Emulator& em);
Emulator emulator_from_json(const Json& j);

Json json_of(const DiscrepancySpec& d);
DiscrepancySpec discrepancy_from_json(const Json& j);

PerturbationPlan plan_from_json(const Json& j);

std::vector<Observation> observations_from_json(const Json& j);

// A retained space stored with the emulators and discrepancy that produced
// it, so forecasting needs only this one document.
struct RetainedDocument {
    RetainedSpace retained;
    EmulatorSet emulators;
    DiscrepancySpec discrepancy;
};
Json json_of(const RetainedDocument& doc);
RetainedDocument retained_from_json(const Json& j);

Json json_of(const UtilitySpec& u);
UtilitySpec utility_from_json(const Json& j);

Json json_of(const DecisionTree& t);
DecisionTree tree_from_json(const Json& j);

// File references inside exogenous and graph documents resolve against `base`.
ExogenousSpec exogenous_from_json(const Json& j, const std::filesystem::path& base);
DecisionValues decisions_from_json(const Json& j);
ModelGraph graph_from_json(const Json& j, const std::filesystem::path& base);
ModelGraph read_graph(const std::filesystem::path& path);

AnalysisConfig analysis_config_from_json(const Json& j);
Json json_of(const Manifest& m);
Manifest manifest_from_json(const Json& j);

Json json_of(const AuditRecord& r);
AuditRecord audit_record_from_json(const Json& j);

// analysis.lock.json: latest manifest plus the audit chain. Reading checks
// the file is in canonical byte form, the chain verifies, and the manifest
// matches the hash recorded when it was last written.
struct LockFile {
    std::optional<Manifest> manifest;
    AuditChain audit;
};
Json json_of(const LockFile& lock);
LockFile lock_from_json(const Json& j);
LockFile read_lock(const std::filesystem::path& path);
// Replaces the manifest and appends the audit record that pins its hash.
void record_manifest(LockFile& lock, const Manifest& manifest);
void write_lock(const std::filesystem::path& path, const LockFile& lock);

}  // namespace emuchain
