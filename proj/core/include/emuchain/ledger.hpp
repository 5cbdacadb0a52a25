#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace emuchain {

enum class SourceKind {
    parametric,
    condition,
    functional,
    stochastic,
    solution,
    structural,
    measurement,
    multi_model,
    decision,
};

inline constexpr std::array<SourceKind, 9> all_source_kinds{
    SourceKind::parametric, SourceKind::condition,   SourceKind::functional,
    SourceKind::stochastic, SourceKind::solution,    SourceKind::structural,
    SourceKind::measurement, SourceKind::multi_model, SourceKind::decision,
};

std::string_view to_string(SourceKind kind);
SourceKind source_kind_from_string(std::string_view name);

struct Quantified {
    std::string module;
};
struct OrderOfMagnitude {
    double value = 0.0;
    std::string rationale;
};
struct Ignored {
    std::string rationale;
};
using Treatment = std::variant<Quantified, OrderOfMagnitude, Ignored>;

struct UncertaintySource {
    SourceKind kind;
    Treatment treatment;
};

// Which pipeline modules an analysis used, plus explicit treatments for the
// sources those modules do not quantify.
struct AnalysisConfig {
    std::set<std::string> modules;
    std::map<SourceKind, Treatment> treatments;
};

class Manifest {
public:
    Manifest() = default;
    explicit Manifest(std::vector<UncertaintySource> sources);

    const std::vector<UncertaintySource>& sources() const noexcept { return sources_; }
    const UncertaintySource& source(SourceKind kind) const;
    std::size_t quantified_count() const;

    // All nine kinds exactly once; non-quantified entries carry a rationale.
    bool complete() const noexcept;
    void require_complete() const;

private:
    std::vector<UncertaintySource> sources_;
};

// Known module names: emulator, discrepancy, calibration, chain, decision.
// Sources quantified by a used module are filled in automatically; every
// other source needs a treatment with a non-empty rationale.
Manifest build_manifest(const AnalysisConfig& config);

struct AuditRecord {
    std::string timestamp;
    std::string operation;
    std::vector<std::string> input_hashes;
    std::optional<std::uint64_t> seed;
    std::string output_hash;
    std::string rationale;
    std::string previous_hash;
    std::string hash;
};

std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::string& path);

// Canonical byte string of a record's content fields and previous_hash; the
// record hash is sha256 of this.
std::string audit_payload(const AuditRecord& record);

// Hash-linked sequence of audit records.
class AuditChain {
public:
    AuditChain() = default;
    explicit AuditChain(std::vector<AuditRecord> records) : records_(std::move(records)) {}

    const std::vector<AuditRecord>& records() const noexcept { return records_; }
    std::size_t size() const noexcept { return records_.size(); }

    // Verifies the existing chain, then links and hashes the draft.
    const AuditRecord& append(AuditRecord draft);

    // Throws IntegrityError naming the first bad record.
    void verify() const;
    bool verifies() const noexcept;

private:
    std::vector<AuditRecord> records_;
};

std::string utc_timestamp();

}  // namespace emuchain
