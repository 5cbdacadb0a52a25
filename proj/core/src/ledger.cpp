#include "emuchain/ledger.hpp"

#include "emuchain/error.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <iterator>
#include <map>
#include <memory>

namespace emuchain {

namespace {

constexpr std::array<std::string_view, 9> kind_names{
    "parametric", "condition", "functional", "stochastic", "solution",
    "structural", "measurement", "multi-model", "decision",
};

bool has_rationale(const Treatment& t) {
    if (const auto* o = std::get_if<OrderOfMagnitude>(&t)) return !o->rationale.empty();
    if (const auto* i = std::get_if<Ignored>(&t)) return !i->rationale.empty();
    return !std::get<Quantified>(t).module.empty();
}

}  // namespace

std::string_view to_string(SourceKind kind) { return kind_names[static_cast<std::size_t>(kind)]; }

SourceKind source_kind_from_string(std::string_view name) {
    for (std::size_t i = 0; i < kind_names.size(); ++i) {
        if (kind_names[i] == name) return all_source_kinds[i];
    }
    throw FormatError("unknown uncertainty source '" + std::string(name) + "'");
}

Manifest::Manifest(std::vector<UncertaintySource> sources) : sources_(std::move(sources)) {}

const UncertaintySource& Manifest::source(SourceKind kind) const {
    for (const auto& s : sources_) {
        if (s.kind == kind) return s;
    }
    throw InvalidArgument("manifest has no entry for '" + std::string(to_string(kind)) + "'");
}

std::size_t Manifest::quantified_count() const {
    std::size_t n = 0;
    for (const auto& s : sources_) n += std::holds_alternative<Quantified>(s.treatment) ? 1 : 0;
    return n;
}

bool Manifest::complete() const noexcept {
    if (sources_.size() != all_source_kinds.size()) return false;
    std::array<int, 9> seen{};
    for (const auto& s : sources_) {
        if (++seen[static_cast<std::size_t>(s.kind)] > 1 || !has_rationale(s.treatment)) return false;
    }
    return true;
}

void Manifest::require_complete() const {
    std::array<int, 9> seen{};
    for (const auto& s : sources_) {
        const std::string name(to_string(s.kind));
        if (++seen[static_cast<std::size_t>(s.kind)] > 1) throw InvalidArgument("manifest lists '" + name + "' twice");
        if (!has_rationale(s.treatment)) throw InvalidArgument("manifest entry '" + name + "' has no rationale");
    }
    for (SourceKind k : all_source_kinds) {
        if (seen[static_cast<std::size_t>(k)] == 0) {
            throw InvalidArgument("manifest is missing uncertainty source '" + std::string(to_string(k)) + "'");
        }
    }
}

Manifest build_manifest(const AnalysisConfig& config) {
    static const std::map<std::string, std::vector<SourceKind>> quantifies{
        {"emulator", {SourceKind::functional}},
        {"discrepancy", {SourceKind::structural}},
        {"calibration", {SourceKind::parametric, SourceKind::measurement}},
        {"chain", {SourceKind::multi_model}},
        {"decision", {SourceKind::decision}},
    };
    std::map<SourceKind, Treatment> auto_filled;
    for (const auto& m : config.modules) {
        const auto it = quantifies.find(m);
        if (it == quantifies.end()) throw InvalidArgument("unknown analysis module '" + m + "'");
        for (SourceKind k : it->second) {
            auto_filled[k] = Quantified{k == SourceKind::measurement ? "calibration.observations" : m};
        }
    }
    std::vector<UncertaintySource> sources;
    for (SourceKind k : all_source_kinds) {
        if (const auto it = config.treatments.find(k); it != config.treatments.end()) {
            if (!has_rationale(it->second)) {
                throw InvalidArgument("treatment of '" + std::string(to_string(k)) + "' needs a rationale");
            }
            sources.push_back({k, it->second});
        } else if (const auto a = auto_filled.find(k); a != auto_filled.end()) {
            sources.push_back({k, a->second});
        } else {
            throw InvalidArgument("uncertainty source '" + std::string(to_string(k)) +
                                  "' is not quantified by any module and has no rationale");
        }
    }
    return Manifest(std::move(sources));
}

std::string sha256_hex(std::string_view bytes) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
        throw Error("sha256 computation failed");
    }
    static constexpr char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out.push_back(hex[digest[i] >> 4]);
        out.push_back(hex[digest[i] & 0xF]);
    }
    return out;
}

std::string sha256_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidArgument("cannot read '" + path + "'");
    const std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return sha256_hex(bytes);
}

std::string audit_payload(const AuditRecord& r) {
    nlohmann::json j;
    j["format_version"] = 1;
    j["timestamp"] = r.timestamp;
    j["operation"] = r.operation;
    j["input_hashes"] = r.input_hashes;
    j["seed"] = r.seed ? nlohmann::json(*r.seed) : nlohmann::json(nullptr);
    j["output_hash"] = r.output_hash;
    j["rationale"] = r.rationale;
    j["previous_hash"] = r.previous_hash;
    return j.dump();
}

const AuditRecord& AuditChain::append(AuditRecord draft) {
    verify();
    if (draft.operation.empty()) throw InvalidArgument("audit record needs an operation name");
    draft.previous_hash = records_.empty() ? std::string() : records_.back().hash;
    draft.hash = sha256_hex(audit_payload(draft));
    records_.push_back(std::move(draft));
    return records_.back();
}

void AuditChain::verify() const {
    std::string previous;
    for (std::size_t i = 0; i < records_.size(); ++i) {
        const auto& r = records_[i];
        if (r.previous_hash != previous) {
            throw IntegrityError("audit record " + std::to_string(i) + " does not link to its predecessor");
        }
        if (r.hash != sha256_hex(audit_payload(r))) {
            throw IntegrityError("audit record " + std::to_string(i) + " hash mismatch");
        }
        previous = r.hash;
    }
}

bool AuditChain::verifies() const noexcept {
    try {
        verify();
        return true;
    } catch (...) {
        return false;
    }
}

std::string utc_timestamp() {
    std::time_t now = std::time(nullptr);
    if (const char* epoch = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        const long long v = std::strtoll(epoch, &end, 10);
        if (end != epoch && *end == '\0') now = static_cast<std::time_t>(v);
    }
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

}  // namespace emuchain
