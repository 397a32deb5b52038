#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"
#include "maskaudit/honest.hpp"
#include "maskaudit/toxicity.hpp"

namespace maskaudit {

struct Provenance {
  std::map<std::string, std::string> corpus_fingerprints;   // language -> hex64
  std::map<std::string, std::string> lexicon_fingerprints;  // language -> hex64
  std::map<std::string, std::string> config_snapshot;       // endpoints and paths, no secrets
};

struct AuditReport {
  std::string run_id;
  std::string created_at;
  std::vector<std::string> model_order;  // run-configuration order
  std::map<std::string, std::map<int, HonestScore>> honest;  // model -> k -> score
  std::map<std::string, CategoryGenderMatrix> matrices;
  std::map<std::string, GenderToxicitySummary> toxicity;
  Provenance provenance;
};

struct TableArtifact {
  std::string csv;
  std::string markdown;
};

// One row per model (configuration order), one column per k, scores to four
// decimals. The per-row maximum is flagged; ties break to the smallest k.
TableArtifact emit_honest_table(const AuditReport& report);

// Columns model,category,gender,percentage: 12 analysis categories x {F,M}
// plus one Avg row per gender and model, percentages to two decimals.
std::string emit_category_heatmap(const AuditReport& report);

// Columns F, M, Total per model, two decimals; Total = F + M per row.
TableArtifact emit_toxicity_table(const AuditReport& report);

nlohmann::json report_to_json(const AuditReport& report);
AuditReport report_from_json(const nlohmann::json& j);

void write_report_json(const std::filesystem::path& path, const AuditReport& report);
AuditReport load_report_json(const std::filesystem::path& path);

// FNV-1a fingerprint of the file bytes, for input provenance.
std::string fingerprint_file(const std::filesystem::path& path);

// Deterministic run identifier derived from the provenance block.
std::string derive_run_id(const Provenance& provenance);

}  // namespace maskaudit
