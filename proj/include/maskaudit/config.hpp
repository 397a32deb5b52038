#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "maskaudit/corpus.hpp"
#include "maskaudit/errors.hpp"
#include "maskaudit/probe.hpp"
#include "maskaudit/toxicity.hpp"

namespace maskaudit {

// Parsed run configuration. The config file is a `key = value` text format;
// `#` starts a comment, lists are comma-separated, models are declared as
// `model.<id>.<field>` and keep their file order. API keys never appear here;
// they come from TOXICITY_API_KEY / TRANSLATE_API_KEY / INFERENCE_API_KEY.
struct RunConfig {
  std::vector<std::string> languages;
  std::vector<ModelSpec> models;  // configuration order
  std::map<std::string, std::filesystem::path> corpus_paths;   // language -> path
  std::map<std::string, std::filesystem::path> lexicon_paths;  // language -> path
  std::optional<HurtlexLevel> lexicon_level;  // nullopt = keep both levels
  std::set<int> k_values{1, 5, 10, 20};
  ToxicityConfig toxicity;
  int toxicity_k = 1;  // completion depth fed to the toxicity pipeline
  std::string toxicity_endpoint;
  std::string translate_endpoint;
  std::set<std::string> toxicity_direct_languages{"en", "sv"};
  double toxicity_rate_limit_per_sec = 1.0;
  std::optional<std::filesystem::path> toxicity_record_fixture;
  std::optional<std::filesystem::path> translate_record_fixture;
  std::filesystem::path store_path;
  std::filesystem::path out_dir;
  int parallelism = 4;
  bool offline = false;

  std::map<std::string, std::string> raw;  // snapshot for provenance
};

RunConfig load_run_config(const std::filesystem::path& path);
RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::string_view origin);

// Fail-fast checks: every model language has corpus and lexicon paths, files
// exist, k values positive, store path usable. Throws ConfigError.
void validate_config(const RunConfig& config);

// Offline runs must not name any http(s) endpoint for the given components.
void enforce_offline(const RunConfig& config, bool check_models, bool check_toxicity);

}  // namespace maskaudit
