#include "maskaudit/commands.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <unordered_map>

#include "maskaudit/honest.hpp"
#include "maskaudit/util/csv.hpp"
#include "maskaudit/util/text.hpp"
#include "maskaudit/util/time.hpp"

namespace maskaudit {

namespace {

std::string env_or_empty(const char* name) {
  const char* v = std::getenv(name);
  return v == nullptr ? std::string() : std::string(v);
}

std::vector<ModelSpec> select_models(const RunConfig& config,
                                     const std::vector<std::string>& filter) {
  if (filter.empty()) return config.models;
  std::vector<ModelSpec> selected;
  for (const std::string& id : filter) {
    auto it = std::find_if(config.models.begin(), config.models.end(),
                           [&](const ModelSpec& m) { return m.model_id == id; });
    if (it == config.models.end()) {
      throw ConfigError("--model '" + id + "' is not in the configuration");
    }
    selected.push_back(*it);
  }
  return selected;
}

std::unordered_map<std::string, std::vector<Template>> load_corpora(
    const RunConfig& config, const std::vector<ModelSpec>& models, std::ostream& log) {
  std::unordered_map<std::string, std::vector<Template>> corpora;
  for (const ModelSpec& model : models) {
    if (corpora.count(model.language) > 0) continue;
    const auto& path = config.corpus_paths.at(model.language);
    corpora[model.language] = load_templates(path, model.language);
    log << "[corpus] language=" << model.language << " templates="
        << corpora[model.language].size() << "\n";
  }
  return corpora;
}

std::unordered_map<std::string, Lexicon> load_lexicons(const RunConfig& config,
                                                       const std::vector<ModelSpec>& models,
                                                       std::ostream& log) {
  std::unordered_map<std::string, Lexicon> lexicons;
  for (const ModelSpec& model : models) {
    if (lexicons.count(model.language) > 0) continue;
    const auto& path = config.lexicon_paths.at(model.language);
    LexiconLoadStats stats;
    lexicons[model.language] =
        load_lexicon(path, config.lexicon_level, model.language, &stats);
    log << "[lexicon] language=" << model.language << " entries=" << stats.entries_kept
        << "\n";
    if (stats.empty) {
      log << "[lexicon] warning: lexicon for '" << model.language
          << "' is empty after filtering; scores will be zero\n";
    }
  }
  return lexicons;
}

Provenance build_provenance(const RunConfig& config, const std::vector<ModelSpec>& models) {
  Provenance prov;
  prov.config_snapshot = config.raw;
  for (const ModelSpec& model : models) {
    if (prov.corpus_fingerprints.count(model.language) == 0) {
      prov.corpus_fingerprints[model.language] =
          fingerprint_file(config.corpus_paths.at(model.language));
    }
    if (prov.lexicon_fingerprints.count(model.language) == 0) {
      prov.lexicon_fingerprints[model.language] =
          fingerprint_file(config.lexicon_paths.at(model.language));
    }
  }
  return prov;
}

std::string run_timestamp(const RunConfig& config) {
  return config.offline ? util::deterministic_timestamp() : util::wall_timestamp();
}

// Start from the existing report when it belongs to the same run, so that
// filtered or staged commands accumulate into one report.
AuditReport open_or_create_report(const RunConfig& config, const Provenance& prov,
                                  std::ostream& log) {
  AuditReport report;
  report.run_id = derive_run_id(prov);
  report.created_at = run_timestamp(config);
  report.model_order.clear();
  for (const ModelSpec& m : config.models) report.model_order.push_back(m.model_id);
  report.provenance = prov;

  auto path = config.out_dir / "report.json";
  if (std::filesystem::exists(path)) {
    try {
      AuditReport existing = load_report_json(path);
      if (existing.run_id == report.run_id) {
        existing.created_at = report.created_at;
        existing.model_order = report.model_order;
        existing.provenance = prov;
        return existing;
      }
      log << "[report] existing report belongs to another run; starting fresh\n";
    } catch (const ReportError& e) {
      log << "[report] ignoring unreadable existing report: " << e.what() << "\n";
    }
  }
  return report;
}

void write_text(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ReportError(ReportErrorCode::IoError, "cannot write " + path.string());
  }
  out << content;
}

std::unique_ptr<ToxicityClient> make_toxicity_client(const RunConfig& config) {
  const std::string& ep = config.toxicity_endpoint;
  if (ep.empty()) {
    throw ConfigError("toxicity.endpoint not configured");
  }
  std::set<std::string> langs = config.toxicity_direct_languages;
  langs.insert("en");  // the bridge target is always scoreable
  if (ep.rfind("replay:", 0) == 0) {
    return std::make_unique<ReplayToxicityClient>(ep.substr(7), langs);
  }
  HttpClientOptions options;
  options.api_key = env_or_empty("TOXICITY_API_KEY");
  options.rate_limit_per_sec = config.toxicity_rate_limit_per_sec;
  return std::make_unique<HttpToxicityClient>(ep, langs, options);
}

std::unique_ptr<TranslationClient> make_translation_client(const RunConfig& config) {
  const std::string& ep = config.translate_endpoint;
  if (ep.empty()) {
    throw ConfigError("translate.endpoint not configured");
  }
  if (ep.rfind("replay:", 0) == 0) {
    return std::make_unique<ReplayTranslationClient>(ep.substr(7));
  }
  HttpClientOptions options;
  options.api_key = env_or_empty("TRANSLATE_API_KEY");
  return std::make_unique<HttpTranslationClient>(ep, options);
}

}  // namespace

int cmd_probe(const RunConfig& config, const std::vector<std::string>& model_filter,
              std::ostream& log) {
  validate_config(config);
  enforce_offline(config, /*check_models=*/true, /*check_toxicity=*/false);
  std::vector<ModelSpec> models = select_models(config, model_filter);
  auto corpora = load_corpora(config, models, log);

  StoreLock lock(config.store_path);
  CompletionStore store = CompletionStore::open(config.store_path);

  HttpBackendOptions http_options;
  http_options.bearer_token = env_or_empty("INFERENCE_API_KEY");

  std::size_t total_failed = 0;
  std::size_t wholly_failed = 0;
  for (const ModelSpec& model : models) {
    const std::vector<Template>& templates = corpora.at(model.language);
    try {
      auto backend = make_backend(model, http_options);
      CampaignSummary summary = run_probe_campaign(*backend, model, templates,
                                                   config.k_values, store,
                                                   config.parallelism);
      log << "[probe] model=" << model.model_id << " fetched=" << summary.fetched
          << " cached=" << summary.cached << " failed=" << summary.failed << "\n";
      for (const auto& [id, reason] : summary.failures) {
        log << "[probe]   failed template " << id << ": " << reason << "\n";
      }
      total_failed += summary.failed;
    } catch (const ProbeError& e) {
      log << "[probe] model=" << model.model_id << " campaign failed: " << e.what()
          << "\n";
      ++wholly_failed;
    }
  }
  return (total_failed > 0 || wholly_failed > 0) ? 1 : 0;
}

int cmd_score(const RunConfig& config, const std::vector<std::string>& model_filter,
              std::ostream& log) {
  validate_config(config);
  std::vector<ModelSpec> models = select_models(config, model_filter);
  auto corpora = load_corpora(config, models, log);
  auto lexicons = load_lexicons(config, models, log);
  CompletionStore store = CompletionStore::open(config.store_path, /*read_only=*/true);

  const int max_k = *config.k_values.rbegin();

  // Fail before scoring anything if any (model, template) pair lacks depth.
  std::vector<std::string> missing;
  for (const ModelSpec& model : models) {
    for (const Template& tmpl : corpora.at(model.language)) {
      if (!store.lookup(model.model_id, tmpl.template_id, max_k)) {
        missing.push_back(model.model_id + "/" + tmpl.template_id);
      }
    }
  }
  if (!missing.empty()) {
    log << "[score] insufficient depth (need k=" << max_k << ") for " << missing.size()
        << " pairs:\n";
    std::size_t shown = std::min<std::size_t>(missing.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) log << "[score]   " << missing[i] << "\n";
    if (shown < missing.size()) {
      log << "[score]   ... and " << missing.size() - shown << " more\n";
    }
    return 1;
  }

  Provenance prov = build_provenance(config, models);
  AuditReport report = open_or_create_report(config, prov, log);

  for (const ModelSpec& model : models) {
    const std::vector<Template>& templates = corpora.at(model.language);
    const Lexicon& lexicon = lexicons.at(model.language);
    std::vector<CompletionSet> sets;
    sets.reserve(templates.size());
    for (const Template& tmpl : templates) {
      sets.push_back(*store.lookup(model.model_id, tmpl.template_id, max_k));
    }
    std::map<int, HonestScore> per_k;
    for (int k : config.k_values) {
      per_k[k] = honest_score(sets, lexicon, k);
    }
    report.honest[model.model_id] = std::move(per_k);
    report.matrices[model.model_id] =
        category_gender_matrix(sets, templates, lexicon, max_k);
    log << "[score] model=" << model.model_id
        << " honest@" << max_k << "="
        << util::fixed(report.honest[model.model_id][max_k].score, 4) << "\n";
  }

  std::filesystem::create_directories(config.out_dir);
  TableArtifact honest_table = emit_honest_table(report);
  write_text(config.out_dir / "honest.csv", honest_table.csv);
  write_text(config.out_dir / "honest.md", honest_table.markdown);
  write_text(config.out_dir / "heatmap.csv", emit_category_heatmap(report));
  write_report_json(config.out_dir / "report.json", report);
  log << "[score] wrote honest.csv honest.md heatmap.csv report.json to "
      << config.out_dir.string() << "\n";
  return 0;
}

int cmd_score_toxicity(const RunConfig& config,
                       const std::vector<std::string>& model_filter, std::ostream& log) {
  validate_config(config);
  enforce_offline(config, /*check_models=*/false, /*check_toxicity=*/true);
  std::vector<ModelSpec> models = select_models(config, model_filter);
  auto corpora = load_corpora(config, models, log);
  CompletionStore store = CompletionStore::open(config.store_path, /*read_only=*/true);

  std::unique_ptr<ToxicityClient> scorer = make_toxicity_client(config);
  std::unique_ptr<RecordingToxicityClient> recording_scorer;
  ToxicityClient* scorer_ptr = scorer.get();
  if (config.toxicity_record_fixture) {
    recording_scorer = std::make_unique<RecordingToxicityClient>(
        *scorer, *config.toxicity_record_fixture);
    scorer_ptr = recording_scorer.get();
  }

  std::unique_ptr<TranslationClient> translator;
  std::unique_ptr<RecordingTranslationClient> recording_translator;
  TranslationClient* translator_ptr = nullptr;
  if (config.toxicity.bridge_mode == BridgeMode::TranslateThenScore) {
    translator = make_translation_client(config);
    translator_ptr = translator.get();
    if (config.translate_record_fixture) {
      recording_translator = std::make_unique<RecordingTranslationClient>(
          *translator, *config.translate_record_fixture);
      translator_ptr = recording_translator.get();
    }
  }

  Provenance prov = build_provenance(config, models);
  AuditReport report = open_or_create_report(config, prov, log);

  std::size_t total_failures = 0;
  for (const ModelSpec& model : models) {
    const std::vector<Template>& templates = corpora.at(model.language);
    ToxicityRunResult result =
        score_model_toxicity(model, templates, store, config.toxicity_k, translator_ptr,
                             *scorer_ptr, config.toxicity);
    GenderToxicitySummary summary = gender_toxicity_summary(result.records, templates);
    summary.skipped = result.skipped;
    report.toxicity[model.model_id] = summary;
    log << "[toxicity] model=" << model.model_id << " records=" << summary.record_count
        << " toxic_f=" << summary.toxic_f << " toxic_m=" << summary.toxic_m
        << " skipped=" << summary.skipped << " failures=" << result.failures.size()
        << "\n";
    for (const auto& [id, reason] : result.failures) {
      log << "[toxicity]   failed " << id << ": " << reason << "\n";
    }
    total_failures += result.failures.size();
  }

  std::filesystem::create_directories(config.out_dir);
  TableArtifact table = emit_toxicity_table(report);
  write_text(config.out_dir / "toxicity.csv", table.csv);
  write_text(config.out_dir / "toxicity.md", table.markdown);
  write_report_json(config.out_dir / "report.json", report);
  log << "[toxicity] wrote toxicity.csv toxicity.md report.json to "
      << config.out_dir.string() << "\n";
  return total_failures > 0 ? 1 : 0;
}

int cmd_validate_translation(const RunConfig& config, const std::string& language,
                             const std::vector<std::string>& model_filter,
                             std::ostream& log) {
  validate_config(config);
  enforce_offline(config, /*check_models=*/false, /*check_toxicity=*/true);
  if (language.empty()) {
    throw ConfigError("validate-translation requires --language");
  }

  std::vector<ModelSpec> models;
  for (const ModelSpec& model : select_models(config, model_filter)) {
    if (model.language == language) models.push_back(model);
  }
  if (models.empty()) {
    throw ConfigError("no configured model has language '" + language + "'");
  }
  auto corpora = load_corpora(config, models, log);
  CompletionStore store = CompletionStore::open(config.store_path, /*read_only=*/true);

  std::unique_ptr<ToxicityClient> scorer = make_toxicity_client(config);
  std::unique_ptr<TranslationClient> translator = make_translation_client(config);

  std::filesystem::create_directories(config.out_dir);
  for (const ModelSpec& model : models) {
    AgreementReport agreement =
        validate_translation(model, corpora.at(model.language), store, config.toxicity_k,
                             *translator, *scorer, language, config.toxicity);
    nlohmann::json j;
    j["model_id"] = model.model_id;
    j["language"] = language;
    j["total"] = agreement.total;
    j["agree"] = agreement.agree;
    j["agreement_rate"] = agreement.agreement_rate;
    j["disagreements"] = nlohmann::json::array();
    std::string csv = util::csv_row({"sentence", "source_flag", "bridged_flag"});
    for (const auto& d : agreement.disagreements) {
      j["disagreements"].push_back({{"sentence", d.sentence},
                                    {"source_flag", d.source_flag},
                                    {"bridged_flag", d.bridged_flag}});
      csv += util::csv_row({d.sentence, d.source_flag ? "true" : "false",
                            d.bridged_flag ? "true" : "false"});
    }
    write_text(config.out_dir / ("agreement_" + model.model_id + ".json"),
               j.dump(2) + "\n");
    write_text(config.out_dir / ("disagreements_" + model.model_id + ".csv"), csv);
    log << "[validate] model=" << model.model_id << " total=" << agreement.total
        << " agree=" << agreement.agree << " rate="
        << util::fixed(agreement.agreement_rate, 4) << " disagreements="
        << agreement.disagreements.size() << "\n";
  }
  return 0;
}

int cmd_report(const RunConfig& config, std::ostream& log) {
  validate_config(config);
  AuditReport report = load_report_json(config.out_dir / "report.json");
  std::filesystem::create_directories(config.out_dir);
  if (!report.honest.empty()) {
    TableArtifact honest_table = emit_honest_table(report);
    write_text(config.out_dir / "honest.csv", honest_table.csv);
    write_text(config.out_dir / "honest.md", honest_table.markdown);
  }
  if (!report.matrices.empty()) {
    write_text(config.out_dir / "heatmap.csv", emit_category_heatmap(report));
  }
  if (!report.toxicity.empty()) {
    TableArtifact table = emit_toxicity_table(report);
    write_text(config.out_dir / "toxicity.csv", table.csv);
    write_text(config.out_dir / "toxicity.md", table.markdown);
  }
  log << "[report] re-rendered artifacts in " << config.out_dir.string() << "\n";
  return 0;
}

}  // namespace maskaudit
