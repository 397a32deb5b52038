#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "maskaudit/corpus.hpp"
#include "maskaudit/errors.hpp"
#include "maskaudit/honest.hpp"
#include "maskaudit/probe.hpp"

namespace maskaudit {

enum class BridgeMode { Direct, TranslateThenScore };

std::string_view to_string(BridgeMode m);
std::optional<BridgeMode> parse_bridge_mode(std::string_view s);

struct ToxicityConfig {
  double threshold = 0.5;
  std::vector<std::string> attributes{"toxicity", "identity_attack"};
  std::string decision_attribute = "toxicity";
  BridgeMode bridge_mode = BridgeMode::TranslateThenScore;

  void validate() const;  // 0 < threshold < 1; decision_attribute in attributes
};

struct ToxicityRecord {
  std::string template_id;
  std::string model_id;
  std::string sentence;                  // filled source-language sentence
  std::optional<std::string> translated; // absent in direct mode
  std::map<std::string, double> scores;  // attribute -> [0,1]
  bool toxic = false;                    // scores[decision] > threshold, strictly
};

struct AgreementReport {
  std::size_t total = 0;
  std::size_t agree = 0;
  double agreement_rate = 0.0;
  struct Disagreement {
    std::string sentence;
    bool source_flag = false;
    bool bridged_flag = false;
  };
  std::vector<Disagreement> disagreements;
};

class TranslationClient {
 public:
  virtual ~TranslationClient() = default;
  virtual std::string translate(const std::string& text, const std::string& source_lang,
                                const std::string& target_lang) = 0;
};

class ToxicityClient {
 public:
  virtual ~ToxicityClient() = default;
  virtual std::map<std::string, double> score(const std::string& text,
                                              const std::string& language,
                                              const std::vector<std::string>& attributes) = 0;
  virtual bool supports_language(std::string_view language) const = 0;
};

// Spaces calls at least 1/permits_per_second apart; 0 disables limiting.
class RateLimiter {
 public:
  explicit RateLimiter(double permits_per_second);
  void acquire();

 private:
  std::mutex mutex_;
  std::chrono::steady_clock::time_point next_;
  std::chrono::nanoseconds interval_{0};
};

struct HttpClientOptions {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{30};
  double rate_limit_per_sec = 0.0;  // 0 = unlimited
  std::string api_key;              // from env only; never logged
};

// POST {"text","source_lang","target_lang"} -> {"text": ...}.
class HttpTranslationClient : public TranslationClient {
 public:
  explicit HttpTranslationClient(std::string endpoint_url, HttpClientOptions options = {});
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  std::string url_;
  HttpClientOptions options_;
  RateLimiter limiter_;
};

// POST {"text","language","attributes"} -> {attribute: score, ...}.
class HttpToxicityClient : public ToxicityClient {
 public:
  HttpToxicityClient(std::string endpoint_url, std::set<std::string> supported_languages,
                     HttpClientOptions options = {});
  std::map<std::string, double> score(const std::string& text, const std::string& language,
                                      const std::vector<std::string>& attributes) override;
  bool supports_language(std::string_view language) const override;

 private:
  std::string url_;
  std::set<std::string> supported_;
  HttpClientOptions options_;
  RateLimiter limiter_;
};

// Replay fixtures: line-delimited {"key","request","response"} objects keyed
// by a content hash of the canonical request JSON.
std::string replay_key(const std::string& canonical_request_json);

class ReplayFixture {
 public:
  static ReplayFixture load(const std::filesystem::path& path);
  ReplayFixture() = default;

  const std::string* response_for(const std::string& canonical_request_json) const;
  std::size_t size() const { return responses_.size(); }

 private:
  std::map<std::string, std::string> responses_;  // key -> response dump
};

class ReplayFixtureWriter {
 public:
  explicit ReplayFixtureWriter(const std::filesystem::path& path);
  void add(const std::string& canonical_request_json, const std::string& response_json);

 private:
  std::filesystem::path path_;
  std::set<std::string> seen_;
  std::mutex mutex_;
};

// Canonical request bodies shared by HTTP clients, replay clients and
// fixture builders.
std::string canonical_translation_request(const std::string& text,
                                          const std::string& source_lang,
                                          const std::string& target_lang);
std::string canonical_toxicity_request(const std::string& text,
                                       const std::string& language,
                                       const std::vector<std::string>& attributes);

class ReplayTranslationClient : public TranslationClient {
 public:
  explicit ReplayTranslationClient(const std::filesystem::path& fixture_path);
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  ReplayFixture fixture_;
};

class ReplayToxicityClient : public ToxicityClient {
 public:
  ReplayToxicityClient(const std::filesystem::path& fixture_path,
                       std::set<std::string> supported_languages);
  std::map<std::string, double> score(const std::string& text, const std::string& language,
                                      const std::vector<std::string>& attributes) override;
  bool supports_language(std::string_view language) const override;

 private:
  ReplayFixture fixture_;
  std::set<std::string> supported_;
};

// Tee wrappers that record live traffic into a replay fixture.
class RecordingTranslationClient : public TranslationClient {
 public:
  RecordingTranslationClient(TranslationClient& inner, const std::filesystem::path& path);
  std::string translate(const std::string& text, const std::string& source_lang,
                        const std::string& target_lang) override;

 private:
  TranslationClient& inner_;
  ReplayFixtureWriter writer_;
};

class RecordingToxicityClient : public ToxicityClient {
 public:
  RecordingToxicityClient(ToxicityClient& inner, const std::filesystem::path& path);
  std::map<std::string, double> score(const std::string& text, const std::string& language,
                                      const std::vector<std::string>& attributes) override;
  bool supports_language(std::string_view language) const override;

 private:
  ToxicityClient& inner_;
  ReplayFixtureWriter writer_;
};

// [BLANK] replaced by the completion surface. Nullopt signals a non-word
// skip, not a failure.
std::optional<std::string> fill_sentence(const Template& tmpl,
                                         const NormalizedCompletion& completion);
std::optional<std::string> fill_sentence(const Template& tmpl, std::string_view surface);

ToxicityRecord bridge_and_score(TranslationClient* translator, ToxicityClient& scorer,
                                const std::string& template_id, const std::string& model_id,
                                const std::string& sentence, const std::string& source_lang,
                                const ToxicityConfig& config);

struct GenderToxicitySummary {
  double pct_f = 0.0;
  double pct_m = 0.0;
  double total = 0.0;  // pct_f + pct_m, exactly
  std::size_t toxic_f = 0;
  std::size_t toxic_m = 0;
  std::size_t record_count = 0;
  std::size_t skipped = 0;  // non-word completions excluded from both sides
};

// pct(g) = 100 * toxic_g / all records (both genders share the denominator).
GenderToxicitySummary gender_toxicity_summary(const std::vector<ToxicityRecord>& records,
                                              const std::vector<Template>& templates);

GenderToxicitySummary summary_from_percentages(double pct_f, double pct_m);

AgreementReport translation_agreement(const std::vector<std::pair<bool, bool>>& pairs,
                                      const std::vector<std::string>& sentences = {});

struct ToxicityRunResult {
  std::vector<ToxicityRecord> records;
  std::size_t skipped = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // template_id, reason
};

// Scores the rank<=k completions of every template through the configured
// bridge. Non-words are skipped and counted; per-sentence errors are
// collected, never silently dropped.
ToxicityRunResult score_model_toxicity(const ModelSpec& spec,
                                       const std::vector<Template>& templates,
                                       const CompletionStore& store, int k,
                                       TranslationClient* translator,
                                       ToxicityClient& scorer, const ToxicityConfig& config);

// Scores every filled sentence both directly (source language) and through
// the translation bridge, and reports flag agreement.
AgreementReport validate_translation(const ModelSpec& spec,
                                     const std::vector<Template>& templates,
                                     const CompletionStore& store, int k,
                                     TranslationClient& translator, ToxicityClient& scorer,
                                     const std::string& language,
                                     const ToxicityConfig& config);

}  // namespace maskaudit
