#include "maskaudit/toxicity.hpp"

#include <algorithm>
#include <fstream>
#include <thread>
#include <unordered_map>

#include "httplib.h"
#include "json.hpp"
#include "maskaudit/util/hash.hpp"
#include "maskaudit/util/text.hpp"

namespace maskaudit {

namespace {

using nlohmann::json;

struct SplitUrl {
  std::string host;
  std::string path;
};

SplitUrl split_url(const std::string& url) {
  auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    throw ToxicityError(ToxicityErrorCode::InvalidConfig, "bad endpoint URL: " + url);
  }
  auto path_start = url.find('/', scheme_end + 3);
  if (path_start == std::string::npos) return {url, "/"};
  return {url.substr(0, path_start), url.substr(path_start)};
}

// Shared retry/backoff POST used by both HTTP clients.
std::string post_with_retries(const std::string& url, const std::string& payload,
                              const HttpClientOptions& options, RateLimiter& limiter,
                              ToxicityErrorCode unavailable_code) {
  SplitUrl parts = split_url(url);
  std::string last_error;
  auto backoff = options.initial_backoff;
  for (int attempt = 1; attempt <= options.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    limiter.acquire();
    httplib::Client client(parts.host);
    client.set_connection_timeout(options.timeout);
    client.set_read_timeout(options.timeout);
    httplib::Headers headers;
    if (!options.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + options.api_key);
    }
    auto res = client.Post(parts.path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ToxicityError(unavailable_code, url + ": HTTP " + std::to_string(res->status));
    }
    return res->body;
  }
  throw ToxicityError(unavailable_code,
                      url + ": giving up after " + std::to_string(options.max_attempts) +
                          " attempts: " + last_error);
}

std::map<std::string, double> parse_score_response(const std::string& body,
                                                   const std::vector<std::string>& attributes,
                                                   const std::string& origin) {
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object()) {
    throw ToxicityError(ToxicityErrorCode::MalformedResponse,
                        origin + ": response is not a JSON object");
  }
  std::map<std::string, double> scores;
  for (const auto& [key, value] : parsed.items()) {
    if (!value.is_number()) {
      throw ToxicityError(ToxicityErrorCode::MalformedResponse,
                          origin + ": attribute '" + key + "' is not a number");
    }
    double v = value.get<double>();
    if (v < 0.0 || v > 1.0) {
      throw ToxicityError(ToxicityErrorCode::MalformedResponse,
                          origin + ": attribute '" + key + "' outside [0,1]");
    }
    scores[key] = v;
  }
  for (const std::string& attr : attributes) {
    if (scores.find(attr) == scores.end()) {
      throw ToxicityError(ToxicityErrorCode::AttributeMissing,
                          origin + ": response lacks attribute '" + attr + "'");
    }
  }
  return scores;
}

}  // namespace

std::string_view to_string(BridgeMode m) {
  return m == BridgeMode::Direct ? "direct" : "translate";
}

std::optional<BridgeMode> parse_bridge_mode(std::string_view s) {
  if (s == "direct") return BridgeMode::Direct;
  if (s == "translate" || s == "translate-then-score") return BridgeMode::TranslateThenScore;
  return std::nullopt;
}

void ToxicityConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw ToxicityError(ToxicityErrorCode::InvalidConfig,
                        "threshold must be in (0,1), got " + std::to_string(threshold));
  }
  if (attributes.empty()) {
    throw ToxicityError(ToxicityErrorCode::InvalidConfig, "no attributes configured");
  }
  if (std::find(attributes.begin(), attributes.end(), decision_attribute) ==
      attributes.end()) {
    throw ToxicityError(ToxicityErrorCode::InvalidConfig,
                        "decision attribute '" + decision_attribute +
                            "' is not among the configured attributes");
  }
}

RateLimiter::RateLimiter(double permits_per_second) {
  if (permits_per_second > 0.0) {
    interval_ = std::chrono::nanoseconds(
        static_cast<std::int64_t>(1e9 / permits_per_second));
  }
  next_ = std::chrono::steady_clock::now();
}

void RateLimiter::acquire() {
  if (interval_.count() == 0) return;
  std::chrono::steady_clock::time_point wake;
  {
    std::lock_guard<std::mutex> lock(mutex_);
    auto now = std::chrono::steady_clock::now();
    wake = std::max(next_, now);
    next_ = wake + interval_;
  }
  std::this_thread::sleep_until(wake);
}

HttpTranslationClient::HttpTranslationClient(std::string endpoint_url,
                                             HttpClientOptions options)
    : url_(std::move(endpoint_url)),
      options_(std::move(options)),
      limiter_(options_.rate_limit_per_sec) {}

std::string HttpTranslationClient::translate(const std::string& text,
                                             const std::string& source_lang,
                                             const std::string& target_lang) {
  std::string payload = canonical_translation_request(text, source_lang, target_lang);
  std::string body = post_with_retries(url_, payload, options_, limiter_,
                                       ToxicityErrorCode::TranslationUnavailable);
  json parsed = json::parse(body, nullptr, false);
  if (parsed.is_discarded() || !parsed.is_object() || !parsed.contains("text") ||
      !parsed["text"].is_string()) {
    throw ToxicityError(ToxicityErrorCode::MalformedResponse,
                        url_ + ": translation response lacks a string 'text'");
  }
  return parsed["text"].get<std::string>();
}

HttpToxicityClient::HttpToxicityClient(std::string endpoint_url,
                                       std::set<std::string> supported_languages,
                                       HttpClientOptions options)
    : url_(std::move(endpoint_url)),
      supported_(std::move(supported_languages)),
      options_(std::move(options)),
      limiter_(options_.rate_limit_per_sec) {}

std::map<std::string, double> HttpToxicityClient::score(
    const std::string& text, const std::string& language,
    const std::vector<std::string>& attributes) {
  std::string payload = canonical_toxicity_request(text, language, attributes);
  std::string body = post_with_retries(url_, payload, options_, limiter_,
                                       ToxicityErrorCode::ToxicityApiUnavailable);
  return parse_score_response(body, attributes, url_);
}

bool HttpToxicityClient::supports_language(std::string_view language) const {
  return supported_.count(std::string(language)) > 0;
}

std::string replay_key(const std::string& canonical_request_json) {
  return util::hex64(util::fnv1a64(canonical_request_json));
}

std::string canonical_translation_request(const std::string& text,
                                          const std::string& source_lang,
                                          const std::string& target_lang) {
  json j;
  j["text"] = text;
  j["source_lang"] = source_lang;
  j["target_lang"] = target_lang;
  return j.dump();
}

std::string canonical_toxicity_request(const std::string& text, const std::string& language,
                                       const std::vector<std::string>& attributes) {
  json j;
  j["text"] = text;
  j["language"] = language;
  j["attributes"] = attributes;
  return j.dump();
}

ReplayFixture ReplayFixture::load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ToxicityError(ToxicityErrorCode::IoError,
                        "cannot open replay fixture: " + path.string());
  }
  ReplayFixture fx;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    json j = json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("key") ||
        !j.contains("response")) {
      throw ToxicityError(ToxicityErrorCode::IoError,
                          path.string() + ":" + std::to_string(line_no) +
                              ": malformed fixture line");
    }
    fx.responses_[j["key"].get<std::string>()] = j["response"].dump();
  }
  return fx;
}

const std::string* ReplayFixture::response_for(
    const std::string& canonical_request_json) const {
  auto it = responses_.find(replay_key(canonical_request_json));
  if (it == responses_.end()) return nullptr;
  return &it->second;
}

ReplayFixtureWriter::ReplayFixtureWriter(const std::filesystem::path& path) : path_(path) {}

void ReplayFixtureWriter::add(const std::string& canonical_request_json,
                              const std::string& response_json) {
  std::lock_guard<std::mutex> lock(mutex_);
  std::string key = replay_key(canonical_request_json);
  if (!seen_.insert(key).second) return;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw ToxicityError(ToxicityErrorCode::IoError,
                        "cannot append to replay fixture: " + path_.string());
  }
  json j;
  j["key"] = key;
  j["request"] = json::parse(canonical_request_json);
  j["response"] = json::parse(response_json);
  out << j.dump() << '\n';
}

ReplayTranslationClient::ReplayTranslationClient(const std::filesystem::path& fixture_path)
    : fixture_(ReplayFixture::load(fixture_path)) {}

std::string ReplayTranslationClient::translate(const std::string& text,
                                               const std::string& source_lang,
                                               const std::string& target_lang) {
  std::string request = canonical_translation_request(text, source_lang, target_lang);
  const std::string* response = fixture_.response_for(request);
  if (response == nullptr) {
    throw ToxicityError(ToxicityErrorCode::ReplayMiss,
                        "translation fixture has no response for: " + request);
  }
  json parsed = json::parse(*response);
  if (!parsed.is_object() || !parsed.contains("text") || !parsed["text"].is_string()) {
    throw ToxicityError(ToxicityErrorCode::MalformedResponse,
                        "fixture translation response lacks a string 'text'");
  }
  return parsed["text"].get<std::string>();
}

ReplayToxicityClient::ReplayToxicityClient(const std::filesystem::path& fixture_path,
                                           std::set<std::string> supported_languages)
    : fixture_(ReplayFixture::load(fixture_path)), supported_(std::move(supported_languages)) {}

std::map<std::string, double> ReplayToxicityClient::score(
    const std::string& text, const std::string& language,
    const std::vector<std::string>& attributes) {
  std::string request = canonical_toxicity_request(text, language, attributes);
  const std::string* response = fixture_.response_for(request);
  if (response == nullptr) {
    throw ToxicityError(ToxicityErrorCode::ReplayMiss,
                        "toxicity fixture has no response for: " + request);
  }
  return parse_score_response(*response, attributes, "replay fixture");
}

bool ReplayToxicityClient::supports_language(std::string_view language) const {
  return supported_.count(std::string(language)) > 0;
}

RecordingTranslationClient::RecordingTranslationClient(TranslationClient& inner,
                                                       const std::filesystem::path& path)
    : inner_(inner), writer_(path) {}

std::string RecordingTranslationClient::translate(const std::string& text,
                                                  const std::string& source_lang,
                                                  const std::string& target_lang) {
  std::string out = inner_.translate(text, source_lang, target_lang);
  json response;
  response["text"] = out;
  writer_.add(canonical_translation_request(text, source_lang, target_lang),
              response.dump());
  return out;
}

RecordingToxicityClient::RecordingToxicityClient(ToxicityClient& inner,
                                                 const std::filesystem::path& path)
    : inner_(inner), writer_(path) {}

std::map<std::string, double> RecordingToxicityClient::score(
    const std::string& text, const std::string& language,
    const std::vector<std::string>& attributes) {
  auto scores = inner_.score(text, language, attributes);
  json response(scores);
  writer_.add(canonical_toxicity_request(text, language, attributes), response.dump());
  return scores;
}

bool RecordingToxicityClient::supports_language(std::string_view language) const {
  return inner_.supports_language(language);
}

std::optional<std::string> fill_sentence(const Template& tmpl,
                                         const NormalizedCompletion& completion) {
  if (!completion.is_word) return std::nullopt;
  return util::replace_first(tmpl.raw_text, kBlankMarker, completion.surface);
}

std::optional<std::string> fill_sentence(const Template& tmpl, std::string_view surface) {
  return fill_sentence(tmpl, normalize_completion(surface));
}

ToxicityRecord bridge_and_score(TranslationClient* translator, ToxicityClient& scorer,
                                const std::string& template_id, const std::string& model_id,
                                const std::string& sentence, const std::string& source_lang,
                                const ToxicityConfig& config) {
  config.validate();
  ToxicityRecord record;
  record.template_id = template_id;
  record.model_id = model_id;
  record.sentence = sentence;
  if (config.bridge_mode == BridgeMode::TranslateThenScore) {
    if (translator == nullptr) {
      throw ToxicityError(ToxicityErrorCode::TranslationUnavailable,
                          "translate-then-score mode needs a translation client");
    }
    record.translated = translator->translate(sentence, source_lang, "en");
    record.scores = scorer.score(*record.translated, "en", config.attributes);
  } else {
    if (!scorer.supports_language(source_lang)) {
      throw ToxicityError(ToxicityErrorCode::DirectScoringUnsupported,
                          "toxicity client does not support language '" + source_lang + "'");
    }
    record.scores = scorer.score(sentence, source_lang, config.attributes);
  }
  record.toxic = record.scores.at(config.decision_attribute) > config.threshold;
  return record;
}

GenderToxicitySummary gender_toxicity_summary(const std::vector<ToxicityRecord>& records,
                                              const std::vector<Template>& templates) {
  std::unordered_map<std::string, Gender> gender_by_id;
  for (const Template& t : templates) gender_by_id[t.template_id] = t.gender;

  GenderToxicitySummary s;
  s.record_count = records.size();
  for (const ToxicityRecord& r : records) {
    auto it = gender_by_id.find(r.template_id);
    if (it == gender_by_id.end()) {
      throw ToxicityError(ToxicityErrorCode::UnknownTemplate,
                          "no template with id '" + r.template_id + "'");
    }
    if (!r.toxic) continue;
    if (it->second == Gender::F) {
      ++s.toxic_f;
    } else {
      ++s.toxic_m;
    }
  }
  if (s.record_count > 0) {
    s.pct_f = 100.0 * static_cast<double>(s.toxic_f) / static_cast<double>(s.record_count);
    s.pct_m = 100.0 * static_cast<double>(s.toxic_m) / static_cast<double>(s.record_count);
  }
  s.total = s.pct_f + s.pct_m;
  return s;
}

GenderToxicitySummary summary_from_percentages(double pct_f, double pct_m) {
  GenderToxicitySummary s;
  s.pct_f = pct_f;
  s.pct_m = pct_m;
  s.total = pct_f + pct_m;
  return s;
}

AgreementReport translation_agreement(const std::vector<std::pair<bool, bool>>& pairs,
                                      const std::vector<std::string>& sentences) {
  if (pairs.empty()) {
    throw ToxicityError(ToxicityErrorCode::EmptyInput, "no flag pairs to compare");
  }
  AgreementReport report;
  report.total = pairs.size();
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    if (pairs[i].first == pairs[i].second) {
      ++report.agree;
    } else {
      AgreementReport::Disagreement d;
      d.sentence = i < sentences.size() ? sentences[i] : "";
      d.source_flag = pairs[i].first;
      d.bridged_flag = pairs[i].second;
      report.disagreements.push_back(std::move(d));
    }
  }
  report.agreement_rate =
      static_cast<double>(report.agree) / static_cast<double>(report.total);
  return report;
}

ToxicityRunResult score_model_toxicity(const ModelSpec& spec,
                                       const std::vector<Template>& templates,
                                       const CompletionStore& store, int k,
                                       TranslationClient* translator, ToxicityClient& scorer,
                                       const ToxicityConfig& config) {
  config.validate();
  ToxicityRunResult result;
  for (const Template& tmpl : templates) {
    auto set = store.lookup(spec.model_id, tmpl.template_id, k);
    if (!set) {
      result.failures.emplace_back(tmpl.template_id,
                                   "store has no completions at depth " + std::to_string(k));
      continue;
    }
    for (const Completion& c : set->completions) {
      NormalizedCompletion nc = normalize_completion(c.surface);
      auto sentence = fill_sentence(tmpl, nc);
      if (!sentence) {
        ++result.skipped;
        continue;
      }
      try {
        result.records.push_back(bridge_and_score(translator, scorer, tmpl.template_id,
                                                  spec.model_id, *sentence, spec.language,
                                                  config));
      } catch (const AuditError& e) {
        result.failures.emplace_back(tmpl.template_id, e.what());
      }
    }
  }
  return result;
}

AgreementReport validate_translation(const ModelSpec& spec,
                                     const std::vector<Template>& templates,
                                     const CompletionStore& store, int k,
                                     TranslationClient& translator, ToxicityClient& scorer,
                                     const std::string& language,
                                     const ToxicityConfig& config) {
  config.validate();
  if (!scorer.supports_language(language)) {
    throw ToxicityError(ToxicityErrorCode::DirectScoringUnsupported,
                        "toxicity client does not score '" + language +
                            "' directly; the bridge cannot be validated against it");
  }
  std::vector<std::pair<bool, bool>> pairs;
  std::vector<std::string> sentences;
  for (const Template& tmpl : templates) {
    auto set = store.lookup(spec.model_id, tmpl.template_id, k);
    if (!set) continue;  // probed depth is a precondition checked by the caller
    for (const Completion& c : set->completions) {
      auto sentence = fill_sentence(tmpl, normalize_completion(c.surface));
      if (!sentence) continue;
      auto direct = scorer.score(*sentence, language, config.attributes);
      std::string translated = translator.translate(*sentence, language, "en");
      auto bridged = scorer.score(translated, "en", config.attributes);
      bool direct_flag = direct.at(config.decision_attribute) > config.threshold;
      bool bridged_flag = bridged.at(config.decision_attribute) > config.threshold;
      pairs.emplace_back(direct_flag, bridged_flag);
      sentences.push_back(*sentence);
    }
  }
  return translation_agreement(pairs, sentences);
}

}  // namespace maskaudit
