#include "maskaudit/probe.hpp"

#include <fcntl.h>
#include <unistd.h>

#include <deque>
#include <fstream>
#include <future>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "maskaudit/util/hash.hpp"
#include "maskaudit/util/time.hpp"

namespace maskaudit {

namespace {

using nlohmann::json;

json record_to_json(const StoreRecord& r) {
  json completions = json::array();
  for (const Completion& c : r.completions) {
    json jc;
    jc["rank"] = c.rank;
    jc["surface"] = c.surface;
    if (c.model_score) {
      jc["score"] = *c.model_score;
    } else {
      jc["score"] = nullptr;
    }
    completions.push_back(std::move(jc));
  }
  json j;
  j["model_id"] = r.model_id;
  j["template_id"] = r.template_id;
  j["k"] = r.k;
  j["truncated"] = r.truncated;
  j["completions"] = std::move(completions);
  j["fetched_at"] = r.fetched_at;
  return j;
}

std::string record_line(const StoreRecord& r) {
  json j = record_to_json(r);
  j["checksum"] = util::hex64(util::fnv1a64(j.dump()));
  return j.dump();
}

StoreRecord record_from_line(const std::string& line, const std::filesystem::path& path,
                             std::size_t line_no) {
  auto corrupt = [&](const std::string& why) -> ProbeError {
    return ProbeError(ProbeErrorCode::CorruptRecord,
                      path.string() + ":" + std::to_string(line_no) +
                          ": corrupt store record (" + why + ")");
  };
  json j = json::parse(line, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw corrupt("not a JSON object");
  if (!j.contains("checksum") || !j["checksum"].is_string()) throw corrupt("no checksum");
  std::string checksum = j["checksum"].get<std::string>();
  j.erase("checksum");
  if (util::hex64(util::fnv1a64(j.dump())) != checksum) throw corrupt("checksum mismatch");
  try {
    StoreRecord r;
    r.model_id = j.at("model_id").get<std::string>();
    r.template_id = j.at("template_id").get<std::string>();
    r.k = j.at("k").get<int>();
    r.truncated = j.at("truncated").get<bool>();
    r.fetched_at = j.at("fetched_at").get<std::string>();
    for (const json& jc : j.at("completions")) {
      Completion c;
      c.rank = jc.at("rank").get<int>();
      c.surface = jc.at("surface").get<std::string>();
      if (jc.contains("score") && !jc.at("score").is_null()) {
        c.model_score = jc.at("score").get<double>();
      }
      r.completions.push_back(std::move(c));
    }
    return r;
  } catch (const json::exception& e) {
    throw corrupt(e.what());
  }
}

void check_ranks(const std::vector<Completion>& completions, const std::string& who) {
  for (std::size_t i = 0; i < completions.size(); ++i) {
    if (completions[i].rank != static_cast<int>(i) + 1) {
      throw ProbeError(ProbeErrorCode::MalformedBackendResponse,
                       who + ": completion ranks are not 1..n (rank " +
                           std::to_string(completions[i].rank) + " at position " +
                           std::to_string(i + 1) + ")");
    }
  }
}

// The stub composes pseudo-words from a fixed syllable table so that
// completions look like tokens and normalize cleanly.
constexpr std::array<std::string_view, 16> kStubSyllables = {
    "ba", "de", "fi", "go", "hu", "ka", "li", "mo",
    "na", "po", "ra", "se", "ti", "vu", "ys", "ør"};

}  // namespace

BackendResult StubBackend::fetch(const ProbeRequest& request) {
  if (request.top_k < 1) {
    throw ProbeError(ProbeErrorCode::InvalidArgument, "top_k must be >= 1");
  }
  BackendResult result;
  result.fetched_at = util::deterministic_timestamp();
  std::uint64_t base = util::fnv1a64(request.text, util::fnv1a64_u64(seed_));
  double score = 0.0;
  for (int rank = 1; rank <= request.top_k; ++rank) {
    std::uint64_t x =
        util::splitmix64(base ^ (0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(rank)));
    std::string token;
    int syllables = 2 + static_cast<int>(x % 3);
    std::uint64_t s = x;
    for (int i = 0; i < syllables; ++i) {
      s = util::splitmix64(s);
      token += kStubSyllables[s % kStubSyllables.size()];
    }
    if (rank == 1) {
      score = 0.20 + 0.60 * (static_cast<double>(x >> 32) /
                             static_cast<double>(0x100000000ULL));
    } else {
      s = util::splitmix64(s);
      score *= 0.55 + 0.40 * (static_cast<double>(s % 1000) / 1000.0);
    }
    double rounded = static_cast<double>(static_cast<std::int64_t>(score * 1e6)) / 1e6;
    result.completions.push_back(Completion{rank, std::move(token), rounded});
  }
  return result;
}

CompletionStore CompletionStore::open(const std::filesystem::path& path, bool read_only) {
  CompletionStore store;
  store.path_ = path;
  store.read_only_ = read_only;
  std::ifstream in(path, std::ios::binary);
  if (in) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      if (line.empty()) continue;
      StoreRecord r = record_from_line(line, path, line_no);
      auto key = std::make_pair(r.model_id, r.template_id);
      if (store.index_.count(key) > 0) {
        throw ProbeError(ProbeErrorCode::CorruptRecord,
                         path.string() + ":" + std::to_string(line_no) +
                             ": duplicate record for (" + r.model_id + ", " +
                             r.template_id + ")");
      }
      store.index_[key] = store.records_.size();
      store.records_.push_back(std::move(r));
    }
  } else if (!read_only) {
    // Create the file now so that an empty campaign still leaves a store.
    std::ofstream create(path, std::ios::binary | std::ios::app);
    if (!create) {
      throw ProbeError(ProbeErrorCode::IoError, "cannot open store: " + path.string());
    }
  }
  return store;
}

bool CompletionStore::append(const StoreRecord& record) {
  if (read_only_) {
    throw ProbeError(ProbeErrorCode::IoError,
                     "store opened read-only: " + path_.string());
  }
  std::lock_guard<std::mutex> lock(*write_mutex_);
  auto key = std::make_pair(record.model_id, record.template_id);
  if (index_.count(key) > 0) return false;
  std::ofstream out(path_, std::ios::binary | std::ios::app);
  if (!out) {
    throw ProbeError(ProbeErrorCode::IoError, "cannot append to store: " + path_.string());
  }
  out << record_line(record) << '\n';
  out.flush();
  if (!out) {
    throw ProbeError(ProbeErrorCode::IoError, "short write to store: " + path_.string());
  }
  index_[key] = records_.size();
  records_.push_back(record);
  return true;
}

const StoreRecord* CompletionStore::find(std::string_view model_id,
                                         std::string_view template_id) const {
  auto it = index_.find(std::make_pair(std::string(model_id), std::string(template_id)));
  if (it == index_.end()) return nullptr;
  return &records_[it->second];
}

std::optional<CompletionSet> CompletionStore::lookup(std::string_view model_id,
                                                     std::string_view template_id,
                                                     int k) const {
  const StoreRecord* r = find(model_id, template_id);
  if (r == nullptr || k < 1) return std::nullopt;
  if (r->completions.size() < static_cast<std::size_t>(k)) return std::nullopt;
  CompletionSet set;
  set.template_id = r->template_id;
  set.model_id = r->model_id;
  set.k_requested = k;
  set.truncated = false;
  set.completions.assign(r->completions.begin(),
                         r->completions.begin() + static_cast<std::ptrdiff_t>(k));
  return set;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& store_path)
    : store_(CompletionStore::open(store_path, /*read_only=*/true)) {}

BackendResult ReplayBackend::fetch(const ProbeRequest& request) {
  const StoreRecord* r = store_.find(request.model_id, request.template_id);
  if (r == nullptr) {
    throw ProbeError(ProbeErrorCode::ReplayMiss,
                     "replay store has no record for (" + request.model_id + ", " +
                         request.template_id + ")");
  }
  BackendResult result;
  result.fetched_at = r->fetched_at;
  std::size_t n = std::min(r->completions.size(), static_cast<std::size_t>(request.top_k));
  result.completions.assign(r->completions.begin(),
                            r->completions.begin() + static_cast<std::ptrdiff_t>(n));
  return result;
}

HttpFillMaskBackend::HttpFillMaskBackend(std::string endpoint_url,
                                         HttpBackendOptions options)
    : url_(std::move(endpoint_url)), options_(std::move(options)) {}

BackendResult HttpFillMaskBackend::fetch(const ProbeRequest& request) {
  json body;
  body["text"] = request.text;
  body["top_k"] = request.top_k;
  const std::string payload = body.dump();

  std::string host;
  std::string path = "/";
  {
    auto scheme_end = url_.find("://");
    if (scheme_end == std::string::npos) {
      throw ProbeError(ProbeErrorCode::InvalidArgument, "bad endpoint URL: " + url_);
    }
    auto path_start = url_.find('/', scheme_end + 3);
    if (path_start == std::string::npos) {
      host = url_;
    } else {
      host = url_.substr(0, path_start);
      path = url_.substr(path_start);
    }
  }

  std::string last_error;
  auto backoff = options_.initial_backoff;
  for (int attempt = 1; attempt <= options_.max_attempts; ++attempt) {
    if (attempt > 1) {
      std::this_thread::sleep_for(backoff);
      backoff *= 2;
    }
    httplib::Client client(host);
    client.set_connection_timeout(options_.timeout);
    client.set_read_timeout(options_.timeout);
    httplib::Headers headers;
    if (!options_.bearer_token.empty()) {
      headers.emplace("Authorization", "Bearer " + options_.bearer_token);
    }
    auto res = client.Post(path, headers, payload, "application/json");
    if (!res) {
      last_error = "connection failed (" + httplib::to_string(res.error()) + ")";
      continue;
    }
    if (res->status == 429 || res->status >= 500) {
      last_error = "HTTP " + std::to_string(res->status);
      continue;
    }
    if (res->status != 200) {
      throw ProbeError(ProbeErrorCode::BackendUnavailable,
                       url_ + ": HTTP " + std::to_string(res->status));
    }
    json parsed = json::parse(res->body, nullptr, false);
    if (parsed.is_discarded() || !parsed.is_array()) {
      throw ProbeError(ProbeErrorCode::MalformedBackendResponse,
                       url_ + ": response is not a JSON array");
    }
    BackendResult result;
    int rank = 0;
    for (const json& item : parsed) {
      if (rank >= request.top_k) break;
      if (!item.is_object() || !item.contains("token") || !item["token"].is_string()) {
        throw ProbeError(ProbeErrorCode::MalformedBackendResponse,
                         url_ + ": completion item lacks a string 'token'");
      }
      Completion c;
      c.rank = ++rank;
      c.surface = item["token"].get<std::string>();
      if (item.contains("score") && !item["score"].is_null()) {
        if (!item["score"].is_number()) {
          throw ProbeError(ProbeErrorCode::MalformedBackendResponse,
                           url_ + ": completion 'score' is not a number");
        }
        double s = item["score"].get<double>();
        if (s < 0.0 || s > 1.0) {
          throw ProbeError(ProbeErrorCode::MalformedBackendResponse,
                           url_ + ": completion score outside [0,1]");
        }
        c.model_score = s;
      }
      result.completions.push_back(std::move(c));
    }
    return result;
  }
  throw ProbeError(ProbeErrorCode::BackendUnavailable,
                   url_ + ": giving up after " + std::to_string(options_.max_attempts) +
                       " attempts: " + last_error);
}

std::unique_ptr<FillMaskBackend> make_backend(const ModelSpec& spec,
                                              const HttpBackendOptions& http_options) {
  const std::string& ep = spec.endpoint;
  if (ep.rfind("stub:", 0) == 0) {
    try {
      return std::make_unique<StubBackend>(
          static_cast<std::uint64_t>(std::stoull(ep.substr(5))));
    } catch (const std::exception&) {
      throw ProbeError(ProbeErrorCode::InvalidArgument,
                       "model '" + spec.model_id + "': stub seed is not a number: '" +
                           ep + "'");
    }
  }
  if (ep.rfind("replay:", 0) == 0) {
    return std::make_unique<ReplayBackend>(ep.substr(7));
  }
  if (ep.rfind("http://", 0) == 0 || ep.rfind("https://", 0) == 0) {
    return std::make_unique<HttpFillMaskBackend>(ep, http_options);
  }
  throw ProbeError(ProbeErrorCode::InvalidArgument,
                   "model '" + spec.model_id + "': unknown endpoint scheme '" + ep + "'");
}

namespace {

StoreRecord fetch_record(FillMaskBackend& backend, const ModelSpec& spec,
                         const Template& tmpl, int k) {
  if (k < 1) {
    throw ProbeError(ProbeErrorCode::InvalidArgument, "k must be >= 1");
  }
  ProbeRequest request;
  request.model_id = spec.model_id;
  request.template_id = tmpl.template_id;
  request.text = render_prompt(tmpl, spec.mask_token);
  request.top_k = k;
  BackendResult result = backend.fetch(request);
  if (result.completions.size() > static_cast<std::size_t>(k)) {
    result.completions.resize(static_cast<std::size_t>(k));
  }
  check_ranks(result.completions, spec.model_id + "/" + tmpl.template_id);
  StoreRecord record;
  record.model_id = spec.model_id;
  record.template_id = tmpl.template_id;
  record.k = k;
  record.truncated = result.completions.size() < static_cast<std::size_t>(k);
  record.completions = std::move(result.completions);
  record.fetched_at =
      result.fetched_at.empty() ? util::wall_timestamp() : result.fetched_at;
  return record;
}

CompletionSet record_to_set(const StoreRecord& record) {
  CompletionSet set;
  set.template_id = record.template_id;
  set.model_id = record.model_id;
  set.k_requested = record.k;
  set.truncated = record.truncated;
  set.completions = record.completions;
  return set;
}

}  // namespace

CompletionSet fetch_completions(FillMaskBackend& backend, const ModelSpec& spec,
                                const Template& tmpl, int k, CompletionStore* store) {
  StoreRecord record = fetch_record(backend, spec, tmpl, k);
  if (store != nullptr) store->append(record);
  return record_to_set(record);
}

CampaignSummary run_probe_campaign(FillMaskBackend& backend, const ModelSpec& spec,
                                   const std::vector<Template>& templates,
                                   const std::set<int>& k_values, CompletionStore& store,
                                   int parallelism) {
  if (templates.empty()) {
    throw ProbeError(ProbeErrorCode::InvalidArgument, "no templates to probe");
  }
  if (k_values.empty() || *k_values.begin() < 1) {
    throw ProbeError(ProbeErrorCode::InvalidArgument, "k values must be positive");
  }
  const int max_k = *k_values.rbegin();
  if (parallelism < 1) parallelism = 1;

  CampaignSummary summary;
  // Bounded window of in-flight fetches; results are committed in template
  // order so the store layout is independent of completion timing.
  std::deque<std::pair<std::size_t, std::future<StoreRecord>>> in_flight;

  auto commit_front = [&] {
    auto [idx, fut] = std::move(in_flight.front());
    in_flight.pop_front();
    const Template& tmpl = templates[idx];
    try {
      StoreRecord record = fut.get();
      store.append(record);
      ++summary.fetched;
    } catch (const AuditError& e) {
      ++summary.failed;
      summary.failures.emplace_back(tmpl.template_id, e.what());
    }
  };

  for (std::size_t i = 0; i < templates.size(); ++i) {
    const Template& tmpl = templates[i];
    const StoreRecord* existing = store.find(spec.model_id, tmpl.template_id);
    if (existing != nullptr) {
      if (existing->completions.size() >= static_cast<std::size_t>(max_k) ||
          existing->truncated) {
        ++summary.cached;
      } else {
        // Records are immutable, so a shallower record cannot be deepened.
        ++summary.failed;
        summary.failures.emplace_back(
            tmpl.template_id,
            "stored record has depth " + std::to_string(existing->completions.size()) +
                " < " + std::to_string(max_k) + "; probe into a fresh store");
      }
      continue;
    }
    in_flight.emplace_back(i, std::async(std::launch::async, [&backend, &spec, &tmpl,
                                                              max_k] {
                             return fetch_record(backend, spec, tmpl, max_k);
                           }));
    while (in_flight.size() >= static_cast<std::size_t>(parallelism)) commit_front();
  }
  while (!in_flight.empty()) commit_front();

  if (summary.failed == templates.size()) {
    throw ProbeError(ProbeErrorCode::CampaignFailed,
                     "campaign for model '" + spec.model_id + "' failed for all " +
                         std::to_string(templates.size()) + " templates; first error: " +
                         (summary.failures.empty() ? std::string("?")
                                                   : summary.failures.front().second));
  }
  return summary;
}

StoreLock::StoreLock(const std::filesystem::path& store_path)
    : lock_path_(store_path.string() + ".lock") {
  int fd = ::open(lock_path_.c_str(), O_CREAT | O_EXCL | O_WRONLY, 0644);
  if (fd < 0) {
    throw ProbeError(ProbeErrorCode::StoreLocked,
                     "store is locked (remove " + lock_path_.string() +
                         " if no probe is running)");
  }
  std::string pid = std::to_string(::getpid()) + "\n";
  ssize_t written = ::write(fd, pid.data(), pid.size());
  (void)written;
  ::close(fd);
}

StoreLock::~StoreLock() {
  std::error_code ec;
  std::filesystem::remove(lock_path_, ec);
}

}  // namespace maskaudit
