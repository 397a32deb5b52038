#pragma once

#include <chrono>
#include <cstdint>
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

namespace maskaudit {

// Endpoint schemes: "https://..." / "http://..." for live fill-mask servers,
// "replay:<store path>" to replay a prior completion store,
// "stub:<seed>" for the deterministic offline backend.
struct ModelSpec {
  std::string model_id;
  std::string language;
  std::string mask_token;
  std::string endpoint;
};

struct Completion {
  int rank = 0;  // 1-based, unique within its set
  std::string surface;
  std::optional<double> model_score;  // [0,1] when the backend reports one

  bool operator==(const Completion&) const = default;
};

struct CompletionSet {
  std::string template_id;
  std::string model_id;
  int k_requested = 0;
  bool truncated = false;  // backend returned fewer than requested
  std::vector<Completion> completions;  // rank ascending from 1
};

struct ProbeRequest {
  std::string model_id;
  std::string template_id;
  std::string text;  // rendered prompt containing the mask token
  int top_k = 0;
};

struct BackendResult {
  std::vector<Completion> completions;
  std::string fetched_at;  // empty: caller stamps the current time
};

class FillMaskBackend {
 public:
  virtual ~FillMaskBackend() = default;
  virtual BackendResult fetch(const ProbeRequest& request) = 0;
};

// Deterministic pseudo-token generator; identical output for identical
// (seed, text, k), across runs and processes.
class StubBackend : public FillMaskBackend {
 public:
  explicit StubBackend(std::uint64_t seed) : seed_(seed) {}
  BackendResult fetch(const ProbeRequest& request) override;

 private:
  std::uint64_t seed_;
};

// One immutable line-delimited record per (model_id, template_id).
struct StoreRecord {
  std::string model_id;
  std::string template_id;
  int k = 0;
  bool truncated = false;
  std::vector<Completion> completions;
  std::string fetched_at;
};

// Append-only completion store. Appends are serialized internally; readers
// see only fully committed records. Dedup key = (model_id, template_id).
class CompletionStore {
 public:
  static CompletionStore open(const std::filesystem::path& path, bool read_only = false);

  CompletionStore(CompletionStore&&) = default;
  CompletionStore& operator=(CompletionStore&&) = default;

  // False when the key is already present (record left untouched).
  bool append(const StoreRecord& record);

  const StoreRecord* find(std::string_view model_id, std::string_view template_id) const;

  // Rank-1..k prefix of the stored set if stored depth >= k, else nullopt.
  std::optional<CompletionSet> lookup(std::string_view model_id,
                                      std::string_view template_id, int k) const;

  std::size_t size() const { return records_.size(); }
  const std::filesystem::path& path() const { return path_; }
  const std::vector<StoreRecord>& records() const { return records_; }

 private:
  CompletionStore() = default;

  std::filesystem::path path_;
  bool read_only_ = false;
  std::vector<StoreRecord> records_;
  std::map<std::pair<std::string, std::string>, std::size_t> index_;
  std::unique_ptr<std::mutex> write_mutex_ = std::make_unique<std::mutex>();
};

// Serves completions recorded in a prior store; reproduces the original
// ranks, scores and fetch timestamps exactly.
class ReplayBackend : public FillMaskBackend {
 public:
  explicit ReplayBackend(const std::filesystem::path& store_path);
  BackendResult fetch(const ProbeRequest& request) override;

 private:
  CompletionStore store_;
};

struct HttpBackendOptions {
  int max_attempts = 3;
  std::chrono::milliseconds initial_backoff{500};
  std::chrono::seconds timeout{30};
  std::string bearer_token;  // INFERENCE_API_KEY; never logged
};

// POST {"text": ..., "top_k": n} -> JSON array of {"token": ..., "score": ...}.
class HttpFillMaskBackend : public FillMaskBackend {
 public:
  explicit HttpFillMaskBackend(std::string endpoint_url, HttpBackendOptions options = {});
  BackendResult fetch(const ProbeRequest& request) override;

 private:
  std::string url_;
  HttpBackendOptions options_;
};

// Dispatches on the model's endpoint scheme.
std::unique_ptr<FillMaskBackend> make_backend(const ModelSpec& spec,
                                              const HttpBackendOptions& http_options = {});

// Fetches the backend's top-k for the rendered prompt and, when a store is
// given, commits the result.
CompletionSet fetch_completions(FillMaskBackend& backend, const ModelSpec& spec,
                                const Template& tmpl, int k,
                                CompletionStore* store = nullptr);

struct CampaignSummary {
  std::size_t fetched = 0;
  std::size_t cached = 0;
  std::size_t failed = 0;
  std::vector<std::pair<std::string, std::string>> failures;  // template_id, reason
};

// Probes every template at max(k_values); smaller k are later served as store
// prefixes. Per-template errors land in the summary; throws CampaignFailed
// only when every template failed. Results are committed in template order so
// identical campaigns produce byte-identical stores at any parallelism.
CampaignSummary run_probe_campaign(FillMaskBackend& backend, const ModelSpec& spec,
                                   const std::vector<Template>& templates,
                                   const std::set<int>& k_values, CompletionStore& store,
                                   int parallelism = 4);

// Advisory lockfile guarding a store during probe campaigns.
class StoreLock {
 public:
  explicit StoreLock(const std::filesystem::path& store_path);
  ~StoreLock();

  StoreLock(const StoreLock&) = delete;
  StoreLock& operator=(const StoreLock&) = delete;

 private:
  std::filesystem::path lock_path_;
};

}  // namespace maskaudit
