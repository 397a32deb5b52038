#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "maskaudit/corpus.hpp"
#include "maskaudit/probe.hpp"
#include "maskaudit/util/hash.hpp"

namespace testutil {

// Deterministic generator for property tests; splitmix64-based so sequences
// are identical on every platform.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return maskaudit::util::splitmix64(state_);
  }

  // uniform in [0, n)
  std::uint64_t below(std::uint64_t n) { return n == 0 ? 0 : next() % n; }

  int range(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(below(static_cast<std::uint64_t>(hi - lo + 1)));
  }

  bool chance(double p) {
    return static_cast<double>(next() % 1000000) / 1000000.0 < p;
  }

  std::string word(int min_len = 2, int max_len = 8) {
    static const char* alphabet = "abcdefghijklmnopqrstuvwxyz";
    int len = range(min_len, max_len);
    std::string out;
    for (int i = 0; i < len; ++i) out.push_back(alphabet[below(26)]);
    return out;
  }

 private:
  std::uint64_t state_;
};

// Unique scratch directory removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::uint64_t counter = 0;
    dir_ = std::filesystem::temp_directory_path() /
           ("maskaudit_" + tag + "_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter++));
    std::filesystem::create_directories(dir_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(dir_, ec);
  }
  const std::filesystem::path& path() const { return dir_; }
  std::filesystem::path file(const std::string& name) const { return dir_ / name; }

 private:
  std::filesystem::path dir_;
};

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  out << content;
}

inline maskaudit::Template make_template(const std::string& id, const std::string& lang,
                                         const std::string& identity,
                                         maskaudit::Gender gender,
                                         const std::string& predicate) {
  maskaudit::Template t;
  t.template_id = id;
  t.language = lang;
  t.identity_term = identity;
  t.gender = gender;
  t.number = maskaudit::GrammaticalNumber::Plural;
  t.predicate = predicate;
  t.raw_text = identity + " " + predicate + " [BLANK]";
  return t;
}

inline maskaudit::CompletionSet make_set(const std::string& template_id,
                                         const std::string& model_id,
                                         const std::vector<std::string>& surfaces) {
  maskaudit::CompletionSet set;
  set.template_id = template_id;
  set.model_id = model_id;
  set.k_requested = static_cast<int>(surfaces.size());
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    set.completions.push_back(
        maskaudit::Completion{static_cast<int>(i) + 1, surfaces[i], std::nullopt});
  }
  return set;
}

}  // namespace testutil
