#pragma once

#include <array>
#include <filesystem>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "maskaudit/errors.hpp"

namespace maskaudit {

// Literal marker for the completion slot in template text.
inline constexpr std::string_view kBlankMarker = "[BLANK]";

enum class Gender { F, M };
enum class GrammaticalNumber { Singular, Plural };

std::string_view to_string(Gender g);
std::string_view to_string(GrammaticalNumber n);
std::optional<Gender> parse_gender(std::string_view s);
std::optional<GrammaticalNumber> parse_number(std::string_view s);

// One gendered probe sentence with a blank slot.
// raw_text contains exactly one [BLANK] and equals
// "<identity_term> <predicate> [BLANK]" up to whitespace normalization.
struct Template {
  std::string template_id;
  std::string language;  // ISO-639-1
  std::string identity_term;
  Gender gender = Gender::F;
  GrammaticalNumber number = GrammaticalNumber::Singular;
  std::string predicate;
  std::string raw_text;

  bool operator==(const Template&) const = default;
};

// The 17 HurtLex category codes.
enum class HurtlexCategory {
  AN,   // animals
  ASF,  // female genitalia
  ASM,  // male genitalia
  CDS,  // derogatory words
  DDF,  // physical disabilities and diversity
  DDP,  // cognitive disabilities and diversity
  DMC,  // moral and behavioral defects
  IS,   // social and economic disadvantage
  OM,   // homosexuality
  OR,   // plants
  PA,   // professions and occupations
  PR,   // prostitution
  PS,   // negative stereotypes, ethnic slurs
  QAS,  // potential negative connotations
  RCI,  // locations and demonyms
  RE,   // felonies, crime and immoral behavior
  SVP,  // the seven deadly sins
};

inline constexpr int kHurtlexCategoryCount = 17;

std::string_view to_string(HurtlexCategory c);
std::optional<HurtlexCategory> parse_category(std::string_view s);

enum class HurtlexLevel { Conservative, Inclusive };

std::string_view to_string(HurtlexLevel l);
std::optional<HurtlexLevel> parse_level(std::string_view s);

struct LexiconEntry {
  std::string lemma;  // canonical lowercase form
  HurtlexCategory category = HurtlexCategory::AN;
  HurtlexLevel level = HurtlexLevel::Conservative;

  bool operator==(const LexiconEntry&) const = default;
};

// Offensive-word lemmas indexed by lemma. A lemma may carry several
// categories; lookup is total and returns an empty set for unknown lemmas.
class Lexicon {
 public:
  Lexicon() = default;
  explicit Lexicon(std::string language) : language_(std::move(language)) {}

  void add(LexiconEntry entry);

  std::set<HurtlexCategory> lookup(std::string_view lemma) const;
  bool contains(std::string_view lemma) const;

  std::size_t size() const { return entries_.size(); }
  bool empty() const { return entries_.empty(); }
  const std::string& language() const { return language_; }
  const std::vector<LexiconEntry>& entries() const { return entries_; }

 private:
  std::string language_;
  std::vector<LexiconEntry> entries_;
  std::unordered_map<std::string, std::set<HurtlexCategory>> by_lemma_;
};

struct LexiconLoadStats {
  std::size_t rows_read = 0;
  std::size_t entries_kept = 0;
  bool empty = false;  // zero entries after filtering; scoring stays legal
};

// Template TSV: header row
//   template_id  language  identity_term  gender  number  predicate  raw_text
// tab-separated, UTF-8. Rows are returned in file order.
std::vector<Template> load_templates(const std::filesystem::path& path,
                                     std::string_view expected_language);
std::vector<Template> parse_templates_tsv(std::string_view text,
                                          std::string_view expected_language,
                                          std::string_view origin);
std::string templates_to_tsv(const std::vector<Template>& templates);
void write_templates(const std::filesystem::path& path,
                     const std::vector<Template>& templates);

// HurtLex TSV: columns lemma, category, level; extra columns ignored;
// an optional header row starting with "lemma" is skipped.
Lexicon load_lexicon(const std::filesystem::path& path,
                     std::optional<HurtlexLevel> level_filter = std::nullopt,
                     std::string language = {}, LexiconLoadStats* stats = nullptr);
Lexicon parse_lexicon_tsv(std::string_view text,
                          std::optional<HurtlexLevel> level_filter,
                          std::string language, std::string_view origin,
                          LexiconLoadStats* stats = nullptr);

// raw_text with [BLANK] replaced by mask_token.
std::string render_prompt(const Template& tmpl, std::string_view mask_token);

}  // namespace maskaudit
