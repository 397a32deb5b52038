#include "maskaudit/corpus.hpp"

#include <fstream>
#include <sstream>
#include <unordered_set>

#include "maskaudit/util/text.hpp"

namespace maskaudit {

namespace {

const std::array<std::string_view, kHurtlexCategoryCount> kCategoryNames = {
    "AN", "ASF", "ASM", "CDS", "DDF", "DDP", "DMC", "IS", "OM",
    "OR", "PA",  "PR",  "PS",  "QAS", "RCI", "RE",  "SVP"};

constexpr std::string_view kTemplateHeader =
    "template_id\tlanguage\tidentity_term\tgender\tnumber\tpredicate\traw_text";

std::string read_file(const std::filesystem::path& path, CorpusErrorCode code) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw CorpusError(code, "cannot open file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

std::string row_context(std::string_view origin, std::size_t line_no) {
  return std::string(origin) + ":" + std::to_string(line_no);
}

}  // namespace

std::string_view to_string(Gender g) { return g == Gender::F ? "F" : "M"; }

std::string_view to_string(GrammaticalNumber n) {
  return n == GrammaticalNumber::Singular ? "singular" : "plural";
}

std::optional<Gender> parse_gender(std::string_view s) {
  if (s == "F") return Gender::F;
  if (s == "M") return Gender::M;
  return std::nullopt;
}

std::optional<GrammaticalNumber> parse_number(std::string_view s) {
  if (s == "singular") return GrammaticalNumber::Singular;
  if (s == "plural") return GrammaticalNumber::Plural;
  return std::nullopt;
}

std::string_view to_string(HurtlexCategory c) {
  return kCategoryNames[static_cast<std::size_t>(c)];
}

std::optional<HurtlexCategory> parse_category(std::string_view s) {
  for (std::size_t i = 0; i < kCategoryNames.size(); ++i) {
    if (kCategoryNames[i] == s) return static_cast<HurtlexCategory>(i);
  }
  return std::nullopt;
}

std::string_view to_string(HurtlexLevel l) {
  return l == HurtlexLevel::Conservative ? "conservative" : "inclusive";
}

std::optional<HurtlexLevel> parse_level(std::string_view s) {
  if (s == "conservative") return HurtlexLevel::Conservative;
  if (s == "inclusive") return HurtlexLevel::Inclusive;
  return std::nullopt;
}

void Lexicon::add(LexiconEntry entry) {
  entry.lemma = util::lowercase(entry.lemma);
  by_lemma_[entry.lemma].insert(entry.category);
  entries_.push_back(std::move(entry));
}

std::set<HurtlexCategory> Lexicon::lookup(std::string_view lemma) const {
  auto it = by_lemma_.find(std::string(lemma));
  if (it == by_lemma_.end()) return {};
  return it->second;
}

bool Lexicon::contains(std::string_view lemma) const {
  return by_lemma_.count(std::string(lemma)) > 0;
}

std::vector<Template> parse_templates_tsv(std::string_view text,
                                          std::string_view expected_language,
                                          std::string_view origin) {
  std::vector<Template> out;
  std::unordered_set<std::string> seen_ids;
  std::vector<std::string> lines = util::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  if (lines.empty()) {
    throw CorpusError(CorpusErrorCode::MalformedRow,
                      std::string(origin) + ": empty template file (missing header)");
  }
  std::string header = lines[0];
  if (!header.empty() && header.back() == '\r') header.pop_back();
  if (header != kTemplateHeader) {
    throw CorpusError(CorpusErrorCode::MalformedRow,
                      std::string(origin) + ": bad header row, expected '" +
                          std::string(kTemplateHeader) + "'");
  }
  for (std::size_t i = 1; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::size_t line_no = i + 1;
    std::vector<std::string> cols = util::split(line, '\t');
    if (cols.size() != 7) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) + ": expected 7 columns, got " +
                            std::to_string(cols.size()));
    }
    Template t;
    t.template_id = cols[0];
    t.language = cols[1];
    t.identity_term = cols[2];
    t.predicate = cols[5];
    t.raw_text = cols[6];

    if (t.template_id.empty()) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) + ": empty template_id");
    }
    if (t.identity_term.empty()) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) + ": empty identity_term");
    }
    auto gender = parse_gender(cols[3]);
    if (!gender) {
      throw CorpusError(CorpusErrorCode::BadGender,
                        row_context(origin, line_no) + ": gender must be F or M, got '" +
                            cols[3] + "'");
    }
    t.gender = *gender;
    auto number = parse_number(cols[4]);
    if (!number) {
      throw CorpusError(CorpusErrorCode::BadNumber,
                        row_context(origin, line_no) +
                            ": number must be singular or plural, got '" + cols[4] + "'");
    }
    t.number = *number;
    if (t.language != expected_language) {
      throw CorpusError(CorpusErrorCode::LanguageMismatch,
                        row_context(origin, line_no) + ": language '" + t.language +
                            "' does not match expected '" +
                            std::string(expected_language) + "'");
    }
    std::size_t blanks = util::count_occurrences(t.raw_text, kBlankMarker);
    if (blanks == 0) {
      throw CorpusError(CorpusErrorCode::MissingBlank,
                        row_context(origin, line_no) + ": raw_text has no " +
                            std::string(kBlankMarker) + " marker: '" + t.raw_text + "'");
    }
    if (blanks > 1) {
      throw CorpusError(CorpusErrorCode::MultipleBlanks,
                        row_context(origin, line_no) + ": raw_text has " +
                            std::to_string(blanks) + " " + std::string(kBlankMarker) +
                            " markers");
    }
    std::string expected_text = util::normalize_whitespace(
        t.identity_term + " " + t.predicate + " " + std::string(kBlankMarker));
    if (util::normalize_whitespace(t.raw_text) != expected_text) {
      throw CorpusError(CorpusErrorCode::TextMismatch,
                        row_context(origin, line_no) +
                            ": raw_text does not match identity_term + predicate + " +
                            std::string(kBlankMarker));
    }
    if (!seen_ids.insert(t.template_id).second) {
      throw CorpusError(CorpusErrorCode::DuplicateId,
                        row_context(origin, line_no) + ": duplicate template_id '" +
                            t.template_id + "'");
    }
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Template> load_templates(const std::filesystem::path& path,
                                     std::string_view expected_language) {
  std::string text = read_file(path, CorpusErrorCode::IoError);
  return parse_templates_tsv(text, expected_language, path.string());
}

std::string templates_to_tsv(const std::vector<Template>& templates) {
  std::string out(kTemplateHeader);
  out.push_back('\n');
  for (const Template& t : templates) {
    out += t.template_id;
    out.push_back('\t');
    out += t.language;
    out.push_back('\t');
    out += t.identity_term;
    out.push_back('\t');
    out += to_string(t.gender);
    out.push_back('\t');
    out += to_string(t.number);
    out.push_back('\t');
    out += t.predicate;
    out.push_back('\t');
    out += t.raw_text;
    out.push_back('\n');
  }
  return out;
}

void write_templates(const std::filesystem::path& path,
                     const std::vector<Template>& templates) {
  std::ofstream outf(path, std::ios::binary | std::ios::trunc);
  if (!outf) {
    throw CorpusError(CorpusErrorCode::IoError, "cannot write file: " + path.string());
  }
  outf << templates_to_tsv(templates);
}

Lexicon parse_lexicon_tsv(std::string_view text,
                          std::optional<HurtlexLevel> level_filter,
                          std::string language, std::string_view origin,
                          LexiconLoadStats* stats) {
  Lexicon lex(std::move(language));
  LexiconLoadStats local;
  std::vector<std::string> lines = util::split(text, '\n');
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = lines[i];
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> cols = util::split(line, '\t');
    if (i == 0 && !cols.empty() && util::lowercase(cols[0]) == "lemma") continue;
    const std::size_t line_no = i + 1;
    if (cols.size() < 3) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) + ": expected at least 3 columns, got " +
                            std::to_string(cols.size()));
    }
    ++local.rows_read;
    std::string lemma = util::trim(cols[0]);
    if (lemma.empty()) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) + ": empty lemma");
    }
    auto category = parse_category(util::trim(cols[1]));
    if (!category) {
      throw CorpusError(CorpusErrorCode::UnknownCategory,
                        row_context(origin, line_no) + ": unknown HurtLex category '" +
                            cols[1] + "'");
    }
    auto level = parse_level(util::trim(cols[2]));
    if (!level) {
      throw CorpusError(CorpusErrorCode::MalformedRow,
                        row_context(origin, line_no) +
                            ": level must be conservative or inclusive, got '" + cols[2] +
                            "'");
    }
    if (level_filter && *level != *level_filter) continue;
    lex.add(LexiconEntry{std::move(lemma), *category, *level});
    ++local.entries_kept;
  }
  local.empty = lex.empty();
  if (stats != nullptr) *stats = local;
  return lex;
}

Lexicon load_lexicon(const std::filesystem::path& path,
                     std::optional<HurtlexLevel> level_filter, std::string language,
                     LexiconLoadStats* stats) {
  std::string text = read_file(path, CorpusErrorCode::IoError);
  return parse_lexicon_tsv(text, level_filter, std::move(language), path.string(), stats);
}

std::string render_prompt(const Template& tmpl, std::string_view mask_token) {
  if (mask_token.empty()) {
    throw CorpusError(CorpusErrorCode::MalformedRow, "mask token must be non-empty");
  }
  return util::replace_first(tmpl.raw_text, kBlankMarker, mask_token);
}

}  // namespace maskaudit
