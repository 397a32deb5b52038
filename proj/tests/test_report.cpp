#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "maskaudit/report.hpp"
#include "maskaudit/util/csv.hpp"
#include "testutil.hpp"

using namespace maskaudit;
using testutil::TempDir;

namespace {

HonestScore make_score(const std::string& model, int k, double score) {
  HonestScore s;
  s.model_id = model;
  s.k = k;
  s.hurtful_count = static_cast<std::size_t>(score * 10000);
  s.total_count = 10000;
  s.score = score;
  return s;
}

AuditReport norbert_report() {
  AuditReport report;
  report.run_id = "run-1";
  report.created_at = "2024-01-01T00:00:00Z";
  report.model_order = {"NorBERT"};
  report.honest["NorBERT"] = {{1, make_score("NorBERT", 1, 0.0310)},
                              {5, make_score("NorBERT", 5, 0.0378)},
                              {10, make_score("NorBERT", 10, 0.0306)},
                              {20, make_score("NorBERT", 20, 0.0258)}};
  return report;
}

CategoryGenderMatrix toy_matrix(const std::string& model, int k) {
  CategoryGenderMatrix m;
  m.model_id = model;
  m.k = k;
  m.gender_totals = {2, 0};
  m.counts[analysis_category_index(HurtlexCategory::PR)][0] = 1;
  return m;
}

}  // namespace

TEST_CASE("honest table flags the per-row maximum") {
  TableArtifact table = emit_honest_table(norbert_report());
  auto rows = util::csv_parse(table.csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] == std::vector<std::string>{"model", "k=1", "k=5", "k=10", "k=20",
                                            "best_k"});
  CHECK(rows[1] == std::vector<std::string>{"NorBERT", "0.0310", "0.0378", "0.0306",
                                            "0.0258", "k=5"});
  CHECK(table.markdown.find("**0.0378**") != std::string::npos);
}

TEST_CASE("all-zero rows flag the smallest k") {
  AuditReport report;
  report.model_order = {"zero"};
  report.honest["zero"] = {{1, make_score("zero", 1, 0.0)},
                           {5, make_score("zero", 5, 0.0)}};
  TableArtifact table = emit_honest_table(report);
  auto rows = util::csv_parse(table.csv);
  CHECK(rows[1] == std::vector<std::string>{"zero", "0.0000", "0.0000", "k=1"});
}

TEST_CASE("models render in configuration order") {
  AuditReport report;
  report.model_order = {"bbb", "aaa"};
  report.honest["aaa"] = {{1, make_score("aaa", 1, 0.1)}};
  report.honest["bbb"] = {{1, make_score("bbb", 1, 0.2)}};
  auto rows = util::csv_parse(emit_honest_table(report).csv);
  REQUIRE(rows.size() == 3);
  CHECK(rows[1][0] == "bbb");
  CHECK(rows[2][0] == "aaa");
}

TEST_CASE("empty report is an error") {
  AuditReport report;
  CHECK_THROWS_AS(emit_honest_table(report), ReportError);
  CHECK_THROWS_AS(emit_category_heatmap(report), ReportError);
  CHECK_THROWS_AS(emit_toxicity_table(report), ReportError);
}

TEST_CASE("heatmap emits 26 data rows per model") {
  AuditReport report;
  report.model_order = {"m"};
  report.matrices["m"] = toy_matrix("m", 20);
  auto rows = util::csv_parse(emit_category_heatmap(report));
  REQUIRE(rows.size() == 27);  // header + 24 cells + 2 Avg
  CHECK(rows[0] == std::vector<std::string>{"model", "category", "gender", "percentage"});
  // First cell row is AN/F; PR/F carries the single hurtful completion.
  CHECK(rows[1] == std::vector<std::string>{"m", "AN", "F", "0.00"});
  bool found_pr = false;
  for (const auto& row : rows) {
    if (row.size() == 4 && row[1] == "PR" && row[2] == "F") {
      CHECK(row[3] == "50.00");
      found_pr = true;
    }
  }
  CHECK(found_pr);
  CHECK(rows[25] == std::vector<std::string>{"m", "Avg", "F", "4.17"});  // 50/12
  CHECK(rows[26] == std::vector<std::string>{"m", "Avg", "M", "0.00"});
}

TEST_CASE("zero matrix renders all zero cells") {
  AuditReport report;
  report.model_order = {"m"};
  CategoryGenderMatrix m;
  m.model_id = "m";
  m.k = 20;
  m.gender_totals = {10, 10};
  report.matrices["m"] = m;
  auto rows = util::csv_parse(emit_category_heatmap(report));
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][3] == "0.00");
}

TEST_CASE("mixed k matrices are rejected") {
  AuditReport report;
  report.model_order = {"a", "b"};
  report.matrices["a"] = toy_matrix("a", 20);
  report.matrices["b"] = toy_matrix("b", 10);
  try {
    emit_category_heatmap(report);
    FAIL("expected ReportError");
  } catch (const ReportError& e) {
    CHECK(e.code() == ReportErrorCode::MixedK);
  }
}

TEST_CASE("toxicity table renders published NorBERT row with its total") {
  AuditReport report;
  report.model_order = {"NorBERT"};
  report.toxicity["NorBERT"] = summary_from_percentages(2.77, 1.20);
  TableArtifact table = emit_toxicity_table(report);
  auto rows = util::csv_parse(table.csv);
  REQUIRE(rows.size() == 2);
  CHECK(rows[1] == std::vector<std::string>{"NorBERT", "2.77", "1.20", "3.97"});
}

TEST_CASE("zero toxicity summary renders zeros") {
  AuditReport report;
  report.model_order = {"m"};
  report.toxicity["m"] = GenderToxicitySummary{};
  auto rows = util::csv_parse(emit_toxicity_table(report).csv);
  CHECK(rows[1] == std::vector<std::string>{"m", "0.00", "0.00", "0.00"});
}

TEST_CASE("toxicity CSV round-trips its values") {
  AuditReport report;
  report.model_order = {"m1", "m2"};
  report.toxicity["m1"] = summary_from_percentages(2.77, 1.20);
  report.toxicity["m2"] = summary_from_percentages(0.05, 0.10);
  auto rows = util::csv_parse(emit_toxicity_table(report).csv);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double f = std::stod(rows[i][1]);
    double m = std::stod(rows[i][2]);
    double total = std::stod(rows[i][3]);
    const auto& s = report.toxicity.at(rows[i][0]);
    CHECK(f == doctest::Approx(s.pct_f).epsilon(0.005));
    CHECK(m == doctest::Approx(s.pct_m).epsilon(0.005));
    CHECK(total == doctest::Approx(s.total).epsilon(0.01));
  }
}

TEST_CASE("identical reports render byte-identical artifacts") {
  AuditReport report = norbert_report();
  report.matrices["NorBERT"] = toy_matrix("NorBERT", 20);
  report.toxicity["NorBERT"] = summary_from_percentages(2.77, 1.20);
  TableArtifact h1 = emit_honest_table(report);
  TableArtifact h2 = emit_honest_table(report);
  CHECK(h1.csv == h2.csv);
  CHECK(h1.markdown == h2.markdown);
  CHECK(emit_category_heatmap(report) == emit_category_heatmap(report));
  CHECK(emit_toxicity_table(report).csv == emit_toxicity_table(report).csv);
}

TEST_CASE("report JSON round-trips and re-renders identically") {
  TempDir dir("report_json");
  AuditReport report = norbert_report();
  report.matrices["NorBERT"] = toy_matrix("NorBERT", 20);
  report.toxicity["NorBERT"] = summary_from_percentages(2.77, 1.20);
  report.toxicity["NorBERT"].toxic_f = 3;
  report.toxicity["NorBERT"].record_count = 100;
  report.provenance.corpus_fingerprints["no"] = "abc123";
  report.provenance.config_snapshot["store"] = "store.jsonl";

  auto path = dir.file("report.json");
  write_report_json(path, report);
  AuditReport loaded = load_report_json(path);

  CHECK(loaded.run_id == report.run_id);
  CHECK(loaded.model_order == report.model_order);
  CHECK(loaded.provenance.corpus_fingerprints == report.provenance.corpus_fingerprints);
  CHECK(emit_honest_table(loaded).csv == emit_honest_table(report).csv);
  CHECK(emit_category_heatmap(loaded) == emit_category_heatmap(report));
  CHECK(emit_toxicity_table(loaded).csv == emit_toxicity_table(report).csv);
  CHECK(loaded.toxicity["NorBERT"].toxic_f == 3);
}

TEST_CASE("malformed report JSON is rejected") {
  TempDir dir("report_bad");
  testutil::write_file(dir.file("report.json"), "{\"run_id\": 1}");
  CHECK_THROWS_AS(load_report_json(dir.file("report.json")), ReportError);
}

TEST_CASE("models absent from a table land in the missing footer") {
  AuditReport report;
  report.model_order = {"present", "absent"};
  report.honest["present"] = {{1, make_score("present", 1, 0.5)}};
  TableArtifact table = emit_honest_table(report);
  auto rows = util::csv_parse(table.csv);
  CHECK(rows.back() == std::vector<std::string>{"missing", "absent"});
  CHECK(table.markdown.find("_missing: absent_") != std::string::npos);
}

TEST_CASE("csv quoting escapes embedded separators per RFC 4180") {
  AuditReport report;
  report.model_order = {"m,with \"quote\""};
  report.honest["m,with \"quote\""] = {{1, make_score("q", 1, 0.5)}};
  TableArtifact table = emit_honest_table(report);
  auto rows = util::csv_parse(table.csv);
  CHECK(rows[1][0] == "m,with \"quote\"");
}

TEST_CASE("file fingerprints are content-determined") {
  TempDir dir("report_fp");
  testutil::write_file(dir.file("a"), "content");
  testutil::write_file(dir.file("b"), "content");
  testutil::write_file(dir.file("c"), "different");
  CHECK(fingerprint_file(dir.file("a")) == fingerprint_file(dir.file("b")));
  CHECK(fingerprint_file(dir.file("a")) != fingerprint_file(dir.file("c")));
}

TEST_CASE("run ids derive deterministically from provenance") {
  Provenance p1;
  p1.corpus_fingerprints["no"] = "abc";
  p1.config_snapshot["store"] = "s";
  Provenance p2 = p1;
  CHECK(derive_run_id(p1) == derive_run_id(p2));
  p2.config_snapshot["store"] = "other";
  CHECK(derive_run_id(p1) != derive_run_id(p2));
}
