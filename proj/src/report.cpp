#include "maskaudit/report.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include "maskaudit/util/csv.hpp"
#include "maskaudit/util/hash.hpp"
#include "maskaudit/util/text.hpp"

namespace maskaudit {

namespace {

using nlohmann::json;

std::vector<std::string> missing_models(const AuditReport& report,
                                        const std::set<std::string>& present) {
  std::vector<std::string> missing;
  for (const std::string& m : report.model_order) {
    if (present.count(m) == 0) missing.push_back(m);
  }
  return missing;
}

void append_missing_footer_csv(std::string& csv, const std::vector<std::string>& missing) {
  for (const std::string& m : missing) {
    csv += util::csv_row({"missing", m});
  }
}

void append_missing_footer_md(std::string& md, const std::vector<std::string>& missing) {
  if (missing.empty()) return;
  md += "\n_missing:";
  for (std::size_t i = 0; i < missing.size(); ++i) {
    md += i == 0 ? " " : ", ";
    md += missing[i];
  }
  md += "_\n";
}

}  // namespace

TableArtifact emit_honest_table(const AuditReport& report) {
  if (report.honest.empty()) {
    throw ReportError(ReportErrorCode::EmptyReport, "no HONEST scores to emit");
  }
  std::set<int> ks;
  std::set<std::string> present;
  for (const auto& [model, per_k] : report.honest) {
    present.insert(model);
    for (const auto& [k, score] : per_k) ks.insert(k);
  }

  std::vector<std::string> header{"model"};
  for (int k : ks) header.push_back("k=" + std::to_string(k));
  header.push_back("best_k");

  TableArtifact out;
  out.csv = util::csv_row(header);
  out.markdown = "|";
  for (const std::string& h : header) out.markdown += " " + h + " |";
  out.markdown += "\n|";
  for (std::size_t i = 0; i < header.size(); ++i) out.markdown += " --- |";
  out.markdown += "\n";

  for (const std::string& model : report.model_order) {
    auto it = report.honest.find(model);
    if (it == report.honest.end()) continue;
    const auto& per_k = it->second;
    // Per-row maximum; ties break to the smallest k.
    int best_k = 0;
    double best = -1.0;
    for (int k : ks) {
      auto kv = per_k.find(k);
      if (kv == per_k.end()) continue;
      if (kv->second.score > best) {
        best = kv->second.score;
        best_k = k;
      }
    }
    std::vector<std::string> row{model};
    std::string md_row = "| " + model + " |";
    for (int k : ks) {
      auto kv = per_k.find(k);
      if (kv == per_k.end()) {
        row.push_back("");
        md_row += "  |";
        continue;
      }
      std::string value = util::fixed(kv->second.score, 4);
      row.push_back(value);
      md_row += k == best_k ? " **" + value + "** |" : " " + value + " |";
    }
    row.push_back("k=" + std::to_string(best_k));
    md_row += " k=" + std::to_string(best_k) + " |";
    out.csv += util::csv_row(row);
    out.markdown += md_row + "\n";
  }

  auto missing = missing_models(report, present);
  append_missing_footer_csv(out.csv, missing);
  append_missing_footer_md(out.markdown, missing);
  return out;
}

std::string emit_category_heatmap(const AuditReport& report) {
  if (report.matrices.empty()) {
    throw ReportError(ReportErrorCode::EmptyReport, "no category matrices to emit");
  }
  int shared_k = report.matrices.begin()->second.k;
  std::set<std::string> present;
  for (const auto& [model, matrix] : report.matrices) {
    present.insert(model);
    if (matrix.k != shared_k) {
      throw ReportError(ReportErrorCode::MixedK,
                        "matrices computed at different k: " + std::to_string(shared_k) +
                            " vs " + std::to_string(matrix.k) + " (" + model + ")");
    }
  }

  std::string csv = util::csv_row({"model", "category", "gender", "percentage"});
  for (const std::string& model : report.model_order) {
    auto it = report.matrices.find(model);
    if (it == report.matrices.end()) continue;
    const CategoryGenderMatrix& m = it->second;
    for (HurtlexCategory c : kAnalysisCategories) {
      for (Gender g : {Gender::F, Gender::M}) {
        csv += util::csv_row({model, std::string(to_string(c)), std::string(to_string(g)),
                              util::fixed(m.cell(c, g), 2)});
      }
    }
    for (Gender g : {Gender::F, Gender::M}) {
      csv += util::csv_row(
          {model, "Avg", std::string(to_string(g)), util::fixed(m.avg(g), 2)});
    }
  }
  append_missing_footer_csv(csv, missing_models(report, present));
  return csv;
}

TableArtifact emit_toxicity_table(const AuditReport& report) {
  if (report.toxicity.empty()) {
    throw ReportError(ReportErrorCode::EmptyReport, "no toxicity summaries to emit");
  }
  TableArtifact out;
  out.csv = util::csv_row({"model", "F", "M", "Total"});
  out.markdown = "| model | F | M | Total |\n| --- | --- | --- | --- |\n";
  std::set<std::string> present;
  for (const auto& [model, summary] : report.toxicity) present.insert(model);
  for (const std::string& model : report.model_order) {
    auto it = report.toxicity.find(model);
    if (it == report.toxicity.end()) continue;
    const GenderToxicitySummary& s = it->second;
    std::string f = util::fixed(s.pct_f, 2);
    std::string m = util::fixed(s.pct_m, 2);
    std::string total = util::fixed(s.total, 2);
    out.csv += util::csv_row({model, f, m, total});
    out.markdown += "| " + model + " | " + f + " | " + m + " | " + total + " |\n";
  }
  auto missing = missing_models(report, present);
  append_missing_footer_csv(out.csv, missing);
  append_missing_footer_md(out.markdown, missing);
  return out;
}

namespace {

json matrix_to_json(const CategoryGenderMatrix& m) {
  json counts;
  json cells;
  for (std::size_t i = 0; i < kAnalysisCategories.size(); ++i) {
    std::string name(to_string(kAnalysisCategories[i]));
    counts[name] = {{"F", m.counts[i][0]}, {"M", m.counts[i][1]}};
    cells[name] = {{"F", m.cell(kAnalysisCategories[i], Gender::F)},
                   {"M", m.cell(kAnalysisCategories[i], Gender::M)}};
  }
  json j;
  j["model_id"] = m.model_id;
  j["k"] = m.k;
  j["counts"] = std::move(counts);
  j["cells"] = std::move(cells);
  j["other_counts"] = {{"F", m.other_counts[0]}, {"M", m.other_counts[1]}};
  j["gender_totals"] = {{"F", m.gender_totals[0]}, {"M", m.gender_totals[1]}};
  j["avg"] = {{"F", m.avg(Gender::F)}, {"M", m.avg(Gender::M)}};
  j["other_pct"] = {{"F", m.other_pct(Gender::F)}, {"M", m.other_pct(Gender::M)}};
  return j;
}

CategoryGenderMatrix matrix_from_json(const json& j) {
  CategoryGenderMatrix m;
  m.model_id = j.at("model_id").get<std::string>();
  m.k = j.at("k").get<int>();
  for (std::size_t i = 0; i < kAnalysisCategories.size(); ++i) {
    std::string name(to_string(kAnalysisCategories[i]));
    m.counts[i][0] = j.at("counts").at(name).at("F").get<std::size_t>();
    m.counts[i][1] = j.at("counts").at(name).at("M").get<std::size_t>();
  }
  m.other_counts[0] = j.at("other_counts").at("F").get<std::size_t>();
  m.other_counts[1] = j.at("other_counts").at("M").get<std::size_t>();
  m.gender_totals[0] = j.at("gender_totals").at("F").get<std::size_t>();
  m.gender_totals[1] = j.at("gender_totals").at("M").get<std::size_t>();
  return m;
}

}  // namespace

json report_to_json(const AuditReport& report) {
  json j;
  j["run_id"] = report.run_id;
  j["created_at"] = report.created_at;
  j["model_order"] = report.model_order;

  json honest = json::object();
  for (const auto& [model, per_k] : report.honest) {
    json per_k_json = json::object();
    for (const auto& [k, score] : per_k) {
      per_k_json[std::to_string(k)] = {{"hurtful_count", score.hurtful_count},
                                       {"total_count", score.total_count},
                                       {"score", score.score}};
    }
    honest[model] = std::move(per_k_json);
  }
  j["honest"] = std::move(honest);

  json matrices = json::object();
  for (const auto& [model, matrix] : report.matrices) {
    matrices[model] = matrix_to_json(matrix);
  }
  j["category_matrices"] = std::move(matrices);

  json toxicity = json::object();
  for (const auto& [model, s] : report.toxicity) {
    toxicity[model] = {{"pct_f", s.pct_f},       {"pct_m", s.pct_m},
                       {"total", s.total},       {"toxic_f", s.toxic_f},
                       {"toxic_m", s.toxic_m},   {"records", s.record_count},
                       {"skipped", s.skipped}};
  }
  j["toxicity"] = std::move(toxicity);

  j["provenance"] = {{"corpus", report.provenance.corpus_fingerprints},
                     {"lexicon", report.provenance.lexicon_fingerprints},
                     {"config", report.provenance.config_snapshot}};
  return j;
}

AuditReport report_from_json(const json& j) {
  try {
    AuditReport report;
    report.run_id = j.at("run_id").get<std::string>();
    report.created_at = j.at("created_at").get<std::string>();
    report.model_order = j.at("model_order").get<std::vector<std::string>>();
    for (const auto& [model, per_k_json] : j.at("honest").items()) {
      std::map<int, HonestScore> per_k;
      for (const auto& [k_str, score_json] : per_k_json.items()) {
        HonestScore s;
        s.model_id = model;
        s.k = std::stoi(k_str);
        s.hurtful_count = score_json.at("hurtful_count").get<std::size_t>();
        s.total_count = score_json.at("total_count").get<std::size_t>();
        s.score = score_json.at("score").get<double>();
        per_k[s.k] = std::move(s);
      }
      report.honest[model] = std::move(per_k);
    }
    for (const auto& [model, mj] : j.at("category_matrices").items()) {
      report.matrices[model] = matrix_from_json(mj);
    }
    for (const auto& [model, tj] : j.at("toxicity").items()) {
      GenderToxicitySummary s;
      s.pct_f = tj.at("pct_f").get<double>();
      s.pct_m = tj.at("pct_m").get<double>();
      s.total = tj.at("total").get<double>();
      s.toxic_f = tj.at("toxic_f").get<std::size_t>();
      s.toxic_m = tj.at("toxic_m").get<std::size_t>();
      s.record_count = tj.at("records").get<std::size_t>();
      s.skipped = tj.at("skipped").get<std::size_t>();
      report.toxicity[model] = std::move(s);
    }
    const json& prov = j.at("provenance");
    report.provenance.corpus_fingerprints =
        prov.at("corpus").get<std::map<std::string, std::string>>();
    report.provenance.lexicon_fingerprints =
        prov.at("lexicon").get<std::map<std::string, std::string>>();
    report.provenance.config_snapshot =
        prov.at("config").get<std::map<std::string, std::string>>();
    return report;
  } catch (const json::exception& e) {
    throw ReportError(ReportErrorCode::MalformedReport,
                      std::string("malformed report JSON: ") + e.what());
  }
}

void write_report_json(const std::filesystem::path& path, const AuditReport& report) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    throw ReportError(ReportErrorCode::IoError, "cannot write report: " + path.string());
  }
  out << report_to_json(report).dump(2) << '\n';
}

AuditReport load_report_json(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ReportError(ReportErrorCode::IoError, "cannot open report: " + path.string());
  }
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) {
    throw ReportError(ReportErrorCode::MalformedReport,
                      "report is not valid JSON: " + path.string());
  }
  return report_from_json(j);
}

std::string fingerprint_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ReportError(ReportErrorCode::IoError,
                      "cannot fingerprint file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return util::hex64(util::fnv1a64(buf.str()));
}

std::string derive_run_id(const Provenance& provenance) {
  json j = {{"corpus", provenance.corpus_fingerprints},
            {"lexicon", provenance.lexicon_fingerprints},
            {"config", provenance.config_snapshot}};
  return util::hex64(util::fnv1a64(j.dump()));
}

}  // namespace maskaudit
