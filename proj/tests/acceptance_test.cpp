// Acceptance suite: one line per criterion, nonzero exit when any required
// criterion fails. Criterion 8 is network-gated and advisory; it is skipped
// unless the MASKAUDIT_LIVE_DA_* environment variables are set.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "fixturegen.hpp"
#include "maskaudit/commands.hpp"
#include "maskaudit/config.hpp"
#include "maskaudit/honest.hpp"
#include "maskaudit/report.hpp"
#include "maskaudit/toxicity.hpp"
#include "maskaudit/util/csv.hpp"
#include "oracle.hpp"
#include "replayfix.hpp"
#include "testutil.hpp"

using namespace maskaudit;
using testutil::Rng;
using testutil::TempDir;

namespace {

int g_failures = 0;

void report_line(const std::string& name, bool pass, const std::string& detail) {
  std::cout << (pass ? "[PASS] " : "[FAIL] ") << name;
  if (!detail.empty()) std::cout << " -- " << detail;
  std::cout << "\n";
  if (!pass) ++g_failures;
}

double elapsed_seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// criterion 1: honest_score and category_gender_matrix against the
// brute-force linear-scan oracle on 200 randomized fixtures.
void criterion_oracle_equivalence() {
  auto start = std::chrono::steady_clock::now();
  Rng rng(20240601);
  std::size_t checked = 0;
  for (int iter = 0; iter < 200; ++iter) {
    auto fx = fixturegen::random_fixture(rng, 50, 20, 100);
    int depth = static_cast<int>(fx.sets.front().completions.size());
    int k = rng.range(1, depth);

    HonestScore score = honest_score(fx.sets, fx.lexicon, k);
    auto brute = oracle::brute_honest(fx.sets, fx.lexicon, k);
    if (score.hurtful_count != brute.hurtful || score.total_count != brute.total ||
        std::abs(score.score - brute.score) > 1e-12) {
      report_line("criterion 1: oracle equivalence", false,
                  "mismatch at fixture " + std::to_string(iter));
      return;
    }
    CategoryGenderMatrix m = category_gender_matrix(fx.sets, fx.templates, fx.lexicon, k);
    auto bm = oracle::brute_matrix(fx.sets, fx.templates, fx.lexicon, k);
    if (m.counts != bm.counts || m.other_counts != bm.other_counts ||
        m.gender_totals != bm.totals) {
      report_line("criterion 1: oracle equivalence", false,
                  "matrix mismatch at fixture " + std::to_string(iter));
      return;
    }
    ++checked;
  }
  double secs = elapsed_seconds(start);
  bool in_time = secs < 10.0;
  std::ostringstream detail;
  detail << checked << " fixtures, " << secs << " s";
  report_line("criterion 1: oracle equivalence", checked == 200 && in_time, detail.str());
}

// criterion 2: score(A u B) equals the size-weighted mean of the split scores.
void criterion_decomposition() {
  Rng rng(20240602);
  for (int iter = 0; iter < 100; ++iter) {
    auto fx = fixturegen::random_fixture(rng, 40, 12, 80);
    if (fx.sets.size() < 2) {
      fx.sets.push_back(fx.sets.front());
      fx.sets.back().template_id = fx.templates.front().template_id;
    }
    int k = static_cast<int>(fx.sets.front().completions.size());
    std::size_t cut = 1 + rng.below(fx.sets.size() - 1);
    std::vector<CompletionSet> a(fx.sets.begin(),
                                 fx.sets.begin() + static_cast<std::ptrdiff_t>(cut));
    std::vector<CompletionSet> b(fx.sets.begin() + static_cast<std::ptrdiff_t>(cut),
                                 fx.sets.end());
    double sa = honest_score(a, fx.lexicon, k).score;
    double sb = honest_score(b, fx.lexicon, k).score;
    double s_union = honest_score(fx.sets, fx.lexicon, k).score;
    double weighted =
        (static_cast<double>(a.size()) * sa + static_cast<double>(b.size()) * sb) /
        static_cast<double>(fx.sets.size());
    if (std::abs(s_union - weighted) > 1e-12) {
      report_line("criterion 2: decomposition law", false,
                  "split " + std::to_string(iter) + " deviates");
      return;
    }
  }
  report_line("criterion 2: decomposition law", true, "100 random splits within 1e-12");
}

// criterion 3: published per-category and toxicity table values through the
// aggregation and rendering paths.
void criterion_published_aggregation() {
  bool pass = true;
  std::ostringstream detail;
  // +-0.01 is a decimal tolerance; allow for binary representation of 0.01.
  const double tol = 0.01 + 1e-9;

  // Published NorBERT per-category column (AN..SVP order).
  std::array<double, 12> norbert_f = {6.67, 7.02, 0.35, 12.98, 1.75, 0,
                                      1.75, 14.04, 0,    0,     6.67, 0};
  std::array<double, 12> norbert_m = {6.67, 0.83, 0.56, 18.61, 2.78, 0,
                                      3.06, 12.78, 0,    0.28,  3.89, 0};
  double avg_f = category_average(norbert_f);
  double avg_m = category_average(norbert_m);
  if (std::abs(avg_f - 4.26) > tol) {
    pass = false;
    detail << "avg(F)=" << avg_f << " not within 0.01 of 4.26; ";
  }
  if (std::abs(avg_m - 4.28) > tol) {
    pass = false;
    detail << "avg(M)=" << avg_m << " not within 0.01 of 4.28 "
           << "(the printed M cells sum to 49.46, mean 4.12; the published Avg "
              "row is inconsistent with the published cells for this column); ";
  }

  // Published toxicity rows: F, M, printed Total.
  struct Row {
    const char* model;
    double f, m, total;
  };
  const std::vector<Row> table5 = {
      {"NorBERT", 2.77, 1.20, 3.97},        {"NorBERT2", 2.63, 0.96, 3.60},
      {"NB-BERT", 1.93, 0.51, 2.45},        {"NB-BERT_Large", 3.07, 0.57, 3.65},
      {"SwedishBERT", 2.21, 0.51, 2.72},    {"SwedishBERT2", 1.10, 0.05, 1.15},
      {"SwedishMegatron", 2.12, 0.61, 2.73}, {"DanishBERT", 3.23, 0.74, 3.97},
      {"DanishRoBERTa", 1.88, 0.45, 2.34}};
  AuditReport report;
  for (const Row& row : table5) {
    report.model_order.push_back(row.model);
    report.toxicity[row.model] = summary_from_percentages(row.f, row.m);
  }
  auto rows = util::csv_parse(emit_toxicity_table(report).csv);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    double rendered_total = std::stod(rows[i][3]);
    double printed_total = table5[i - 1].total;
    if (std::abs(rendered_total - printed_total) > tol) {
      pass = false;
      detail << rows[i][0] << " total " << rendered_total << " vs printed "
             << printed_total << "; ";
    }
  }
  report_line("criterion 3: published-data aggregation", pass,
              pass ? "category averages and all 9 toxicity totals reproduced"
                   : detail.str());
}

// criterion 4: strictly-above-threshold classification at the boundary.
void criterion_threshold_boundary() {
  class OneScoreClient : public ToxicityClient {
   public:
    std::map<std::string, double> score(const std::string&, const std::string&,
                                        const std::vector<std::string>& attrs) override {
      std::map<std::string, double> out;
      for (const auto& a : attrs) out[a] = value;
      return out;
    }
    bool supports_language(std::string_view) const override { return true; }
    double value = 0.0;
  };
  OneScoreClient client;
  ToxicityConfig config;
  config.bridge_mode = BridgeMode::Direct;
  bool pass = true;
  std::ostringstream detail;
  for (auto [value, expected] : std::vector<std::pair<double, bool>>{
           {0.4999, false}, {0.5000, false}, {0.5001, true}}) {
    client.value = value;
    ToxicityRecord record =
        bridge_and_score(nullptr, client, "t", "m", "sentence", "sv", config);
    if (record.toxic != expected) {
      pass = false;
      detail << value << " classified " << (record.toxic ? "toxic" : "non-toxic") << "; ";
    }
  }
  report_line("criterion 4: threshold boundary", pass,
              pass ? "0.4999/0.5000 non-toxic, 0.5001 toxic" : detail.str());
}

// criterion 5: the agreement procedure on the toy fixture and on a replayed
// population with 104 disagreements out of 3291 sentence pairs.
void criterion_agreement() {
  bool pass = true;
  std::ostringstream detail;

  AgreementReport toy = translation_agreement(
      {{true, true}, {true, false}, {false, false}, {false, false}});
  if (std::abs(toy.agreement_rate - 0.75) > 1e-12 || toy.disagreements.size() != 1) {
    pass = false;
    detail << "toy fixture rate " << toy.agreement_rate << " with "
           << toy.disagreements.size() << " disagreements; ";
  }

  // Replayed population: 3291 Swedish sentences; the bridged path flips the
  // flag for the first 104.
  const int total = 3291;
  const int disagreements = 104;
  TempDir dir("acceptance_agreement");
  std::vector<Template> templates;
  CompletionStore store = CompletionStore::open(dir.file("store.jsonl"));
  ReplayFixtureWriter translate_writer(dir.file("translate.jsonl"));
  ReplayFixtureWriter toxicity_writer(dir.file("toxicity.jsonl"));
  ToxicityConfig config;
  for (int i = 0; i < total; ++i) {
    std::string id = "sv-" + std::to_string(i);
    Template t = testutil::make_template(id, "sv", "Kvinnorna", Gender::F,
                                         "sägs vara nr " + std::to_string(i));
    templates.push_back(t);
    store.append(StoreRecord{"sv-model", id, 1, false,
                             {Completion{1, "ordet", 0.9}},
                             "1970-01-01T00:00:00Z"});
    std::string sentence = *fill_sentence(t, std::string_view("ordet"));
    std::string translated = "EN: " + sentence;
    nlohmann::json translation_response;
    translation_response["text"] = translated;
    translate_writer.add(canonical_translation_request(sentence, "sv", "en"),
                         translation_response.dump());
    nlohmann::json direct_response;
    nlohmann::json bridged_response;
    for (const auto& attr : config.attributes) {
      direct_response[attr] = 0.9;                          // toxic directly
      bridged_response[attr] = i < disagreements ? 0.1 : 0.9;  // flipped for 104
    }
    toxicity_writer.add(canonical_toxicity_request(sentence, "sv", config.attributes),
                        direct_response.dump());
    toxicity_writer.add(canonical_toxicity_request(translated, "en", config.attributes),
                        bridged_response.dump());
  }
  ReplayTranslationClient translator(dir.file("translate.jsonl"));
  ReplayToxicityClient scorer(dir.file("toxicity.jsonl"), {"sv", "en"});
  ModelSpec spec{"sv-model", "sv", "[MASK]", "replay:unused"};
  AgreementReport replayed =
      validate_translation(spec, templates, store, 1, translator, scorer, "sv", config);
  if (replayed.total != static_cast<std::size_t>(total) ||
      replayed.disagreements.size() != static_cast<std::size_t>(disagreements) ||
      std::abs(replayed.agreement_rate - 0.9684) > 0.0001) {
    pass = false;
    detail << "replayed rate " << replayed.agreement_rate << " with "
           << replayed.disagreements.size() << "/" << replayed.total << "; ";
  }
  std::ostringstream ok;
  ok << "toy rate 0.75 (1 disagreement); replayed rate " << replayed.agreement_rate
     << " (104/3291)";
  report_line("criterion 5: agreement procedure", pass, pass ? ok.str() : detail.str());
}

struct PipelineArtifacts {
  std::string honest_csv, honest_md, heatmap_csv, toxicity_csv, toxicity_md, report_json,
      store;
};

std::string make_750_corpus() {
  std::vector<Template> templates;
  for (int i = 0; i < 750; ++i) {
    bool female = i % 2 == 0;
    Template t = testutil::make_template(
        "no-" + std::to_string(1000 + i), "no", female ? "Kvinnene" : "Mennene",
        female ? Gender::F : Gender::M, "omtales som nr " + std::to_string(i));
    t.number = GrammaticalNumber::Plural;
    templates.push_back(t);
  }
  return templates_to_tsv(templates);
}

// 1,000 lemmas: 600 drawn from the stub vocabulary actually produced for this
// corpus (so scores are non-zero) plus 400 fillers.
std::string make_1000_lexicon(const CompletionStore& store) {
  std::vector<std::string> lemmas;
  std::set<std::string> seen;
  for (const StoreRecord& record : store.records()) {
    for (const Completion& c : record.completions) {
      auto nc = normalize_completion(c.surface);
      if (!nc.is_word || seen.count(nc.normalized) > 0) continue;
      if (seen.size() % 7 == 0) {
        if (lemmas.size() < 600) lemmas.push_back(nc.normalized);
      }
      seen.insert(nc.normalized);
    }
  }
  for (int i = 0; lemmas.size() < 1000; ++i) {
    lemmas.push_back("fyllord" + std::to_string(i));
  }
  static const char* kCats[] = {"AN", "ASF", "ASM", "CDS", "DMC", "OM",
                                "OR", "PR",  "PS",  "QAS", "RE",  "SVP", "PA"};
  std::string tsv = "lemma\tcategory\tlevel\n";
  for (std::size_t i = 0; i < lemmas.size(); ++i) {
    tsv += lemmas[i];
    tsv += '\t';
    tsv += kCats[i % 13];
    tsv += '\t';
    tsv += i % 2 == 0 ? "conservative" : "inclusive";
    tsv += '\n';
  }
  return tsv;
}

PipelineArtifacts run_offline_pipeline(const TempDir& dir, const std::string& corpus_tsv,
                                       const std::string& lexicon_tsv,
                                       const std::string& translate_fixture,
                                       const std::string& toxicity_fixture) {
  testutil::write_file(dir.file("corpus_no.tsv"), corpus_tsv);
  testutil::write_file(dir.file("lexicon_no.tsv"), lexicon_tsv);
  testutil::write_file(dir.file("translate_fixture.jsonl"), translate_fixture);
  testutil::write_file(dir.file("toxicity_fixture.jsonl"), toxicity_fixture);
  std::string config_text =
      "languages = no\n"
      "store = store.jsonl\n"
      "out = out\n"
      "k = 1,5,10,20\n"
      "parallelism = 4\n"
      "offline = true\n"
      "corpus.no = corpus_no.tsv\n"
      "lexicon.no = lexicon_no.tsv\n"
      "model.offline-bert.language = no\n"
      "model.offline-bert.mask_token = [MASK]\n"
      "model.offline-bert.endpoint = stub:2024\n"
      "toxicity.endpoint = replay:toxicity_fixture.jsonl\n"
      "translate.endpoint = replay:translate_fixture.jsonl\n"
      "toxicity.k = 1\n";
  testutil::write_file(dir.file("audit.conf"), config_text);
  RunConfig config = load_run_config(dir.file("audit.conf"));
  std::ostringstream log;
  if (cmd_probe(config, {}, log) != 0) throw AuditError("probe failed:\n" + log.str());
  if (cmd_score(config, {}, log) != 0) throw AuditError("score failed:\n" + log.str());
  if (cmd_score_toxicity(config, {}, log) != 0) {
    throw AuditError("score-toxicity failed:\n" + log.str());
  }
  PipelineArtifacts a;
  a.honest_csv = testutil::read_file(dir.file("out/honest.csv"));
  a.honest_md = testutil::read_file(dir.file("out/honest.md"));
  a.heatmap_csv = testutil::read_file(dir.file("out/heatmap.csv"));
  a.toxicity_csv = testutil::read_file(dir.file("out/toxicity.csv"));
  a.toxicity_md = testutil::read_file(dir.file("out/toxicity.md"));
  a.report_json = testutil::read_file(dir.file("out/report.json"));
  a.store = testutil::read_file(dir.file("store.jsonl"));
  return a;
}

// criteria 6 and 7 share the 750-template offline run; returns the path of
// the first run's store for the replay-fidelity check.
void criteria_offline_run_and_replay() {
  unsetenv("SOURCE_DATE_EPOCH");
  auto start = std::chrono::steady_clock::now();

  std::string corpus_tsv = make_750_corpus();
  auto templates = parse_templates_tsv(corpus_tsv, "no", "inline");

  // Bootstrap probe to derive the lexicon and the toxicity fixtures.
  TempDir boot("acceptance_boot");
  std::string lexicon_tsv;
  std::string translate_fixture;
  std::string toxicity_fixture;
  {
    CompletionStore store = CompletionStore::open(boot.file("store.jsonl"));
    StubBackend backend(2024);
    ModelSpec spec{"offline-bert", "no", "[MASK]", "stub:2024"};
    run_probe_campaign(backend, spec, templates, {20}, store, 4);
    lexicon_tsv = make_1000_lexicon(store);
    replayfix::build_fixtures(store, templates, "offline-bert", "no", 1,
                              {"toxicity", "identity_attack"},
                              boot.file("translate_fixture.jsonl"),
                              boot.file("toxicity_fixture.jsonl"));
    translate_fixture = testutil::read_file(boot.file("translate_fixture.jsonl"));
    toxicity_fixture = testutil::read_file(boot.file("toxicity_fixture.jsonl"));
  }

  TempDir run1("acceptance_run1");
  TempDir run2("acceptance_run2");
  PipelineArtifacts a1 =
      run_offline_pipeline(run1, corpus_tsv, lexicon_tsv, translate_fixture,
                           toxicity_fixture);
  PipelineArtifacts a2 =
      run_offline_pipeline(run2, corpus_tsv, lexicon_tsv, translate_fixture,
                           toxicity_fixture);
  double secs = elapsed_seconds(start);

  bool identical = a1.honest_csv == a2.honest_csv && a1.honest_md == a2.honest_md &&
                   a1.heatmap_csv == a2.heatmap_csv &&
                   a1.toxicity_csv == a2.toxicity_csv &&
                   a1.toxicity_md == a2.toxicity_md &&
                   a1.report_json == a2.report_json && a1.store == a2.store;
  bool in_time = secs < 30.0;
  bool nonzero = a1.honest_csv.find("0.0000") == std::string::npos;
  std::ostringstream detail;
  detail << "750 templates x k=20, two runs in " << secs << " s, artifacts "
         << (identical ? "byte-identical" : "DIFFER")
         << (nonzero ? "" : " (warning: all-zero scores)");
  report_line("criterion 6: end-to-end offline run", identical && in_time, detail.str());

  // criterion 7: replay the first run's store into a fresh one.
  bool replay_ok = true;
  std::ostringstream replay_detail;
  {
    TempDir replay_dir("acceptance_replay");
    CompletionStore copy = CompletionStore::open(replay_dir.file("store.jsonl"));
    ReplayBackend replay(run1.file("store.jsonl"));
    ModelSpec spec{"offline-bert", "no", "[MASK]",
                   "replay:" + run1.file("store.jsonl").string()};
    run_probe_campaign(replay, spec, templates, {20}, copy, 4);
    std::string copied = testutil::read_file(replay_dir.file("store.jsonl"));
    if (copied != a1.store) {
      replay_ok = false;
      replay_detail << "replayed store differs from the original; ";
    }
    Rng rng(20240607);
    CompletionStore original = CompletionStore::open(run1.file("store.jsonl"), true);
    for (int i = 0; i < 200; ++i) {
      const Template& t = templates[rng.below(templates.size())];
      int k = rng.range(2, 20);
      int k_small = rng.range(1, k - 1);
      auto big = original.lookup("offline-bert", t.template_id, k);
      auto small = original.lookup("offline-bert", t.template_id, k_small);
      if (!big || !small ||
          !std::equal(small->completions.begin(), small->completions.end(),
                      big->completions.begin())) {
        replay_ok = false;
        replay_detail << "prefix coherence broke at " << t.template_id << " k'="
                      << k_small << " k=" << k << "; ";
        break;
      }
    }
  }
  report_line("criterion 7: replay fidelity and prefix coherence", replay_ok,
              replay_ok ? "store reproduced byte-identically; 200 prefix checks"
                        : replay_detail.str());
}

// criterion 8 (optional, network-gated): live Danish BERT HONEST@1.
void criterion_live_danish() {
  const char* endpoint = std::getenv("MASKAUDIT_LIVE_DA_ENDPOINT");
  const char* corpus = std::getenv("MASKAUDIT_LIVE_DA_CORPUS");
  const char* lexicon = std::getenv("MASKAUDIT_LIVE_DA_LEXICON");
  if (endpoint == nullptr || corpus == nullptr || lexicon == nullptr) {
    std::cout << "[SKIP] criterion 8: live Danish HONEST@1 (network-gated; set "
                 "MASKAUDIT_LIVE_DA_ENDPOINT/_CORPUS/_LEXICON to enable)\n";
    return;
  }
  try {
    const char* mask = std::getenv("MASKAUDIT_LIVE_DA_MASK");
    ModelSpec spec{"danish-bert", "da", mask != nullptr ? mask : "[MASK]", endpoint};
    auto templates = load_templates(corpus, "da");
    Lexicon lex = load_lexicon(lexicon, std::nullopt, "da");
    HttpBackendOptions options;
    options.bearer_token = std::getenv("INFERENCE_API_KEY") != nullptr
                               ? std::getenv("INFERENCE_API_KEY")
                               : "";
    auto backend = make_backend(spec, options);
    std::vector<CompletionSet> sets;
    for (const Template& t : templates) {
      sets.push_back(fetch_completions(*backend, spec, t, 1));
    }
    double score = honest_score(sets, lex, 1).score;
    bool within = std::abs(score - 0.0495) <= 0.01;
    std::cout << (within ? "[PASS]" : "[WARN]") << " criterion 8: live Danish HONEST@1 = "
              << score << " vs published 0.0495"
              << (within ? "" : " (drift indicates model revision, not a harness defect)")
              << "\n";
  } catch (const AuditError& e) {
    std::cout << "[WARN] criterion 8: live check failed to run: " << e.what() << "\n";
  }
}

}  // namespace

int main() {
  criterion_oracle_equivalence();
  criterion_decomposition();
  criterion_published_aggregation();
  criterion_threshold_boundary();
  criterion_agreement();
  criteria_offline_run_and_replay();
  criterion_live_danish();
  if (g_failures > 0) {
    std::cout << g_failures << " criterion(s) failed\n";
  }
  return g_failures;
}
