#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "maskaudit/commands.hpp"

namespace {

struct GlobalOptions {
  std::string config_path;
  std::vector<std::string> models;
  std::vector<int> k_values;
  std::string out_dir;
  bool offline = false;
};

maskaudit::RunConfig load_config(const GlobalOptions& options) {
  maskaudit::RunConfig config = maskaudit::load_run_config(options.config_path);
  if (!options.k_values.empty()) {
    config.k_values.clear();
    for (int k : options.k_values) config.k_values.insert(k);
  }
  if (!options.out_dir.empty()) config.out_dir = options.out_dir;
  if (options.offline) config.offline = true;
  return config;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"maskaudit - measures harmful and toxic fill-mask completions of "
               "masked language models"};
  app.require_subcommand(1);
  app.fallthrough();  // global flags may follow the subcommand name

  GlobalOptions options;
  app.add_option("--config", options.config_path, "run configuration file")
      ->required()
      ->envname("MASKAUDIT_CONFIG");
  app.add_option("--model", options.models, "restrict to these model ids (repeatable)");
  app.add_option("--k", options.k_values, "override k values (repeatable)");
  app.add_option("--out", options.out_dir, "override the output directory");
  app.add_flag("--offline", options.offline,
               "forbid network access; replay/stub backends only");

  CLI::App* probe = app.add_subcommand(
      "probe", "fetch top-k completions for every template into the store");
  CLI::App* score = app.add_subcommand(
      "score", "compute HONEST scores and the category/gender heatmap from the store");
  CLI::App* score_toxicity = app.add_subcommand(
      "score-toxicity", "classify filled sentences via the toxicity bridge");
  CLI::App* validate = app.add_subcommand(
      "validate-translation",
      "score sentences both directly and via the bridge, report flag agreement");
  std::string language;
  validate->add_option("--language", language, "source language to validate (e.g. sv)")
      ->required();
  CLI::App* report = app.add_subcommand("report", "re-render tables from report.json");

  CLI11_PARSE(app, argc, argv);

  try {
    maskaudit::RunConfig config = load_config(options);
    if (probe->parsed()) {
      return maskaudit::cmd_probe(config, options.models, std::cout);
    }
    if (score->parsed()) {
      return maskaudit::cmd_score(config, options.models, std::cout);
    }
    if (score_toxicity->parsed()) {
      return maskaudit::cmd_score_toxicity(config, options.models, std::cout);
    }
    if (validate->parsed()) {
      return maskaudit::cmd_validate_translation(config, language, options.models,
                                                 std::cout);
    }
    if (report->parsed()) {
      return maskaudit::cmd_report(config, std::cout);
    }
  } catch (const maskaudit::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const maskaudit::ToxicityError& e) {
    if (e.code() == maskaudit::ToxicityErrorCode::DirectScoringUnsupported ||
        e.code() == maskaudit::ToxicityErrorCode::InvalidConfig) {
      std::cerr << "config error: " << e.what() << "\n";
      return 2;
    }
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const maskaudit::AuditError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
