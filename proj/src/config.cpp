#include "maskaudit/config.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "maskaudit/util/text.hpp"

namespace maskaudit {

namespace {

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const std::string& item : util::split(value, ',')) {
    std::string trimmed = util::trim(item);
    if (!trimmed.empty()) out.push_back(trimmed);
  }
  return out;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not an integer: '" + value + "'");
  }
}

double parse_double(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    double v = std::stod(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ConfigError("config key '" + key + "': not a number: '" + value + "'");
  }
}

bool parse_bool(const std::string& key, const std::string& value) {
  if (value == "true") return true;
  if (value == "false") return false;
  throw ConfigError("config key '" + key + "': expected true or false, got '" + value + "'");
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& value) {
  std::filesystem::path p(value);
  if (p.is_absolute()) return p;
  return base / p;
}

bool is_http_endpoint(const std::string& endpoint) {
  return endpoint.rfind("http://", 0) == 0 || endpoint.rfind("https://", 0) == 0;
}

}  // namespace

RunConfig parse_run_config(std::string_view text, const std::filesystem::path& base_dir,
                           std::string_view origin) {
  RunConfig config;
  std::map<std::string, ModelSpec> model_fields;
  std::vector<std::string> model_order;

  std::vector<std::string> lines = util::split(text, '\n');
  for (std::size_t i = 0; i < lines.size(); ++i) {
    std::string line = util::trim(lines[i]);
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(i + 1) +
                        ": expected 'key = value'");
    }
    std::string key = util::trim(line.substr(0, eq));
    std::string value = util::trim(line.substr(eq + 1));
    if (key.empty()) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(i + 1) + ": empty key");
    }
    if (config.raw.count(key) > 0) {
      throw ConfigError(std::string(origin) + ":" + std::to_string(i + 1) +
                        ": duplicate key '" + key + "'");
    }
    config.raw[key] = value;

    if (key == "languages") {
      config.languages = parse_list(value);
    } else if (key == "store") {
      config.store_path = resolve(base_dir, value);
    } else if (key == "out") {
      config.out_dir = resolve(base_dir, value);
    } else if (key == "k") {
      config.k_values.clear();
      for (const std::string& item : parse_list(value)) {
        config.k_values.insert(parse_int(key, item));
      }
    } else if (key == "parallelism") {
      config.parallelism = parse_int(key, value);
    } else if (key == "offline") {
      config.offline = parse_bool(key, value);
    } else if (key == "lexicon.level") {
      if (value == "all") {
        config.lexicon_level = std::nullopt;
      } else {
        auto level = parse_level(value);
        if (!level) {
          throw ConfigError("config key 'lexicon.level': expected conservative, "
                            "inclusive or all, got '" + value + "'");
        }
        config.lexicon_level = level;
      }
    } else if (key.rfind("corpus.", 0) == 0) {
      config.corpus_paths[key.substr(7)] = resolve(base_dir, value);
    } else if (key.rfind("lexicon.", 0) == 0) {
      config.lexicon_paths[key.substr(8)] = resolve(base_dir, value);
    } else if (key == "toxicity.threshold") {
      config.toxicity.threshold = parse_double(key, value);
    } else if (key == "toxicity.attributes") {
      config.toxicity.attributes = parse_list(value);
    } else if (key == "toxicity.decision_attribute") {
      config.toxicity.decision_attribute = value;
    } else if (key == "toxicity.bridge_mode") {
      auto mode = parse_bridge_mode(value);
      if (!mode) {
        throw ConfigError("config key 'toxicity.bridge_mode': expected direct or "
                          "translate, got '" + value + "'");
      }
      config.toxicity.bridge_mode = *mode;
    } else if (key == "toxicity.k") {
      config.toxicity_k = parse_int(key, value);
    } else if (key == "toxicity.endpoint") {
      config.toxicity_endpoint = value;
    } else if (key == "toxicity.direct_languages") {
      auto list = parse_list(value);
      config.toxicity_direct_languages = std::set<std::string>(list.begin(), list.end());
    } else if (key == "toxicity.rate_limit_per_sec") {
      config.toxicity_rate_limit_per_sec = parse_double(key, value);
    } else if (key == "toxicity.record_fixture") {
      config.toxicity_record_fixture = resolve(base_dir, value);
    } else if (key == "translate.endpoint") {
      config.translate_endpoint = value;
    } else if (key == "translate.record_fixture") {
      config.translate_record_fixture = resolve(base_dir, value);
    } else if (key.rfind("model.", 0) == 0) {
      std::string rest = key.substr(6);
      auto dot = rest.rfind('.');
      if (dot == std::string::npos || dot == 0 || dot + 1 >= rest.size()) {
        throw ConfigError("config key '" + key + "': expected model.<id>.<field>");
      }
      std::string id = rest.substr(0, dot);
      std::string field = rest.substr(dot + 1);
      if (model_fields.count(id) == 0) {
        model_order.push_back(id);
        model_fields[id].model_id = id;
      }
      ModelSpec& spec = model_fields[id];
      if (field == "language") {
        spec.language = value;
      } else if (field == "mask_token") {
        spec.mask_token = value;
      } else if (field == "endpoint") {
        // replay paths are file references and resolve like other paths
        if (value.rfind("replay:", 0) == 0) {
          spec.endpoint = "replay:" + resolve(base_dir, value.substr(7)).string();
        } else {
          spec.endpoint = value;
        }
      } else {
        throw ConfigError("config key '" + key + "': unknown model field '" + field + "'");
      }
    } else {
      throw ConfigError(std::string(origin) + ":" + std::to_string(i + 1) +
                        ": unknown config key '" + key + "'");
    }
  }

  // replay: schemes in toxicity/translate endpoints resolve relative paths too
  for (std::string* endpoint : {&config.toxicity_endpoint, &config.translate_endpoint}) {
    if (endpoint->rfind("replay:", 0) == 0) {
      *endpoint = "replay:" + resolve(base_dir, endpoint->substr(7)).string();
    }
  }

  for (const std::string& id : model_order) {
    config.models.push_back(model_fields[id]);
  }
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ConfigError("cannot open config file: " + path.string());
  }
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str(), path.parent_path(), path.string());
}

void validate_config(const RunConfig& config) {
  if (config.models.empty()) {
    throw ConfigError("no models configured");
  }
  if (config.k_values.empty()) {
    throw ConfigError("k values must be non-empty");
  }
  if (*config.k_values.begin() < 1) {
    throw ConfigError("k values must be positive");
  }
  if (config.store_path.empty()) {
    throw ConfigError("store path not configured");
  }
  if (config.out_dir.empty()) {
    throw ConfigError("output directory not configured");
  }
  for (const ModelSpec& model : config.models) {
    if (model.language.empty()) {
      throw ConfigError("model '" + model.model_id + "': language not set");
    }
    if (model.mask_token.empty()) {
      throw ConfigError("model '" + model.model_id + "': mask_token not set");
    }
    if (model.endpoint.empty()) {
      throw ConfigError("model '" + model.model_id + "': endpoint not set");
    }
    if (config.corpus_paths.count(model.language) == 0) {
      throw ConfigError("model '" + model.model_id + "': no corpus path for language '" +
                        model.language + "'");
    }
    if (config.lexicon_paths.count(model.language) == 0) {
      throw ConfigError("model '" + model.model_id + "': no lexicon path for language '" +
                        model.language + "'");
    }
  }
  for (const auto& [lang, path] : config.corpus_paths) {
    if (!std::filesystem::exists(path)) {
      throw ConfigError("corpus file for '" + lang + "' not found: " + path.string());
    }
  }
  for (const auto& [lang, path] : config.lexicon_paths) {
    if (!std::filesystem::exists(path)) {
      throw ConfigError("lexicon file for '" + lang + "' not found: " + path.string());
    }
  }
  if (config.toxicity_k < 1) {
    throw ConfigError("toxicity.k must be >= 1");
  }
  if (config.toxicity_k > *config.k_values.rbegin()) {
    throw ConfigError("toxicity.k exceeds the largest probed k");
  }
  try {
    config.toxicity.validate();
  } catch (const ToxicityError& e) {
    throw ConfigError(e.what());
  }
  auto parent = config.store_path.parent_path();
  if (!parent.empty() && !std::filesystem::exists(parent)) {
    throw ConfigError("store directory does not exist: " + parent.string());
  }
}

void enforce_offline(const RunConfig& config, bool check_models, bool check_toxicity) {
  if (!config.offline) return;
  if (check_models) {
    for (const ModelSpec& model : config.models) {
      if (is_http_endpoint(model.endpoint)) {
        throw ConfigError("offline mode forbids network endpoint for model '" +
                          model.model_id + "': " + model.endpoint);
      }
    }
  }
  if (check_toxicity) {
    if (is_http_endpoint(config.toxicity_endpoint)) {
      throw ConfigError("offline mode forbids network toxicity endpoint: " +
                        config.toxicity_endpoint);
    }
    if (is_http_endpoint(config.translate_endpoint)) {
      throw ConfigError("offline mode forbids network translation endpoint: " +
                        config.translate_endpoint);
    }
  }
}

}  // namespace maskaudit
