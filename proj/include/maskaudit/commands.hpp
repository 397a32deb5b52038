#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "maskaudit/config.hpp"
#include "maskaudit/report.hpp"

namespace maskaudit {

// Command layer behind the CLI. Exit codes: 0 success, 1 partial failure
// (some templates or sentences failed), 2 configuration error.

int cmd_probe(const RunConfig& config, const std::vector<std::string>& model_filter,
              std::ostream& log);
int cmd_score(const RunConfig& config, const std::vector<std::string>& model_filter,
              std::ostream& log);
int cmd_score_toxicity(const RunConfig& config, const std::vector<std::string>& model_filter,
                       std::ostream& log);
int cmd_validate_translation(const RunConfig& config, const std::string& language,
                             const std::vector<std::string>& model_filter,
                             std::ostream& log);
int cmd_report(const RunConfig& config, std::ostream& log);

}  // namespace maskaudit
