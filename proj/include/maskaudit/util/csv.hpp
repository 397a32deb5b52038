#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace maskaudit::util {

// RFC-4180: fields containing comma, quote, CR or LF are quoted,
// embedded quotes doubled.
std::string csv_field(std::string_view field);
std::string csv_row(const std::vector<std::string>& fields);
std::vector<std::vector<std::string>> csv_parse(std::string_view text);

}  // namespace maskaudit::util
