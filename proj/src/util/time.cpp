#include "maskaudit/util/time.hpp"

#include <cstdio>
#include <cstdlib>
#include <ctime>

namespace maskaudit::util {

std::string iso8601_utc(std::int64_t epoch_seconds) {
  std::time_t t = static_cast<std::time_t>(epoch_seconds);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%04d-%02d-%02dT%02d:%02d:%02dZ", tm.tm_year + 1900,
                tm.tm_mon + 1, tm.tm_mday, tm.tm_hour, tm.tm_min, tm.tm_sec);
  return buf;
}

std::optional<std::int64_t> source_date_epoch() {
  const char* v = std::getenv("SOURCE_DATE_EPOCH");
  if (v == nullptr || *v == '\0') return std::nullopt;
  char* end = nullptr;
  long long parsed = std::strtoll(v, &end, 10);
  if (end == v) return std::nullopt;
  return static_cast<std::int64_t>(parsed);
}

std::string wall_timestamp() {
  if (auto pinned = source_date_epoch()) return iso8601_utc(*pinned);
  return iso8601_utc(static_cast<std::int64_t>(std::time(nullptr)));
}

std::string deterministic_timestamp() {
  return iso8601_utc(source_date_epoch().value_or(0));
}

}  // namespace maskaudit::util
