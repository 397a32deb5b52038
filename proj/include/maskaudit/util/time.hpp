#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace maskaudit::util {

std::string iso8601_utc(std::int64_t epoch_seconds);

// SOURCE_DATE_EPOCH, when set, pins every timestamp for reproducible runs.
std::optional<std::int64_t> source_date_epoch();

// SOURCE_DATE_EPOCH if set, otherwise the current time.
std::string wall_timestamp();

// SOURCE_DATE_EPOCH if set, otherwise the Unix epoch. Offline runs use this
// so that two identical runs produce byte-identical stores and artifacts.
std::string deterministic_timestamp();

}  // namespace maskaudit::util
