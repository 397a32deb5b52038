#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace maskaudit::util {

// UTF-8 helpers for Latin-script text (ASCII, Latin-1 Supplement,
// Latin Extended-A/B). Invalid byte sequences decode to U+FFFD.
std::vector<char32_t> utf8_decode(std::string_view s);
std::string utf8_encode(const std::vector<char32_t>& cps);

char32_t lower_codepoint(char32_t cp);
bool is_letter(char32_t cp);
bool is_ascii_digit(char32_t cp);

std::string lowercase(std::string_view s);

// Trims ends and collapses internal whitespace runs to a single space.
std::string normalize_whitespace(std::string_view s);

std::string trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
std::size_t count_occurrences(std::string_view haystack, std::string_view needle);
std::string replace_first(std::string_view haystack, std::string_view needle,
                          std::string_view replacement);

// Fixed-point rendering used by all table artifacts ("%.Nf", never "-0.00").
std::string fixed(double v, int decimals);

}  // namespace maskaudit::util
