#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace leakloc {

/// Locale-independent double parse of the whole token; throws ParseError
/// citing `line` (and `what`, when given) on failure.
double parse_double(std::string_view token, std::size_t line, std::string_view what = {});

/// Shortest text that parses back to exactly `value`. Infinities print as
/// "inf"/"-inf", NaN as "nan".
std::string format_double(double value);

std::vector<std::string> split_whitespace(std::string_view text);
std::vector<std::string> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);
std::string to_upper(std::string_view text);

/// Valid node/pipe/pattern label: nonempty, no whitespace, no ';' or ','.
bool is_valid_label(std::string_view label);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view contents);

}  // namespace leakloc
