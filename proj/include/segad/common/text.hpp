#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace segad {

std::vector<std::string_view> split(std::string_view line, char sep);
std::string_view trim(std::string_view s);

// Shortest decimal form that parses back to the identical double.
std::string format_double(double v);
std::optional<double> parse_double(std::string_view s);
std::optional<std::int64_t> parse_int(std::string_view s);

// ISO-8601 UTC instants as whole seconds since the Unix epoch. Accepts
// "YYYY-MM-DDTHH:MM:SS" with optional fractional seconds (truncated), 'T' or
// ' ' separator and a trailing 'Z' or "+00:00".
std::optional<std::int64_t> parse_iso8601(std::string_view s);
std::string format_iso8601(std::int64_t epoch_seconds);

// fnmatch-style glob ('*', '?', '[...]').
bool glob_match(const std::string& pattern, const std::string& text);

std::string read_file(const std::string& path);
void write_file(const std::string& path, std::string_view content);

}  // namespace segad
