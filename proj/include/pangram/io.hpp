#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace pangram::io {

// Split one CSV line on commas. Double-quoted fields may contain commas and
// "" escapes. A trailing '\r' is ignored.
std::vector<std::string> split_csv_line(std::string_view line);

// Quote a field only if it needs it.
std::string csv_field(std::string_view value);

// Shortest decimal representation that round-trips to the same double.
std::string format_double(double value);

// Strict locale-independent parse; throws DataError on trailing junk.
double parse_double(std::string_view text);
long long parse_int(std::string_view text);

std::string read_file(const std::filesystem::path& path);

// Write to a sibling temp file and rename over the target, so readers never
// observe a truncated artifact.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

std::string trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace pangram::io
