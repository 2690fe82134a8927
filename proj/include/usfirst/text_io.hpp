#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace usfirst {

// Shortest decimal text that parses back to the same double ("inf"/"-inf"
// for infinities).
std::string format_number(double value);

// Fixed-point with `digits` decimals, as used in human-facing tables.
std::string format_fixed(double value, int digits);

std::optional<double> parse_number(std::string_view text);

// Splits one CSV line on commas. Fields are never quoted in this project's
// formats.
std::vector<std::string> split_csv_line(std::string_view line);

// Lines of a text file, with trailing '\r' stripped and blank lines skipped.
std::vector<std::string> split_lines(std::string_view text);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

}  // namespace usfirst
