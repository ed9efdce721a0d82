#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace hsclean::textio {

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Lines of `text` with trailing '\r' removed. Blank lines are dropped.
std::vector<std::string_view> nonblank_lines(std::string_view text);

// Splits on any run of the given separator characters.
std::vector<std::string_view> split(std::string_view line, std::string_view separators);

std::string_view trim(std::string_view s);

// Strict whole-token parsers; throw DataError naming `what` on failure.
long long parse_int(std::string_view token, std::string_view what);
double parse_double(std::string_view token, std::string_view what);

// Shortest round-trip representation with 17 significant digits.
std::string format_g17(double value);

}  // namespace hsclean::textio
