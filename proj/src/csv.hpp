#pragma once

// Minimal CSV field splitting for the simple, unquoted tables this tool
// reads and writes (identifiers and numbers only).

#include <string>
#include <string_view>
#include <vector>

namespace slicescout::detail {

std::vector<std::string> split_csv_line(std::string_view line);

/// Strips surrounding whitespace and a trailing '\r'.
std::string_view trim(std::string_view text);

double parse_double(std::string_view text, std::string_view what);
long long parse_int(std::string_view text, std::string_view what);

}  // namespace slicescout::detail
