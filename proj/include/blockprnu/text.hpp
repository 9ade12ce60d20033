#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace blockprnu {

// Shortest representation that parses back to the same double.
std::string format_double(double v);
// Rounded to `digits` significant digits.
std::string format_significant(double v, int digits);

bool parse_double(std::string_view s, double& out);
bool parse_int(std::string_view s, long long& out);
std::string_view trim(std::string_view s);
std::vector<std::string_view> split(std::string_view s, char sep);
// Non-empty lines with trailing CR removed.
std::vector<std::string_view> lines(std::string_view text);

}  // namespace blockprnu
