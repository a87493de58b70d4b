#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace phishbench {

std::vector<std::string> split(std::string_view text, char sep);
std::string_view trim(std::string_view text);
std::string to_lower(std::string_view text);
inline bool starts_with(std::string_view text, std::string_view prefix) { return text.starts_with(prefix); }
std::string join(const std::vector<std::string>& parts, std::string_view sep);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double v);
double parse_real(std::string_view text);

/// Reads a whole file; throws IOError.
std::string read_file(const std::string& path);

}  // namespace phishbench
