#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace ahr::text {

/// 17 significant digits: parses back to the identical double.
std::string format_real(double x);

std::vector<std::string> split(std::string_view s, char sep);
std::string_view trim(std::string_view s);

/// Strict parsers; throw InvalidInput naming `what` on malformed text.
double parse_real(std::string_view s, std::string_view what);
std::int64_t parse_int(std::string_view s, std::string_view what);
std::uint64_t parse_uint(std::string_view s, std::string_view what);
std::vector<double> parse_real_list(std::string_view s, std::string_view what);

}  // namespace ahr::text
