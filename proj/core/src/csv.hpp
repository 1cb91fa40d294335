#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace pls::detail {

std::vector<std::string_view> split_fields(std::string_view line, char sep = ',');

/// Parses the whole field as a double; throws ParseError on any trailing text.
double parse_double(std::string_view field, std::size_t row);
long long parse_integer(std::string_view field, std::size_t row);

/// Shortest decimal representation that round-trips exactly.
std::string format_double(double value);

std::string_view trim(std::string_view s);

}  // namespace pls::detail
