#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace emuchain {

// Shortest decimal string that parses back to the same double.
std::string format_double(double value);

// Strict parse: the whole token must be consumed. Throws FormatError.
double parse_double(std::string_view token);

std::string join_doubles(const std::vector<double>& values, char sep = ' ');

// Splits on runs of whitespace.
std::vector<double> parse_double_list(std::string_view line);

}  // namespace emuchain
