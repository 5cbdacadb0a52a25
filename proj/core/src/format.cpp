#include "emuchain/format.hpp"

#include "emuchain/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>

namespace emuchain {

std::string format_double(double value) {
    if (std::isnan(value)) return "nan";
    if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
    std::array<char, 32> buf{};
    auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
    if (ec != std::errc{}) throw FormatError("cannot format number");
    return std::string(buf.data(), ptr);
}

double parse_double(std::string_view token) {
    if (token == "nan") return std::nan("");
    if (token == "inf") return INFINITY;
    if (token == "-inf") return -INFINITY;
    // from_chars rejects a leading '+', which other writers may emit.
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    double value = 0.0;
    auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (ec != std::errc{} || ptr != token.data() + token.size() || token.empty()) {
        throw FormatError("non-numeric token '" + std::string(token) + "'");
    }
    return value;
}

std::string join_doubles(const std::vector<double>& values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(sep);
        out += format_double(values[i]);
    }
    return out;
}

std::vector<double> parse_double_list(std::string_view line) {
    std::vector<double> out;
    std::size_t i = 0;
    while (i < line.size()) {
        while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
        std::size_t j = i;
        while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
        if (j > i) out.push_back(parse_double(line.substr(i, j - i)));
        i = j;
    }
    return out;
}

}  // namespace emuchain
