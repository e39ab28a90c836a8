#pragma once

#include "rfsim/error.hpp"

#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>
#include <string_view>

namespace rfsim {

namespace detail {

inline std::string lowercase(std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

// Unit letters tolerated after the scale suffix. They carry no scaling.
inline bool is_unit_word(std::string_view u) {
    static constexpr std::array<std::string_view, 11> units = {
        "", "h", "f", "ohm", "ohms", "v", "a", "s", "hz", "w", "sec"};
    for (auto w : units)
        if (w == u) return true;
    return false;
}

} // namespace detail

/// Parses a SPICE-style number: mantissa, optional scale suffix
/// (f p n u m k meg g, case-insensitive) and optional unit letters.
/// "36nH" -> 3.6e-8, "3.8Kohm" -> 3800, "1meg" -> 1e6.
/// Throws ParseError with the column (1-based, inside the token) of the
/// offending character.
inline double parse_value(std::string_view token) {
    if (token.empty())
        throw ParseError(ParseErrorKind::malformed_number, "empty numeric value", 0, 1);

    // strtod would accept "inf"/"nan"/hex; restrict the mantissa charset first
    std::size_t end = 0;
    if (end < token.size() && (token[end] == '+' || token[end] == '-')) ++end;
    bool digits = false;
    while (end < token.size() && std::isdigit(static_cast<unsigned char>(token[end]))) {
        ++end;
        digits = true;
    }
    if (end < token.size() && token[end] == '.') {
        ++end;
        while (end < token.size() && std::isdigit(static_cast<unsigned char>(token[end]))) {
            ++end;
            digits = true;
        }
    }
    if (!digits)
        throw ParseError(ParseErrorKind::malformed_number,
                         "malformed number '" + std::string(token) + "'", 0, 1);
    if (end < token.size() && (token[end] == 'e' || token[end] == 'E')) {
        std::size_t exp = end + 1;
        if (exp < token.size() && (token[exp] == '+' || token[exp] == '-')) ++exp;
        std::size_t exp_digits = exp;
        while (exp_digits < token.size() &&
               std::isdigit(static_cast<unsigned char>(token[exp_digits])))
            ++exp_digits;
        if (exp_digits > exp) end = exp_digits;
    }

    double mantissa = 0.0;
    const std::string head(token.substr(0, end));
    auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), mantissa);
    if (ec != std::errc() || ptr != head.data() + head.size())
        throw ParseError(ParseErrorKind::malformed_number,
                         "malformed number '" + std::string(token) + "'", 0, 1);

    const std::string rest = detail::lowercase(token.substr(end));
    bool known = true;
    int exp10 = 0;
    std::string_view unit = rest;
    if (rest.rfind("meg", 0) == 0) {
        exp10 = 6;
        unit = std::string_view(rest).substr(3);
    } else if (!rest.empty()) {
        switch (rest.front()) {
        case 'f': exp10 = -15; break;
        case 'p': exp10 = -12; break;
        case 'n': exp10 = -9; break;
        case 'u': exp10 = -6; break;
        case 'm': exp10 = -3; break;
        case 'k': exp10 = 3; break;
        case 'g': exp10 = 9; break;
        default: known = false; break;
        }
        if (known) unit = std::string_view(rest).substr(1);
    }
    // a bare unit word ("50ohm", "1.8V") is fine; anything else is an unknown suffix
    if (!known) {
        if (!detail::is_unit_word(rest))
            throw ParseError(ParseErrorKind::unknown_suffix,
                             "unknown suffix '" + std::string(token.substr(end)) + "' in '" +
                                 std::string(token) + "'",
                             0, static_cast<int>(end) + 1);
        unit = {};
    }
    if (!detail::is_unit_word(unit))
        throw ParseError(ParseErrorKind::unknown_suffix,
                         "unknown suffix '" + std::string(token.substr(end)) + "' in '" +
                             std::string(token) + "'",
                         0, static_cast<int>(end) + 1);
    if (exp10 == 0) return mantissa;
    // fold the suffix into the decimal exponent so "170u" rounds like 1.7e-4
    const auto epos = head.find_first_of("eE");
    const int e0 = epos == std::string::npos ? 0 : std::stoi(head.substr(epos + 1));
    const std::string scaled = head.substr(0, epos) + "e" + std::to_string(e0 + exp10);
    double v = 0.0;
    std::from_chars(scaled.data(), scaled.data() + scaled.size(), v);
    return v;
}

/// Full-precision scientific text used in every data artifact.
inline std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    std::array<char, 40> buf{};
    std::snprintf(buf.data(), buf.size(), "%.16e", v);
    return buf.data();
}

/// Shortest text that parses back to exactly `v` (netlist serialization).
inline std::string format_roundtrip(double v) {
    std::array<char, 40> buf{};
    for (int precision = 6; precision <= 17; ++precision) {
        std::snprintf(buf.data(), buf.size(), "%.*g", precision, v);
        if (std::strtod(buf.data(), nullptr) == v) break;
    }
    return buf.data();
}

inline double db20(double magnitude) { return 20.0 * std::log10(magnitude); }
inline double db10(double ratio) { return 10.0 * std::log10(ratio); }

/// Watts to dBm; 0 W maps to -inf.
inline double watts_to_dbm(double watts) {
    if (watts <= 0.0) return -std::numeric_limits<double>::infinity();
    return 10.0 * std::log10(watts / 1e-3);
}
inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline constexpr double pi = 3.14159265358979323846;

} // namespace rfsim
