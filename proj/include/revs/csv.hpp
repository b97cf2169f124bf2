#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "revs/errors.hpp"

namespace revs::csv {

inline std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& line, char delim = ',') {
    std::vector<std::string> out;
    std::string field;
    std::stringstream ss(line);
    while (std::getline(ss, field, delim)) out.push_back(trim(field));
    if (!line.empty() && line.back() == delim) out.emplace_back();
    return out;
}

inline double to_double(const std::string& s, const std::string& context) {
    if (s.empty()) throw DataError(context + ": empty numeric field");
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &pos);
    } catch (const std::exception&) {
        throw DataError(context + ": cannot parse '" + s + "' as a number");
    }
    if (pos != s.size()) throw DataError(context + ": trailing characters in '" + s + "'");
    return v;
}

inline long to_long(const std::string& s, const std::string& context) {
    if (s.empty()) throw DataError(context + ": empty integer field");
    std::size_t pos = 0;
    long v = 0;
    try {
        v = std::stol(s, &pos);
    } catch (const std::exception&) {
        throw DataError(context + ": cannot parse '" + s + "' as an integer");
    }
    if (pos != s.size()) throw DataError(context + ": trailing characters in '" + s + "'");
    return v;
}

// Reads all non-empty lines; '#' starts a comment line.
inline std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open file: " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        lines.push_back(t);
    }
    return lines;
}

// Fixed-precision float formatting; keeps report files byte-stable.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

inline std::string fmt(long v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(std::uint64_t v) { return std::to_string(v); }

}  // namespace revs::csv
