#pragma once

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gridflex/errors.hpp"

namespace gridflex::csv {

/// One parsed CSV file: header row plus string cells, remembering source
/// line numbers so errors can point at the offending row.
struct Table {
    std::string path;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<int> lines; // 1-based source line per row
};

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
    while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
    return std::string(s.substr(b, e - b));
}

inline std::vector<std::string> split_row(std::string_view line) {
    std::vector<std::string> out;
    size_t start = 0;
    while (true) {
        size_t comma = line.find(',', start);
        if (comma == std::string_view::npos) {
            out.push_back(trim(line.substr(start)));
            break;
        }
        out.push_back(trim(line.substr(start, comma - start)));
        start = comma + 1;
    }
    return out;
}

inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open file");
    Table t;
    t.path = path;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string stripped = trim(line);
        if (stripped.empty()) continue;
        auto cells = split_row(stripped);
        if (t.header.empty()) {
            t.header = std::move(cells);
            continue;
        }
        if (cells.size() != t.header.size())
            throw ParseError(path + ":" + std::to_string(lineno) + ": expected " +
                             std::to_string(t.header.size()) + " columns, got " +
                             std::to_string(cells.size()));
        t.rows.push_back(std::move(cells));
        t.lines.push_back(lineno);
    }
    if (t.header.empty()) throw ParseError(path + ": missing header row");
    return t;
}

/// Index of a required column, by exact header name.
inline int column(const Table& t, const std::string& name) {
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return static_cast<int>(i);
    throw ParseError(t.path + ": missing required column '" + name + "'");
}

/// Index of an optional column, or -1.
inline int column_opt(const Table& t, const std::string& name) {
    for (size_t i = 0; i < t.header.size(); ++i)
        if (t.header[i] == name) return static_cast<int>(i);
    return -1;
}

inline double cell_double(const Table& t, size_t row, int col) {
    const std::string& s = t.rows[row][col];
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(t.path + ":" + std::to_string(t.lines[row]) +
                         ": not a number: '" + s + "'");
    return v;
}

inline long long cell_int(const Table& t, size_t row, int col) {
    const std::string& s = t.rows[row][col];
    long long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || p != s.data() + s.size())
        throw ParseError(t.path + ":" + std::to_string(t.lines[row]) +
                         ": not an integer: '" + s + "'");
    return v;
}

inline bool cell_bool01(const Table& t, size_t row, int col) {
    long long v = cell_int(t, row, col);
    if (v != 0 && v != 1)
        throw ParseError(t.path + ":" + std::to_string(t.lines[row]) +
                         ": expected 0 or 1, got '" + t.rows[row][col] + "'");
    return v == 1;
}

/// Fixed numeric formatting for emitted CSVs; keeps reruns byte-identical.
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

} // namespace gridflex::csv
