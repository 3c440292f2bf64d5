#pragma once

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ioth/errors.hpp"

namespace ioth::csv {

// Shortest decimal form that parses back to the identical double, so CSVs
// are byte-stable and lossless across write/read cycles.
inline std::string format_double(double v) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& s, const std::string& stage = "csv") {
    char* end = nullptr;
    const double v = std::strtod(s.c_str(), &end);
    if (end == s.c_str() || *end != '\0') {
        throw IothError(stage, "bad number '" + s + "'");
    }
    return v;
}

inline long long parse_int(const std::string& s, const std::string& stage = "csv") {
    char* end = nullptr;
    const long long v = std::strtoll(s.c_str(), &end, 10);
    if (end == s.c_str() || *end != '\0') {
        throw IothError(stage, "bad integer '" + s + "'");
    }
    return v;
}

// Minimal CSV support for the formats this toolkit emits: comma separated,
// no embedded commas/quotes/newlines in any field we write, first row is a
// header. Reading tolerates trailing \r (files may round-trip through tools
// that write CRLF) and skips blank lines.

inline std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    fields.push_back(cur);
    return fields;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Column index by name; throws if absent.
    std::size_t col(const std::string& name, const std::string& stage = "csv") const {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (header[i] == name) return i;
        }
        throw IothError(stage, "missing column '" + name + "'");
    }
};

inline Table read_file(const std::string& path, const std::string& stage = "csv") {
    std::ifstream in(path);
    if (!in) throw IothError(stage, "cannot open " + path);
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split_line(line);
        if (first) {
            t.header = std::move(fields);
            first = false;
        } else {
            if (fields.size() != t.header.size()) {
                throw IothError(stage, "row with " + std::to_string(fields.size()) +
                                           " fields, expected " +
                                           std::to_string(t.header.size()) + " in " + path);
            }
            t.rows.push_back(std::move(fields));
        }
    }
    if (first) throw IothError(stage, "empty csv file " + path);
    return t;
}

inline void write_row(std::ostream& out, const std::vector<std::string>& fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out << ',';
        out << fields[i];
    }
    out << '\n';
}

inline void write_file(const std::string& path, const Table& t,
                       const std::string& stage = "csv") {
    std::ofstream out(path);
    if (!out) throw IothError(stage, "cannot write " + path);
    write_row(out, t.header);
    for (const auto& row : t.rows) write_row(out, row);
    if (!out) throw IothError(stage, "write failed for " + path);
}

}  // namespace ioth::csv
