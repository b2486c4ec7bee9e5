#pragma once

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "softrank/core.hpp"

namespace softrank {

/// Raised for unreadable or malformed files.
class IoError : public Error {
public:
    using Error::Error;
};

/// Shortest decimal that parses back to the same double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

inline double parse_double(const std::string& text, const std::string& context) {
    std::string t = text;
    const auto first = t.find_first_not_of(" \t\r");
    const auto last = t.find_last_not_of(" \t\r");
    t = first == std::string::npos ? "" : t.substr(first, last - first + 1);
    if (t == "inf" || t == "+inf") return std::numeric_limits<double>::infinity();
    if (t == "-inf") return -std::numeric_limits<double>::infinity();
    if (t == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    const char* begin = t.data();
    if (!t.empty() && t[0] == '+') ++begin;
    const auto res = std::from_chars(begin, t.data() + t.size(), v);
    if (t.empty() || res.ec != std::errc() || res.ptr != t.data() + t.size())
        throw IoError(context + ": cannot parse '" + text + "' as a number");
    return v;
}

inline std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, sep)) out.push_back(cell);
    if (!line.empty() && line.back() == sep) out.emplace_back();
    return out;
}

/// A numeric table with named columns.
struct Table {
    std::vector<std::string> header;
    Matrix values;
};

/// Reads a comma-separated numeric file. A first row that does not parse as
/// numbers is taken as the header.
inline Table read_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open '" + path + "'");
    Table table;
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split(line, ',');
        if (rows.empty() && table.header.empty()) {
            bool numeric = true;
            for (const auto& c : cells) {
                try {
                    parse_double(c, path);
                } catch (const IoError&) {
                    numeric = false;
                    break;
                }
            }
            if (!numeric) {
                table.header = cells;
                continue;
            }
        }
        std::vector<double> row;
        for (const auto& c : cells) row.push_back(parse_double(c, path + ":" + std::to_string(line_no)));
        if (!rows.empty() && row.size() != rows.front().size())
            throw IoError(path + ":" + std::to_string(line_no) + ": expected " + std::to_string(rows.front().size()) +
                          " columns, found " + std::to_string(row.size()));
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw IoError("'" + path + "' contains no data rows");
    if (!table.header.empty() && table.header.size() != rows.front().size())
        throw IoError(path + ": header has " + std::to_string(table.header.size()) + " names for " +
                      std::to_string(rows.front().size()) + " columns");
    table.values.resize(static_cast<Index>(rows.size()), static_cast<Index>(rows.front().size()));
    for (std::size_t i = 0; i < rows.size(); ++i)
        for (std::size_t j = 0; j < rows[i].size(); ++j) table.values(i, j) = rows[i][j];
    return table;
}

inline Matrix read_matrix(const std::string& path) { return read_csv(path).values; }

/// Header x1..xd when none is given.
inline void write_matrix(const std::string& path, const Matrix& m, std::vector<std::string> header = {}) {
    if (header.empty())
        for (Index j = 0; j < m.cols(); ++j) header.push_back("x" + std::to_string(j + 1));
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (std::size_t j = 0; j < header.size(); ++j) out << (j ? "," : "") << header[j];
    out << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        for (Index j = 0; j < m.cols(); ++j) out << (j ? "," : "") << format_double(m(i, j));
        out << '\n';
    }
    if (!out) throw IoError("failed writing '" + path + "'");
}

/// Writes a file from text rows; lines end in LF.
inline void write_lines(const std::string& path, const std::vector<std::string>& lines) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write '" + path + "'");
    for (const auto& l : lines) out << l << '\n';
    if (!out) throw IoError("failed writing '" + path + "'");
}

/// Joins cells with commas.
template <class... Cells>
std::string csv_row(const Cells&... cells) {
    std::string out;
    bool first = true;
    const auto add = [&](const auto& cell) {
        if (!first) out += ',';
        first = false;
        using T = std::decay_t<decltype(cell)>;
        if constexpr (std::is_floating_point_v<T>)
            out += format_double(cell);
        else if constexpr (std::is_integral_v<T>)
            out += std::to_string(cell);
        else
            out += std::string(cell);
    };
    (add(cells), ...);
    return out;
}

}  // namespace softrank
