#pragma once

#include <sgca/error.hpp>

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

namespace sgca::harness {

/// 17 significant digits, which always reads back exactly.
inline std::string format_double(double x)
{
    if (std::isnan(x)) return "nan";
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline double parse_double(const std::string& s)
{
    if (s == "nan") return std::nan("");
    if (s == "inf") return HUGE_VAL;
    if (s == "-inf") return -HUGE_VAL;
    char* end = nullptr;
    errno = 0;
    const double v = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size() || errno == ERANGE) {
        throw parameter_error("not a number: '" + s + "'");
    }
    return v;
}

struct Table
{
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline void write_csv(std::ostream& os, const Table& t)
{
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            os << cells[i];
        }
        os << '\n';
    };
    line(t.header);
    for (const auto& r : t.rows) {
        if (r.size() != t.header.size()) {
            throw parameter_error("write_csv: row width does not match header");
        }
        line(r);
    }
}

inline void write_csv(const std::string& path, const Table& t)
{
    std::ofstream os(path, std::ios::binary);
    if (!os) {
        throw std::system_error(errno, std::generic_category(), "cannot open " + path);
    }
    write_csv(os, t);
    os.flush();
    if (!os) throw std::system_error(errno, std::generic_category(), "write failed: " + path);
}

/// Plain comma-separated cells, no quoting. Blank lines are skipped.
inline Table read_csv(std::istream& is)
{
    Table t;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (line.back() == ',') cells.emplace_back();
        if (first) {
            t.header = std::move(cells);
            first = false;
        } else {
            if (cells.size() != t.header.size()) {
                throw parameter_error("read_csv: ragged row (" + std::to_string(cells.size()) +
                                      " cells, header has " +
                                      std::to_string(t.header.size()) + ")");
            }
            t.rows.push_back(std::move(cells));
        }
    }
    return t;
}

inline Table read_csv(const std::string& path)
{
    std::ifstream is(path, std::ios::binary);
    if (!is) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
    return read_csv(is);
}

} // namespace sgca::harness
