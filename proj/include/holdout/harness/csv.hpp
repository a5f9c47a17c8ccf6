#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

#include "holdout/errors.hpp"

namespace holdout::harness {

/// Shortest decimal that parses back to the same double.
inline std::string fmt(double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, res.ptr);
}

inline std::string fmt(std::uint64_t v) { return std::to_string(v); }
inline std::string fmt(std::int64_t v) { return std::to_string(v); }
inline std::string fmt(unsigned v) { return std::to_string(v); }
inline std::string fmt(int v) { return std::to_string(v); }
inline std::string fmt(bool v) { return v ? "1" : "0"; }
inline std::string fmt(std::string_view v) { return std::string(v); }
inline std::string fmt(const char* v) { return std::string(v); }
inline std::string fmt(const std::string& v) { return v; }

/// One output file: a header and rows of already-formatted cells.
struct CsvTable {
    std::string file;
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    template <class... Cells>
    void add(const Cells&... cells) {
        rows.push_back({fmt(cells)...});
    }
};

inline std::string quote_cell(const std::string& cell) {
    if (cell.find_first_of(",\"\n") == std::string::npos) return cell;
    std::string out = "\"";
    for (char c : cell) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline void write_csv(std::ostream& out, const CsvTable& table) {
    auto line = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out << ',';
            out << quote_cell(cells[i]);
        }
        out << '\n';
    };
    line(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) throw InputError("row width differs from header in " + table.file);
        line(row);
    }
}

inline void write_csv_file(const std::filesystem::path& dir, const CsvTable& table) {
    std::ofstream out(dir / table.file, std::ios::binary);
    if (!out) throw InputError("cannot write " + (dir / table.file).string());
    write_csv(out, table);
}

/// Splits one CSV line, honoring double-quoted cells.
inline std::vector<std::string> split_csv_line(std::string_view line) {
    std::vector<std::string> out;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    out.push_back(std::move(cell));
    return out;
}

}  // namespace holdout::harness
