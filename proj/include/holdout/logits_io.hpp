#pragma once

#include <bit>
#include <charconv>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "holdout/errors.hpp"
#include "holdout/priors.hpp"
#include "holdout/types.hpp"

namespace holdout {

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

inline double parse_double(std::string_view field, std::size_t line) {
    field = trim(field);
    // std::from_chars for double is available in libstdc++ 11.
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
    if (ec != std::errc() || ptr != field.data() + field.size()) {
        throw InputError("line " + std::to_string(line) + ": not a number: '" + std::string(field) + "'");
    }
    return v;
}

inline std::uint32_t read_u32_le(const unsigned char* p) {
    return std::uint32_t{p[0]} | (std::uint32_t{p[1]} << 8) | (std::uint32_t{p[2]} << 16) | (std::uint32_t{p[3]} << 24);
}

inline void write_u32_le(std::ostream& out, std::uint32_t v) {
    const char bytes[4] = {static_cast<char>(v & 0xff), static_cast<char>((v >> 8) & 0xff),
                           static_cast<char>((v >> 16) & 0xff), static_cast<char>((v >> 24) & 0xff)};
    out.write(bytes, 4);
}

}  // namespace detail

/// Logits as CSV: one row per point, m comma-separated numbers, no header.
inline LogitsTable read_logits_csv(std::istream& in) {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (detail::trim(line).empty()) continue;
        std::size_t count = 0;
        std::string_view rest(line);
        for (;;) {
            const std::size_t comma = rest.find(',');
            values.push_back(detail::parse_double(rest.substr(0, comma), line_no));
            ++count;
            if (comma == std::string_view::npos) break;
            rest.remove_prefix(comma + 1);
        }
        if (rows == 0) cols = count;
        if (count != cols) throw InputError("line " + std::to_string(line_no) + ": expected " + std::to_string(cols) + " columns");
        ++rows;
    }
    if (rows == 0) throw InputError("logits CSV is empty");
    return LogitsTable(rows, cols, std::move(values));
}

inline void write_logits_csv(std::ostream& out, const LogitsTable& logits) {
    char buf[32];
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        const auto row = logits.row(i);
        for (std::size_t l = 0; l < row.size(); ++l) {
            if (l) out << ',';
            const auto res = std::to_chars(buf, buf + sizeof buf, row[l]);
            out.write(buf, res.ptr - buf);
        }
        out << '\n';
    }
}

inline constexpr char kLogitsMagic[4] = {'L', 'G', 'T', 'S'};

/// Binary logits: "LGTS", u32 n, u32 m, u32 reserved (0), then n*m
/// little-endian float32 values in row-major order.
inline LogitsTable read_logits_binary(std::istream& in) {
    unsigned char header[16];
    if (!in.read(reinterpret_cast<char*>(header), sizeof header)) throw InputError("logits file shorter than its header");
    if (std::memcmp(header, kLogitsMagic, 4) != 0) throw InputError("bad logits magic (expected LGTS)");
    const std::uint32_t n = detail::read_u32_le(header + 4);
    const std::uint32_t m = detail::read_u32_le(header + 8);
    if (n == 0 || m < 2) throw InputError("logits header has n = 0 or m < 2");
    const std::size_t count = std::size_t{n} * m;
    std::vector<unsigned char> raw(count * 4);
    if (!in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()))) {
        throw InputError("logits file truncated: expected " + std::to_string(count) + " values");
    }
    std::vector<double> values(count);
    for (std::size_t idx = 0; idx < count; ++idx) {
        values[idx] = std::bit_cast<float>(detail::read_u32_le(raw.data() + 4 * idx));
    }
    return LogitsTable(n, m, std::move(values));
}

inline void write_logits_binary(std::ostream& out, const LogitsTable& logits) {
    out.write(kLogitsMagic, 4);
    detail::write_u32_le(out, static_cast<std::uint32_t>(logits.rows()));
    detail::write_u32_le(out, static_cast<std::uint32_t>(logits.num_classes()));
    detail::write_u32_le(out, 0);
    for (std::size_t i = 0; i < logits.rows(); ++i) {
        for (double v : logits.row(i)) detail::write_u32_le(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
    }
}

/// Reads either format, choosing by the leading magic bytes.
inline LogitsTable read_logits_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open logits file " + path);
    char magic[4] = {};
    in.read(magic, 4);
    const bool binary = in.gcount() == 4 && std::memcmp(magic, kLogitsMagic, 4) == 0;
    in.clear();
    in.seekg(0);
    return binary ? read_logits_binary(in) : read_logits_csv(in);
}

/// Ground-truth labels: one one-based integer per line.
inline LabelVector read_labels(std::istream& in, std::size_t num_classes) {
    std::vector<std::int64_t> values;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::string_view field = detail::trim(line);
        if (field.empty()) continue;
        std::int64_t v = 0;
        const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), v);
        if (ec != std::errc() || ptr != field.data() + field.size()) {
            throw InputError("line " + std::to_string(line_no) + ": not an integer label");
        }
        values.push_back(v);
    }
    return LabelVector::from_one_based(values, num_classes);
}

inline void write_labels(std::ostream& out, const LabelVector& labels) {
    for (Label l : labels) out << (l + 1) << '\n';
}

}  // namespace holdout
