// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "nfvs/error.hpp"

namespace nfvs::harness {

inline constexpr const char* kVersion = "0.1.0";

/// One CSV cell: text, integer or real (17 significant digits).
using Cell = std::variant<std::string, long long, double>;

inline std::string format_real(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(17) << v;
    return os.str();
}

/// RFC 4180 quoting: fields with comma, quote, CR or LF are quoted and
/// embedded quotes doubled.
inline std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

class CsvTable {
public:
    explicit CsvTable(std::vector<std::string> header) : header_(std::move(header)) {}

    void add_row(std::vector<Cell> row) {
        if (row.size() != header_.size()) throw InvalidArgument("CsvTable: row width does not match header");
        rows_.push_back(std::move(row));
    }

    std::size_t size() const { return rows_.size(); }

    std::string str() const {
        std::string out;
        write_line(out, header_);
        for (const auto& row : rows_) {
            std::vector<std::string> text;
            text.reserve(row.size());
            for (const auto& cell : row) {
                if (const auto* s = std::get_if<std::string>(&cell)) text.push_back(*s);
                else if (const auto* i = std::get_if<long long>(&cell)) text.push_back(std::to_string(*i));
                else text.push_back(format_real(std::get<double>(cell)));
            }
            write_line(out, text);
        }
        return out;
    }

    void save(const std::filesystem::path& path) const {
        std::filesystem::create_directories(path.parent_path());
        std::ofstream f(path, std::ios::binary);
        if (!f) throw Error("cannot write " + path.string());
        f << str();
    }

private:
    static void write_line(std::string& out, const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(fields[i]);
        }
        out += "\r\n";
    }

    std::vector<std::string> header_;
    std::vector<std::vector<Cell>> rows_;
};

/// FNV-1a, 64 bit, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 0x100000001b3ull;
    }
    std::ostringstream os;
    os << std::hex << std::setw(16) << std::setfill('0') << h;
    return os.str();
}

inline void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
    std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("cannot write " + path.string());
    f << j.dump(2) << '\n';
}

} // namespace nfvs::harness
