#pragma once

// Tabular experiment output: RFC 4180 CSV (CRLF, header row, 17 significant
// digits) and a JSON object with records as an array of row objects.

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <ostream>
#include <sstream>
#include <string>
#include <type_traits>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "errors.hpp"

namespace diagslice {

inline constexpr const char* version = "0.1.0";

using Cell = std::variant<std::int64_t, double, std::string>;

struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<Cell>> rows;

    void add_row(std::vector<Cell> row) {
        if (row.size() != columns.size())
            throw domain_error("Table::add_row: row width does not match the header");
        rows.push_back(std::move(row));
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw domain_error("Table: no column named " + name);
    }

    double number(std::size_t row, const std::string& name) const {
        const auto& c = rows.at(row).at(column(name));
        if (const auto* d = std::get_if<double>(&c)) return *d;
        if (const auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
        throw domain_error("Table: column " + name + " is not numeric");
    }
};

struct ExperimentReport {
    std::string id;
    nlohmann::ordered_json parameters = nlohmann::ordered_json::object();
    std::vector<std::uint64_t> seeds;
    Table records;
    std::vector<std::pair<std::string, Table>> extras; // e.g. "summary", "trajectory"
    double wall_clock_seconds = 0.0;
    std::string software_version = version;

    const Table& table(const std::string& name) const {
        if (name.empty() || name == "records") return records;
        for (const auto& [n, t] : extras)
            if (n == name) return t;
        throw domain_error("report " + id + " has no table named " + name);
    }
};

/// 17 significant digits, which round-trips every double.
inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

namespace detail {

inline std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + '"';
}

inline std::string cell_text(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>)
                return format_double(v);
            else if constexpr (std::is_same_v<T, std::int64_t>)
                return std::to_string(v);
            else
                return v;
        },
        c);
}

inline nlohmann::ordered_json cell_json(const Cell& c) {
    return std::visit(
        [](const auto& v) -> nlohmann::ordered_json {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>) {
                if (!std::isfinite(v)) return format_double(v);
            }
            return v;
        },
        c);
}

} // namespace detail

inline void write_csv(std::ostream& os, const Table& t) {
    for (std::size_t i = 0; i < t.columns.size(); ++i)
        os << (i ? "," : "") << detail::csv_field(t.columns[i]);
    os << "\r\n";
    for (const auto& row : t.rows) {
        for (std::size_t i = 0; i < row.size(); ++i)
            os << (i ? "," : "") << detail::csv_field(detail::cell_text(row[i]));
        os << "\r\n";
    }
}

inline nlohmann::ordered_json table_json(const Table& t) {
    auto arr = nlohmann::ordered_json::array();
    for (const auto& row : t.rows) {
        nlohmann::ordered_json obj = nlohmann::ordered_json::object();
        for (std::size_t i = 0; i < row.size(); ++i) obj[t.columns[i]] = detail::cell_json(row[i]);
        arr.push_back(std::move(obj));
    }
    return arr;
}

inline nlohmann::ordered_json report_json(const ExperimentReport& r, bool include_timing = false) {
    nlohmann::ordered_json j;
    j["experiment"] = r.id;
    j["version"] = r.software_version;
    j["parameters"] = r.parameters;
    j["seeds"] = r.seeds;
    j["columns"] = r.records.columns;
    j["records"] = table_json(r.records);
    for (const auto& [name, t] : r.extras) j[name] = table_json(t);
    if (include_timing) j["wall_clock_seconds"] = r.wall_clock_seconds;
    return j;
}

inline void write_json(std::ostream& os, const ExperimentReport& r, bool include_timing = false) {
    os << report_json(r, include_timing).dump(2) << "\n";
}

/// <experiment>_<d>d_<N>.<ext>
inline std::string default_filename(const std::string& experiment, const std::string& d,
                                    const std::string& n, const std::string& ext) {
    return experiment + "_" + d + "d_" + n + "." + ext;
}

} // namespace diagslice
