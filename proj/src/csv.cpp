#include "ysm/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <stdexcept>

namespace ysm {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string current;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(current);
            current.clear();
        } else if (ch != '\r') {
            current.push_back(ch);
        }
    }
    fields.push_back(current);
    return fields;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    CsvTable table;
    table.source = path.string();
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        auto fields = split_csv_line(line);
        if (table.header.empty()) {
            table.header = std::move(fields);
            continue;
        }
        if (fields.size() != table.header.size()) {
            throw std::runtime_error(table.source + ":" + std::to_string(line_no) + ": expected " +
                                     std::to_string(table.header.size()) + " fields, found " +
                                     std::to_string(fields.size()));
        }
        table.rows.push_back({line_no, std::move(fields)});
    }
    if (table.header.empty()) throw std::runtime_error(table.source + ": empty file");
    return table;
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw std::runtime_error(source + ":1: missing column \"" + name + "\"");
    return static_cast<std::size_t>(it - header.begin());
}

double CsvTable::number(const Row& row, std::size_t col) const {
    const std::string& field = row.fields.at(col);
    if (field == "nan") return std::nan("");
    if (field == "inf") return HUGE_VAL;
    if (field == "-inf") return -HUGE_VAL;
    double value = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || end != field.data() + field.size()) {
        throw std::runtime_error(source + ":" + std::to_string(row.line) + ": column \"" + header.at(col) +
                                 "\" is not a number: \"" + field + "\"");
    }
    return value;
}

} // namespace ysm
