#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace ysm {

// Minimal numeric CSV reader: a header line, then comma-separated fields.
struct CsvTable {
    struct Row {
        std::size_t line = 0; // 1-based line number in the source file
        std::vector<std::string> fields;
    };

    std::string source;
    std::vector<std::string> header;
    std::vector<Row> rows;

    // Column index by name, or throws with a diagnostic.
    [[nodiscard]] std::size_t column(const std::string& name) const;
    [[nodiscard]] bool has_column(const std::string& name) const;
    // Field `col` of `row` parsed as a double; throws "<source>:<line>: ..." on failure.
    [[nodiscard]] double number(const Row& row, std::size_t col) const;
};

[[nodiscard]] std::vector<std::string> split_csv_line(const std::string& line);
[[nodiscard]] CsvTable read_csv(const std::filesystem::path& path);

} // namespace ysm
