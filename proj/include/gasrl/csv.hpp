#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace gasrl {

/// Plain comma-separated table with a header row. No quoting support; the
/// files this project reads and writes never contain commas inside fields.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Throws DataError naming the missing column.
    std::size_t column_index(std::string_view name) const;
    /// Parses cell (row, col) as a double; throws DataError with row context on failure.
    double number(std::size_t row, std::size_t col) const;

    std::string source;  // file name for error messages
};

CsvTable parse_csv(std::string_view text, std::string source = "<memory>");
CsvTable read_csv(const std::filesystem::path& path);
std::string to_csv_string(const CsvTable& table);
void write_csv_atomic(const CsvTable& table, const std::filesystem::path& path);

/// Shortest representation that parses back to the same double.
std::string format_double(double v);

/// Writes to a sibling temporary file then renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace gasrl
