#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace osca::cli {

// Header row plus cells; numeric columns are parsed on demand.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    int column(const std::string& name) const;  // throws IoError if absent
    std::vector<double> numbers(const std::string& name) const;
    std::vector<std::string> strings(const std::string& name) const;
};

CsvTable read_csv(const std::filesystem::path& path);

// Static SVG renderings of CSVs the CLI has already written.

// One polyline per y column against x_column.
void plot_lines(const std::filesystem::path& csv, const std::string& x_column, const std::vector<std::string>& y_columns,
                const std::string& title, const std::filesystem::path& svg);

// Rows x columns grid; the first CSV column holds row labels.
void plot_heatmap(const std::filesystem::path& csv, const std::string& title, const std::filesystem::path& svg);

void plot_bars(const std::filesystem::path& csv, const std::string& label_column, const std::string& value_column,
               const std::string& title, const std::filesystem::path& svg);

}  // namespace osca::cli
