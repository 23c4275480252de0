#pragma once

// Static line charts rendered from CSV text. Output depends only on the
// input text, so regenerating from the same CSV gives identical bytes.

#include <string>
#include <vector>

namespace hetsched {

/// Numeric CSV with a header row. The first column is the x axis.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};

/// Throws std::runtime_error on ragged rows or non-numeric cells.
CsvTable parse_csv(const std::string& text);

/// One polyline per column after the first, with axes, ticks and a legend.
std::string render_line_chart(const CsvTable& table, const std::string& title,
                              const std::string& y_label);

}  // namespace hetsched
