#include "hetsched/svg_plot.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <fmt/format.h>

namespace hetsched {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 440.0;
constexpr double kLeft = 90.0;
constexpr double kRight = 170.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;
constexpr int kTicks = 5;

constexpr const char* kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                   "#9467bd", "#8c564b", "#e377c2", "#7f7f7f"};
// Dashes keep overlapping series distinguishable.
constexpr const char* kDashes[] = {"", "8 4", "2 3", "10 3 2 3"};

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    cells.push_back(cell);
  }
  if (!line.empty() && line.back() == ',') {
    cells.emplace_back();
  }
  return cells;
}

double to_number(const std::string& cell, std::size_t line) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (ec != std::errc() || ptr != cell.data() + cell.size()) {
    throw std::runtime_error(fmt::format("csv line {}: '{}' is not a number", line, cell));
  }
  return v;
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string tick_label(double v) { return fmt::format("{:.6g}", v); }

// 1, 2 or 5 times a power of ten, close to range / kTicks.
double nice_step(double range) {
  const double raw = range / kTicks;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  const double f = raw / mag;
  return (f <= 1.0 ? 1.0 : f <= 2.0 ? 2.0 : f <= 5.0 ? 5.0 : 10.0) * mag;
}

std::vector<double> ticks(double& lo, double& hi) {
  const double step = nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;
  std::vector<double> out;
  for (long k = 0; lo + static_cast<double>(k) * step <= hi + 0.5 * step; ++k) {
    const double v = lo + static_cast<double>(k) * step;
    out.push_back(std::abs(v) < 1e-12 * step ? 0.0 : v);
  }
  return out;
}

}  // namespace

CsvTable parse_csv(const std::string& text) {
  CsvTable t;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') {
      line.pop_back();
    }
    if (line.empty()) {
      continue;
    }
    auto cells = split(line);
    if (t.header.empty()) {
      t.header = std::move(cells);
      continue;
    }
    if (cells.size() != t.header.size()) {
      throw std::runtime_error(fmt::format("csv line {}: {} cells, header has {}", lineno,
                                           cells.size(), t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      row.push_back(to_number(c, lineno));
    }
    t.rows.push_back(std::move(row));
  }
  if (t.header.empty()) {
    throw std::runtime_error("csv has no header");
  }
  return t;
}

std::string render_line_chart(const CsvTable& table, const std::string& title,
                              const std::string& y_label) {
  const double plot_w = kWidth - kLeft - kRight;
  const double plot_h = kHeight - kTop - kBottom;

  double x_lo = 0.0, x_hi = 1.0, y_lo = 0.0, y_hi = 1.0;
  if (!table.rows.empty()) {
    x_lo = x_hi = table.rows.front()[0];
    y_lo = y_hi = table.rows.front().size() > 1 ? table.rows.front()[1] : 0.0;
    for (const auto& row : table.rows) {
      x_lo = std::min(x_lo, row[0]);
      x_hi = std::max(x_hi, row[0]);
      for (std::size_t c = 1; c < row.size(); ++c) {
        y_lo = std::min(y_lo, row[c]);
        y_hi = std::max(y_hi, row[c]);
      }
    }
  }
  y_lo = std::min(y_lo, 0.0);
  if (x_hi == x_lo) {
    x_hi = x_lo + 1.0;
  }
  if (y_hi == y_lo) {
    y_hi = y_lo + (y_lo == 0.0 ? 1.0 : std::abs(y_lo));
  }
  const std::vector<double> x_ticks = ticks(x_lo, x_hi);
  y_hi += 0.02 * (y_hi - y_lo);  // headroom so a series at the maximum stays visible
  const std::vector<double> y_ticks = ticks(y_lo, y_hi);

  auto px = [&](double x) { return kLeft + (x - x_lo) / (x_hi - x_lo) * plot_w; };
  auto py = [&](double y) { return kTop + plot_h - (y - y_lo) / (y_hi - y_lo) * plot_h; };

  std::string s;
  s += fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{0}\" height=\"{1}\" "
      "viewBox=\"0 0 {0} {1}\" font-family=\"sans-serif\" font-size=\"12\">\n",
      kWidth, kHeight);
  s += fmt::format("<rect width=\"{}\" height=\"{}\" fill=\"white\"/>\n", kWidth, kHeight);
  s += fmt::format("<text x=\"{:.2f}\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">{}</text>\n",
                   kLeft + plot_w / 2.0, escape(title));

  for (double fy : y_ticks) {
    s += fmt::format(
        "<line x1=\"{0:.2f}\" y1=\"{1:.2f}\" x2=\"{2:.2f}\" y2=\"{1:.2f}\" stroke=\"#e0e0e0\"/>\n",
        kLeft, py(fy), kLeft + plot_w);
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"end\">{}</text>\n", kLeft - 6,
                     py(fy) + 4, tick_label(fy));
  }
  for (double fx : x_ticks) {
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n", px(fx),
                     kTop + plot_h + 18, tick_label(fx));
  }
  s += fmt::format(
      "<rect x=\"{:.2f}\" y=\"{:.2f}\" width=\"{:.2f}\" height=\"{:.2f}\" fill=\"none\" "
      "stroke=\"black\"/>\n",
      kLeft, kTop, plot_w, plot_h);
  s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\" text-anchor=\"middle\">{}</text>\n",
                   kLeft + plot_w / 2.0, kHeight - 16, escape(table.header[0]));
  s += fmt::format(
      "<text x=\"18\" y=\"{0:.2f}\" text-anchor=\"middle\" transform=\"rotate(-90 18 {0:.2f})\">"
      "{1}</text>\n",
      kTop + plot_h / 2.0, escape(y_label));

  for (std::size_t c = 1; c < table.header.size(); ++c) {
    const char* color = kColors[(c - 1) % std::size(kColors)];
    const char* dash = kDashes[(c - 1) % std::size(kDashes)];
    std::string points;
    for (const auto& row : table.rows) {
      points += fmt::format("{}{:.2f},{:.2f}", points.empty() ? "" : " ", px(row[0]), py(row[c]));
    }
    s += fmt::format("<polyline fill=\"none\" stroke=\"{}\" stroke-width=\"1.8\"", color);
    if (*dash) {
      s += fmt::format(" stroke-dasharray=\"{}\"", dash);
    }
    s += fmt::format(" points=\"{}\"/>\n", points);

    const double ly = kTop + 12.0 + 20.0 * static_cast<double>(c - 1);
    const double lx = kLeft + plot_w + 14.0;
    s += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" stroke=\"{}\" "
                     "stroke-width=\"1.8\"",
                     lx, ly, lx + 28.0, ly, color);
    if (*dash) {
      s += fmt::format(" stroke-dasharray=\"{}\"", dash);
    }
    s += "/>\n";
    s += fmt::format("<text x=\"{:.2f}\" y=\"{:.2f}\">{}</text>\n", lx + 34.0, ly + 4.0,
                     escape(table.header[c]));
  }
  s += "</svg>\n";
  return s;
}

}  // namespace hetsched
