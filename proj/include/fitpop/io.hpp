#pragma once

// Deterministic file emission: shortest round-trip number formatting, atomic
// writes (temp file + rename), CSV assembly, and a minimal SVG line plot.
// Output bytes depend only on the data, never on thread count or timing.

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace fitpop {

inline std::string fmt_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

inline std::string fmt_fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*g", digits, v);
  return std::string(buf);
}

inline void atomic_write_file(const std::filesystem::path& path,
                              const std::string& content) {
  std::filesystem::create_directories(path.parent_path().empty()
                                          ? "."
                                          : path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp);
    out << content;
    if (!out) throw std::runtime_error("write failed: " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::string to_string() const {
    std::string out;
    join(out, header);
    for (const auto& row : rows) join(out, row);
    return out;
  }

 private:
  static void join(std::string& out, const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) out += ',';
      out += cells[i];
    }
    out += '\n';
  }
};

// One polyline per series over shared x values; linear axes, fixed canvas.
struct SvgSeries {
  std::string label;
  std::string color;
  std::vector<double> x;
  std::vector<double> y;
};

inline std::string svg_line_plot(const std::string& title,
                                 const std::vector<SvgSeries>& series,
                                 bool log_x = false, bool log_y = false) {
  constexpr double width = 640, height = 420, pad = 56;
  double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
  bool first = true;
  auto tx = [&](double v) { return log_x ? std::log10(v) : v; };
  auto ty = [&](double v) { return log_y ? std::log10(v) : v; };
  for (const auto& s : series)
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      const double vx = tx(s.x[i]), vy = ty(s.y[i]);
      if (first) {
        xmin = xmax = vx;
        ymin = ymax = vy;
        first = false;
      }
      xmin = std::min(xmin, vx);
      xmax = std::max(xmax, vx);
      ymin = std::min(ymin, vy);
      ymax = std::max(ymax, vy);
    }
  if (xmax <= xmin) xmax = xmin + 1;
  if (ymax <= ymin) ymax = ymin + 1;
  auto px = [&](double v) {
    return pad + (tx(v) - xmin) / (xmax - xmin) * (width - 2 * pad);
  };
  auto py = [&](double v) {
    return height - pad - (ty(v) - ymin) / (ymax - ymin) * (height - 2 * pad);
  };

  std::string svg;
  svg += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" +
         fmt_fixed(width, 6) + "\" height=\"" + fmt_fixed(height, 6) + "\">\n";
  svg += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  svg += "<text x=\"" + fmt_fixed(width / 2, 6) +
         "\" y=\"24\" text-anchor=\"middle\" font-size=\"15\">" + title +
         "</text>\n";
  // axes
  svg += "<line x1=\"" + fmt_fixed(pad, 6) + "\" y1=\"" +
         fmt_fixed(height - pad, 6) + "\" x2=\"" + fmt_fixed(width - pad, 6) +
         "\" y2=\"" + fmt_fixed(height - pad, 6) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  svg += "<line x1=\"" + fmt_fixed(pad, 6) + "\" y1=\"" + fmt_fixed(pad, 6) +
         "\" x2=\"" + fmt_fixed(pad, 6) + "\" y2=\"" +
         fmt_fixed(height - pad, 6) +
         "\" stroke=\"black\" stroke-width=\"1\"/>\n";
  int legend_row = 0;
  for (const auto& s : series) {
    svg += "<polyline fill=\"none\" stroke=\"" + s.color +
           "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (i) svg += ' ';
      svg += fmt_fixed(px(s.x[i]), 6) + "," + fmt_fixed(py(s.y[i]), 6);
    }
    svg += "\"/>\n";
    svg += "<text x=\"" + fmt_fixed(width - pad - 150, 6) + "\" y=\"" +
           fmt_fixed(pad + 16 * legend_row, 6) + "\" font-size=\"12\" fill=\"" +
           s.color + "\">" + s.label + "</text>\n";
    ++legend_row;
  }
  svg += "</svg>\n";
  return svg;
}

}  // namespace fitpop
