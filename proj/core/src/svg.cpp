#include "homnet/svg.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "homnet/errors.hpp"

namespace homnet::svg {

namespace {

std::string num(double v) {
  if (!std::isfinite(v)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4g", v);
  return buf;
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", v);
  return buf;
}

std::string escape(const std::string& s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string header(double width, double height) {
  return "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + coord(width) + "\" height=\"" +
         coord(height) + "\" viewBox=\"0 0 " + coord(width) + " " + coord(height) +
         "\" font-family=\"monospace\" font-size=\"12\">\n"
         "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
}

std::string text(double x, double y, const std::string& s, const std::string& extra = "") {
  return "<text x=\"" + coord(x) + "\" y=\"" + coord(y) + "\"" + (extra.empty() ? "" : " ") +
         extra + ">" + escape(s) + "</text>\n";
}

std::string rect(double x, double y, double w, double h, const std::string& fill,
                 const std::string& extra = "") {
  return "<rect x=\"" + coord(x) + "\" y=\"" + coord(y) + "\" width=\"" + coord(w) +
         "\" height=\"" + coord(h) + "\" fill=\"" + fill + "\"" +
         (extra.empty() ? "" : " " + extra) + "/>\n";
}

}  // namespace

std::string heatmap(const std::vector<std::vector<double>>& values,
                    const std::vector<std::string>& row_labels,
                    const std::vector<std::string>& col_labels, const std::string& title) {
  const size_t n_rows = values.size();
  const size_t n_cols = n_rows == 0 ? 0 : values[0].size();
  if (row_labels.size() != n_rows || col_labels.size() != n_cols)
    throw DataError("heatmap: label counts do not match the value grid");
  double vmin = 0.0, vmax = 0.0;
  bool any = false;
  for (const auto& row : values) {
    if (row.size() != n_cols) throw DataError("heatmap: ragged value grid");
    for (double v : row) {
      if (!std::isfinite(v)) continue;
      vmin = any ? std::min(vmin, v) : v;
      vmax = any ? std::max(vmax, v) : v;
      any = true;
    }
  }
  const double cell = 64.0, left = 90.0, top = 48.0;
  const double width = left + double(n_cols) * cell + 24.0;
  const double height = top + double(n_rows) * cell + 40.0;
  std::string out = header(width, height);
  out += text(12, 24, title, "font-size=\"14\"");
  for (size_t c = 0; c < n_cols; ++c)
    out += text(left + (double(c) + 0.5) * cell, top - 8, col_labels[c],
                "text-anchor=\"middle\"");
  for (size_t r = 0; r < n_rows; ++r) {
    out += text(left - 8, top + (double(r) + 0.5) * cell + 4, row_labels[r],
                "text-anchor=\"end\"");
    for (size_t c = 0; c < n_cols; ++c) {
      const double v = values[r][c];
      std::string fill = "#dddddd";
      if (std::isfinite(v) && any) {
        const double t = vmax > vmin ? (v - vmin) / (vmax - vmin) : 0.5;
        // white -> steel blue
        const int red = int(std::lround(255.0 - t * (255.0 - 70.0)));
        const int green = int(std::lround(255.0 - t * (255.0 - 130.0)));
        const int blue = int(std::lround(255.0 - t * (255.0 - 180.0)));
        char buf[8];
        std::snprintf(buf, sizeof buf, "#%02x%02x%02x", red, green, blue);
        fill = buf;
      }
      const double x = left + double(c) * cell, y = top + double(r) * cell;
      out += rect(x, y, cell - 2, cell - 2, fill, "stroke=\"#888888\"");
      out += text(x + cell / 2 - 1, y + cell / 2 + 4, num(v), "text-anchor=\"middle\"");
    }
  }
  out += "</svg>\n";
  return out;
}

std::string histogram_pair(const std::vector<int64_t>& counts_a,
                           const std::vector<int64_t>& counts_b, double lo, double hi,
                           const std::string& label_a, const std::string& label_b,
                           const std::string& title) {
  if (counts_a.size() != counts_b.size() || counts_a.empty())
    throw DataError("histogram_pair: need two equal nonempty count vectors");
  int64_t peak = 1;
  for (size_t i = 0; i < counts_a.size(); ++i)
    peak = std::max({peak, counts_a[i], counts_b[i]});
  const double plot_w = 560.0, plot_h = 240.0, left = 60.0, top = 48.0;
  const double width = left + plot_w + 24.0;
  const double height = top + plot_h + 56.0;
  const double bw = plot_w / double(counts_a.size());
  std::string out = header(width, height);
  out += text(12, 24, title, "font-size=\"14\"");
  out += rect(left, top, plot_w, plot_h, "none", "stroke=\"#888888\"");
  auto bars = [&](const std::vector<int64_t>& counts, const char* fill) {
    for (size_t i = 0; i < counts.size(); ++i) {
      if (counts[i] <= 0) continue;
      const double h = plot_h * double(counts[i]) / double(peak);
      out += rect(left + double(i) * bw, top + plot_h - h, bw, h, fill,
                  "fill-opacity=\"0.55\"");
    }
  };
  bars(counts_a, "#4682b4");
  bars(counts_b, "#cd5c5c");
  out += text(left, top + plot_h + 18, num(lo));
  out += text(left + plot_w, top + plot_h + 18, num(hi), "text-anchor=\"end\"");
  out += text(left - 8, top + 12, std::to_string(peak), "text-anchor=\"end\"");
  out += rect(left + plot_w - 170, top + 8, 12, 12, "#4682b4", "fill-opacity=\"0.55\"");
  out += text(left + plot_w - 152, top + 18, label_a);
  out += rect(left + plot_w - 170, top + 26, 12, 12, "#cd5c5c", "fill-opacity=\"0.55\"");
  out += text(left + plot_w - 152, top + 36, label_b);
  out += "</svg>\n";
  return out;
}

std::string bar_chart(const std::vector<std::string>& labels, const std::vector<double>& values,
                      const std::string& title) {
  if (labels.size() != values.size() || labels.empty())
    throw DataError("bar_chart: need matching nonempty labels and values");
  double vmax = 0.0;
  for (double v : values)
    if (std::isfinite(v)) vmax = std::max(vmax, std::abs(v));
  if (vmax == 0.0) vmax = 1.0;
  const double row_h = 26.0, left = 150.0, plot_w = 420.0, top = 48.0;
  const double zero_x = left + plot_w / 2.0;
  const double width = left + plot_w + 90.0;
  const double height = top + double(labels.size()) * row_h + 24.0;
  std::string out = header(width, height);
  out += text(12, 24, title, "font-size=\"14\"");
  out += "<line x1=\"" + coord(zero_x) + "\" y1=\"" + coord(top - 6) + "\" x2=\"" +
         coord(zero_x) + "\" y2=\"" + coord(top + double(labels.size()) * row_h + 6) +
         "\" stroke=\"#888888\"/>\n";
  for (size_t i = 0; i < labels.size(); ++i) {
    const double y = top + double(i) * row_h;
    out += text(left - 8, y + row_h / 2 + 4, labels[i], "text-anchor=\"end\"");
    const double v = values[i];
    if (!std::isfinite(v)) {
      out += text(zero_x + 6, y + row_h / 2 + 4, "nan");
      continue;
    }
    const double len = (plot_w / 2.0) * std::abs(v) / vmax;
    const double x = v >= 0.0 ? zero_x : zero_x - len;
    out += rect(x, y + 4, std::max(len, 0.5), row_h - 8, v >= 0.0 ? "#4682b4" : "#cd5c5c");
    out += text(v >= 0.0 ? zero_x + len + 6 : zero_x - len - 6, y + row_h / 2 + 4, num(v),
                v >= 0.0 ? "" : "text-anchor=\"end\"");
  }
  out += "</svg>\n";
  return out;
}

void write_file(const std::string& content, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw DataError("cannot write " + path.generic_string());
  out << content;
  out.flush();
  if (!out) throw DataError("failed writing " + path.generic_string());
}

}  // namespace homnet::svg
